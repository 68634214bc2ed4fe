"""Tests for correlation tables."""

import json

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from pytest import raises

from pybellaudit import ConfigError
from pybellaudit.correlations import (CorrelationTable, correlator,
                                      correlators, deterministic_table,
                                      fringe_table, load_table, marginal_a,
                                      marginal_b, no_signaling_check, pr_box,
                                      save_table, uniform_table)


def _random_table(rng, shape):
    probs = rng.uniform(size=shape)
    return CorrelationTable(probs / probs.sum(axis=(2, 3), keepdims=True))


def test_marginals():
    """Test marginals of the uniform, deterministic and PR tables."""
    assert_allclose(marginal_a(uniform_table(), 0, 1), [0.5, 0.5])
    assert_allclose(marginal_b(deterministic_table([0, 0], [0, 0]), 1, 0),
                    [1., 0.])
    box = pr_box()
    for x, y in np.ndindex(2, 2):
        assert_allclose(marginal_a(box, x, y), [0.5, 0.5])
        assert_allclose(marginal_b(box, x, y), [0.5, 0.5])


def test_marginal_index_error():
    """Test out-of-range settings raise IndexError."""
    with raises(IndexError):
        marginal_a(pr_box(), 2, 0)
    with raises(IndexError):
        correlator(pr_box(), 0, -1)


def test_no_signaling_passes():
    """Test no-signaling tables pass the check."""
    assert no_signaling_check(pr_box()) == []
    assert no_signaling_check(uniform_table(3, 2, 4, 3)) == []
    phases = np.linspace(0, np.pi, 5)
    assert no_signaling_check(fringe_table(phases, [0.3, 1.1], 0.8)) == []


def test_no_signaling_violation():
    """Test a marginal shifted by 0.2 is reported."""
    probs = np.array([[[[0.3, 0.2], [0.2, 0.3]],
                       [[0.4, 0.3], [0.1, 0.2]]]])
    violations = no_signaling_check(CorrelationTable(probs))
    assert len(violations) == 1
    side, settings, deviation = violations[0]
    assert side == 'A'
    assert settings == (0, 0, 1)
    assert_allclose(deviation, 0.2)


def test_correlator():
    """Test correlators of reference tables."""
    assert_allclose(correlator(deterministic_table([1], [1]), 0, 0), 1.)
    assert_allclose(correlator(uniform_table(), 1, 1), 0.)
    table = fringe_table([np.pi / 8], [np.pi / 8], visibility=0.9)
    assert_allclose(correlator(table, 0, 0), 0.636396, atol=1e-6)
    assert_allclose(correlators(pr_box()), [[1., 1.], [1., -1.]])


def test_correlator_sign_flip():
    """Test relabeling A's outcomes flips every correlator."""
    table = _random_table(np.random.RandomState(0), (3, 2, 2, 2))
    flipped = CorrelationTable(table.probs[:, :, ::-1, :])
    assert_allclose(correlators(flipped), -correlators(table))


def test_correlator_needs_binary():
    """Test correlators reject non-binary alphabets."""
    with raises(ValueError, match='binary'):
        correlator(uniform_table(outcomes_a=3), 0, 0)


@pytest.mark.parametrize("probs, msg", [
    (np.full((2, 2, 2), 0.25), '4-dimensional'),
    (np.full((2, 0, 2, 2), 0.25), 'at least one setting'),
    (np.full((1, 1, 1, 2), 0.5), 'at least two outcomes'),
    (np.full((1, 1, 2, 2), 0.3), 'sum to'),
    (np.array([[[[0.6, -0.1], [0.25, 0.25]]]]), 'negative'),
    (np.array([[[[np.nan, 0.5], [0.25, 0.25]]]]), 'finite'),
])
def test_table_validation(probs, msg):
    """Test malformed tables are rejected."""
    with raises(ValueError, match=msg):
        CorrelationTable(probs)


def test_table_clamps_tiny_negatives():
    """Test entries down to -1e-12 are clamped to zero."""
    table = CorrelationTable([[[[0.5, -1e-13], [0., 0.5]]]])
    assert table.probs[0, 0, 0, 1] == 0.
    assert not table.probs.flags.writeable


def test_from_counts():
    """Test empirical tables from counts."""
    counts = np.array([[[[30, 10], [20, 40]]]])
    table = CorrelationTable.from_counts(counts)
    assert_allclose(table.probs, counts / 100.)
    with raises(ValueError, match='at least one count'):
        CorrelationTable.from_counts(np.zeros((1, 1, 2, 2)))


def test_from_counts_pooled_is_no_signaling():
    """Test pooling B's marginal gives an exactly no-signaling table."""
    rng = np.random.RandomState(1)
    counts = rng.randint(1, 100, size=(4, 1, 2, 3))
    raw = CorrelationTable.from_counts(counts)
    assert no_signaling_check(raw) != []
    pooled = CorrelationTable.from_counts(counts, pool_marginal='b')
    marg_b = pooled.probs.sum(axis=2)[:, 0]
    assert_allclose(marg_b, np.tile(marg_b[0], (4, 1)), atol=1e-15)
    mirrored = CorrelationTable.from_counts(counts.transpose(1, 0, 3, 2),
                                            pool_marginal='a')
    assert_allclose(mirrored.probs, pooled.swap_parties().probs)
    with raises(ValueError, match='single B setting'):
        CorrelationTable.from_counts(np.ones((2, 2, 2, 2)), 'b')


def test_save_load_exact(tmp_path):
    """Test the table file round-trips bit-exactly."""
    table = _random_table(np.random.RandomState(7), (3, 2, 2, 4))
    fname = str(tmp_path / 'table.json')
    save_table(table, fname)
    assert load_table(fname) == table
    with open(fname) as fid:
        data = json.load(fid)
    assert data['settings_a'] == 3 and data['outcomes_b'] == 4


def test_load_table_diagnostics(tmp_path):
    """Test malformed table files raise ConfigError."""
    fname = tmp_path / 'bad.json'
    fname.write_text(json.dumps(dict(settings_a=1, settings_b=1,
                                     outcomes_a=2, outcomes_b=2,
                                     probs=[[[[1., 0.]]]])))
    with raises(ConfigError, match='header declares'):
        load_table(str(fname))
    fname.write_text('{"probs": ')
    with raises(ConfigError, match='not valid JSON'):
        load_table(str(fname))
    fname.write_text('{"probs": [[[[1.0]]]]}')
    with raises(ConfigError) as excinfo:
        load_table(str(fname))
    assert len(excinfo.value.diagnostics) == 4


def test_swap_parties():
    """Test exchanging the parties twice is the identity."""
    table = _random_table(np.random.RandomState(2), (2, 3, 2, 2))
    swapped = table.swap_parties()
    assert swapped.shape == (3, 2, 2, 2)
    assert_array_equal(swapped.swap_parties().probs, table.probs)
    assert_allclose(correlators(swapped), correlators(table).T)


def test_fringe_table():
    """Test the cosine fringe table."""
    table = fringe_table([0., np.pi], [0.], visibility=1.)
    assert_allclose(table.probs[0, 0], [[0.5, 0.], [0., 0.5]], atol=1e-15)
    assert_allclose(table.probs[1, 0], [[0., 0.5], [0.5, 0.]], atol=1e-15)
    with raises(ValueError, match='visibility'):
        fringe_table([0.], [0.], visibility=1.5)
