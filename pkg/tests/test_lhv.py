"""Tests for common-cause models."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pytest import raises

from pybellaudit import (CapExceededError, ConfigError, NotFittedError,
                         SignalingError)
from pybellaudit.correlations import (CorrelationTable, fringe_table, pr_box,
                                      uniform_table)
from pybellaudit.lhv import (CommModel, CommonCauseModel,
                             DeterministicStrategy, LocalModel,
                             build_comm_model, build_single_setting_model,
                             load_model, local_polytope_membership, predict,
                             save_model, strategy_grid)
from pybellaudit.metrics import max_abs_error

SQRT2_PHASES_A = [0., np.pi / 2]
SQRT2_PHASES_B = [-np.pi / 4, np.pi / 4]


def _single_setting_table(rng, n_x, n_a=2, n_b=2):
    """Random no-signaling table with one B setting."""
    p_b = rng.dirichlet(np.ones(n_b))
    cond = rng.dirichlet(np.ones(n_a), size=(n_x, n_b))      # [x, b, a]
    probs = cond.transpose(0, 2, 1) * p_b[None, None, :]
    return CorrelationTable(probs[:, None])


def test_predict_examples():
    """Test the prediction of hand-built mixtures."""
    model = LocalModel.from_components([
        (0.5, DeterministicStrategy((0, 0), (0, 0))),
        (0.5, DeterministicStrategy((1, 1), (1, 1)))])
    table = predict(model)
    assert_allclose(table.probs[:, :, 0, 0], 0.5)
    assert_allclose(table.probs[:, :, 1, 1], 0.5)
    assert len(model) == 2
    assert model.components[1][1] == DeterministicStrategy((1, 1), (1, 1))

    model = LocalModel([1.], [[0, 1]], [[1]])
    probs = predict(model).probs
    assert probs[0, 0, 0, 1] == 1. and probs[1, 0, 1, 1] == 1.
    with raises(ValueError, match='does not match'):
        predict(model, shape=(2, 2, 2, 2))


@pytest.mark.parametrize("weights, msg", [
    ([], 'at least one component'),
    ([0.5, 0.6], 'sum to'),
    ([1.5, -0.5], '> 0'),
])
def test_model_weight_validation(weights, msg):
    """Test invalid component weights are rejected."""
    n = len(weights)
    with raises(ValueError, match=msg):
        LocalModel(weights, np.zeros((n, 2), int), np.zeros((n, 2), int))


def test_single_setting_random_tables():
    """Test the single-setting model reproduces random tables exactly."""
    rng = np.random.RandomState(0)
    for _ in range(100):
        n_x = rng.randint(1, 6)
        n_a, n_b = rng.randint(2, 4, size=2)
        table = _single_setting_table(rng, n_x, n_a, n_b)
        model = build_single_setting_model(table)
        assert max_abs_error(predict(model), table) < 1e-12


def test_single_setting_fringe():
    """Test an eight-phase fringe scan has a common-cause model."""
    phases = np.linspace(0, 2 * np.pi, 8, endpoint=False)
    table = fringe_table(phases, [0.], visibility=0.95)
    model = build_single_setting_model(table)
    assert model.shape == (8, 1, 2, 2)
    assert max_abs_error(predict(model), table) < 1e-12


def test_single_setting_swapped():
    """Test a single A setting is handled by exchanging the parties."""
    table = _single_setting_table(np.random.RandomState(3), 4).swap_parties()
    model = build_single_setting_model(table)
    assert model.shape == (1, 4, 2, 2)
    assert max_abs_error(predict(model), table) < 1e-12


def test_single_setting_errors():
    """Test signaling and two-sided tables are refused."""
    probs = np.array([[[[0.3, 0.2], [0.2, 0.3]]],
                      [[[0.6, 0.1], [0.2, 0.1]]]])
    with raises(SignalingError) as excinfo:
        build_single_setting_model(CorrelationTable(probs))
    assert excinfo.value.side == 'B'
    assert_allclose(excinfo.value.deviation, 0.3)
    with raises(ValueError, match='one setting'):
        build_single_setting_model(uniform_table())


def test_single_setting_cap():
    """Test the component cap."""
    table = fringe_table(np.linspace(0, 1, 12), [0.], visibility=0.5)
    with raises(CapExceededError):
        build_single_setting_model(table, max_strategies=1000)


@pytest.mark.parametrize("table", [
    pr_box(),
    fringe_table(SQRT2_PHASES_A, SQRT2_PHASES_B),
    uniform_table(3, 2, 2, 3),
])
@pytest.mark.parametrize("receiver", ['A', 'B'])
def test_comm_model(table, receiver):
    """Test one-way communication reproduces nonlocal tables."""
    model = build_comm_model(table, receiver=receiver)
    assert isinstance(model, CommModel)
    assert model.receiver == receiver
    assert model.shape == table.shape
    assert max_abs_error(predict(model), table) < 1e-12


def test_comm_model_pr_box_components():
    """Test the PR box needs exactly four communication strategies."""
    model = build_comm_model(pr_box())
    assert len(model) == 4
    assert_allclose(model.weights, 0.25)


def test_comm_model_sender_must_not_signal():
    """Test a sender marginal that depends on the receiver is refused."""
    probs = np.zeros((2, 1, 2, 2))
    probs[0, 0, 0, 0] = 1.
    probs[1, 0, 1, 1] = 1.
    with raises(SignalingError):
        build_comm_model(CorrelationTable(probs), receiver='A')
    model = build_comm_model(CorrelationTable(probs), receiver='B')
    assert max_abs_error(predict(model), probs) == 0.


def test_membership_pr_box():
    """Test the PR box is certified nonlocal."""
    result = local_polytope_membership(pr_box())
    assert not result.feasible
    assert result.model is None
    cert = result.certificate
    assert cert.violation > 1e-6
    assert cert.check(pr_box())
    assert not cert.check(uniform_table())


def test_membership_local_tables():
    """Test local tables get an explicit mixture."""
    for table in (uniform_table(),
                  fringe_table(SQRT2_PHASES_A, SQRT2_PHASES_B, 0.6),
                  uniform_table(2, 3, 3, 2)):
        result = local_polytope_membership(table)
        assert result.feasible
        assert max_abs_error(predict(result.model), table) < 1e-7
        assert np.all(result.model.weights > 0)


def test_membership_tsirelson_table():
    """Test the maximally violating fringe table is outside the polytope."""
    table = fringe_table(SQRT2_PHASES_A, SQRT2_PHASES_B)
    result = local_polytope_membership(table)
    assert not result.feasible
    assert result.certificate.check(table)


def test_membership_cap():
    """Test the enumeration cap."""
    with raises(CapExceededError):
        local_polytope_membership(pr_box(), max_strategies=10)


def test_strategy_grid():
    """Test the lexicographic order of response maps."""
    grid = strategy_grid(2, 3)
    assert grid.shape == (9, 2)
    assert grid[0].tolist() == [0, 0]
    assert grid[1].tolist() == [0, 1]
    assert grid[-1].tolist() == [2, 2]


def test_common_cause_model():
    """Test the estimator interface."""
    table = _single_setting_table(np.random.RandomState(5), 3)
    ccm = CommonCauseModel()
    assert ccm.get_params()['method'] == 'auto'
    with raises(NotFittedError):
        ccm.predict()
    ccm.fit(table)
    assert ccm.method_ == 'single-setting'
    assert ccm.score(table) < 1e-12

    ccm = CommonCauseModel().fit(pr_box())
    assert ccm.method_ == 'polytope'
    assert ccm.model_ is None
    with raises(ValueError, match='outside the local polytope'):
        ccm.predict()

    ccm = CommonCauseModel(method='comm', receiver='B').fit(pr_box())
    assert ccm.score(pr_box()) < 1e-12
    ccm.set_params(method='polytope')
    assert ccm.method == 'polytope'
    with raises(ValueError, match='method must be'):
        CommonCauseModel(method='magic')
    with raises(ValueError, match='CorrelationTable'):
        CommonCauseModel().fit(np.ones((1, 1, 2, 2)) / 4)


@pytest.mark.parametrize("model", [
    LocalModel([0.25, 0.75], [[0, 1], [1, 1]], [[1], [0]]),
    build_comm_model(pr_box(), receiver='B'),
])
def test_model_save_load(tmp_path, model):
    """Test models survive the JSON model format."""
    fname = str(tmp_path / 'model.json')
    save_model(model, fname)
    loaded = load_model(fname)
    assert type(loaded) is type(model)
    assert loaded.shape == model.shape
    assert max_abs_error(predict(loaded), predict(model)) == 0.


def test_load_model_errors(tmp_path):
    """Test malformed model files raise ConfigError."""
    fname = tmp_path / 'model.json'
    fname.write_text('{"type": "local", "components": []}')
    with raises(ConfigError, match='malformed'):
        load_model(str(fname))
    fname.write_text('[1, 2')
    with raises(ConfigError, match='not valid JSON'):
        load_model(str(fname))
