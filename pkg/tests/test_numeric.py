"""Tests for the numeric kernel."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from pytest import raises
from scipy.optimize import linprog
from scipy.stats import chisquare

from pybellaudit import pr_box
from pybellaudit.numeric import (LinearProgram, solve_lp, check_farkas,
                                 minimize_free, rng_stream)
from pybellaudit.lhv import _strategy_matrix

# first ten raw words of rng_stream(20081, 7), also listed in doc/formats.rst
PHILOX_VECTOR = [8891756663241339647, 9887119383088544665,
                 5514867530516453985, 7629767669348789313,
                 12320556032565845512, 12554200675360198051,
                 3003678446024378121, 15450007417213249069,
                 4117078451616512980, 13252193383444224737]


def test_lp_maximize_bounded():
    """Test max x subject to x <= 1."""
    lp = LinearProgram(c=[-1.], A=[[1.]], b=[1.], senses=['<='])
    res = solve_lp(lp)
    assert res.status == 'optimal'
    assert_allclose(res.x, [1.])
    assert_allclose(res.objective, -1.)


def test_lp_infeasible_certificate():
    """Test the Farkas certificate of {x <= 0, x >= 1}."""
    lp = LinearProgram(c=[0.], A=[[1.], [1.]], b=[0., 1.],
                       senses=['<=', '>='])
    res = solve_lp(lp)
    assert res.status == 'infeasible'
    assert res.x is None
    assert check_farkas(lp, res.dual)


def test_lp_unbounded():
    """Test that an unbounded program is reported."""
    lp = LinearProgram(c=[-1., 0.], A=[[1., -1.]], b=[1.], senses=['<='])
    assert solve_lp(lp).status == 'unbounded'


def test_lp_strong_duality():
    """Test primal and dual objectives agree on random bounded programs."""
    rng = np.random.RandomState(42)
    for _ in range(20):
        n_rows, n_vars = rng.randint(2, 8), rng.randint(2, 8)
        A = rng.uniform(0.1, 1., (n_rows, n_vars))
        b = rng.uniform(1., 2., n_rows)
        c = -rng.uniform(0.1, 1., n_vars)
        lp = LinearProgram(c, A, b, ['<='] * n_rows)
        res = solve_lp(lp)
        assert res.status == 'optimal'
        assert abs(res.objective - b.dot(res.dual)) < 1e-7
        assert np.all(A.dot(res.x) <= b + 1e-9)
        assert np.all(res.x >= -1e-9)


def test_lp_matches_linprog():
    """Test equality rows and general bounds against scipy's linprog."""
    rng = np.random.RandomState(0)
    for _ in range(20):
        n_rows, n_vars = 3, 6
        A = rng.randn(n_rows, n_vars)
        x_feasible = rng.uniform(-0.5, 1.5, n_vars)
        b = A.dot(x_feasible)
        c = rng.randn(n_vars)
        bounds = [(-1., 2.)] * n_vars
        res = solve_lp(LinearProgram(c, A, b, ['='] * n_rows, bounds))
        ref = linprog(c, A_eq=A, b_eq=b, bounds=bounds, method='highs')
        assert res.status == 'optimal'
        assert_allclose(res.objective, ref.fun, atol=1e-7)
        assert_allclose(A.dot(res.x), b, atol=1e-8)


def test_lp_pr_box_membership():
    """Test the PR box LP is infeasible with a valid Farkas certificate."""
    table = pr_box()
    D, _, _ = _strategy_matrix(table.shape)
    lp = LinearProgram(np.zeros(D.shape[1]), D, table.probs.ravel(),
                       ['='] * D.shape[0])
    res = solve_lp(lp)
    assert res.status == 'infeasible'
    assert check_farkas(lp, res.dual)


@pytest.mark.parametrize("kwargs", [
    dict(c=[1., 2.], A=[[1.]], b=[1.], senses=['<=']),
    dict(c=[1.], A=[[1.]], b=[1., 2.], senses=['<=']),
    dict(c=[1.], A=[[1.]], b=[1.], senses=['<']),
    dict(c=[1.], A=[[1.]], b=[1.], senses=['<=', '=']),
    dict(c=[1.], A=[[1.]], b=[1.], senses=['<='], bounds=[(2., 1.)]),
])
def test_lp_dimension_errors(kwargs):
    """Test inconsistent programs are rejected."""
    with raises(ValueError):
        LinearProgram(**kwargs)


def test_minimize_free_quadratic():
    """Test the pattern search finds the minimum of a quadratic."""
    x, value = minimize_free(lambda z: (z[0] - 3.) ** 2, dims=1, budget=20,
                             seed=1)
    assert abs(x[0] - 3.) < 1e-6
    assert value < 1e-12


def test_minimize_free_deterministic():
    """Test identical seeds give identical results."""
    def f(z):
        return np.sin(3 * z[0]) * np.cos(2 * z[1]) + 0.1 * z.dot(z)

    x1, v1 = minimize_free(f, 2, budget=5, seed=123)
    x2, v2 = minimize_free(f, 2, budget=5, seed=123)
    assert_array_equal(x1, x2)
    assert v1 == v2


def test_minimize_free_never_worse_than_start():
    """Test the result is no worse than the supplied start point."""
    def f(z):
        return np.abs(z).sum()

    x0 = np.array([0.3, -0.2, 0.1])
    _, value = minimize_free(f, 3, budget=1, seed=0, x0=x0)
    assert value <= f(x0)


def test_minimize_free_errors():
    """Test invalid budgets and dimensions raise."""
    with raises(ValueError, match='budget'):
        minimize_free(lambda z: 0., 1, budget=0, seed=0)
    with raises(ValueError, match='dims'):
        minimize_free(lambda z: 0., 0, budget=1, seed=0)


def test_rng_stream_vector():
    """Test the published first-10 raw words of a stream."""
    rng = rng_stream(20081, 7)
    words = rng.bit_generator.random_raw(10)
    assert [int(w) for w in words] == PHILOX_VECTOR


def test_rng_stream_reproducible_and_distinct():
    """Test streams repeat for equal keys and differ across ids."""
    a = rng_stream(5, 0).bit_generator.random_raw(100)
    b = rng_stream(5, 0).bit_generator.random_raw(100)
    c = rng_stream(5, 1).bit_generator.random_raw(100)
    assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_rng_stream_uniformity():
    """Test uniformity of the top byte with a chi-square test."""
    words = rng_stream(99, 3).bit_generator.random_raw(10 ** 6)
    counts = np.bincount((words >> np.uint64(56)).astype(np.int64),
                         minlength=256)
    assert chisquare(counts).pvalue > 0.001


@pytest.mark.parametrize("seed, stream_id", [(-1, 0), (0, -1), (2 ** 64, 0),
                                             (1.5, 0), (True, 0)])
def test_rng_stream_errors(seed, stream_id):
    """Test invalid keys raise."""
    with raises(ValueError):
        rng_stream(seed, stream_id)
