"""Tests for Bell expressions and their bounds."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pytest import raises

from pybellaudit import CapExceededError, ConfigError
from pybellaudit.bell import (BellExpression, chained_expression,
                              chained_phases, chained_tradeoff,
                              chsh_expression, critical_visibility, evaluate,
                              get_expression, local_bound_by_enumeration,
                              optimal_quantum_phases, quantum_chained_value,
                              quantum_value)
from pybellaudit.correlations import (deterministic_table, fringe_table,
                                      pr_box, uniform_table)
from pybellaudit.lhv import LocalModel, predict, strategy_grid


def test_chsh_coefficients():
    """Test the CHSH expression."""
    expr = chsh_expression()
    assert_allclose(expr.coefficients, [[1, 1], [1, -1]])
    assert expr.local_bound == 2.
    assert expr.name == 'chsh'


def test_chained_coefficients():
    """Test the chained expression for three settings."""
    expr = chained_expression(3)
    assert_allclose(expr.coefficients, [[1, 0, -1], [1, 1, 0], [0, 1, 1]])
    assert expr.local_bound == 4.
    assert_allclose(chained_expression(2).coefficients,
                    [[1, -1], [1, 1]])


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_local_bound_enumeration(n):
    """Test enumeration reproduces the declared local bound 2n - 2."""
    expr = chained_expression(n)
    assert local_bound_by_enumeration(expr) == 2 * n - 2


def test_local_bound_witness():
    """Test the first maximizing CHSH strategy is all +1."""
    bound, witness = local_bound_by_enumeration(chsh_expression(),
                                                return_witness=True)
    assert bound == 2.
    assert witness.response_a == (0, 0)
    assert witness.response_b == (0, 0)
    table = deterministic_table(witness.response_a, witness.response_b)
    assert evaluate(chsh_expression(), table) == bound


def test_deterministic_chsh_values():
    """Test every deterministic strategy gives CHSH = +/-2."""
    expr = chsh_expression()
    for ra in strategy_grid(2, 2):
        for rb in strategy_grid(2, 2):
            value = evaluate(expr, deterministic_table(ra, rb))
            assert value in (-2., 2.)


def test_local_models_respect_chsh():
    """Test random local mixtures never exceed the CHSH bound."""
    rng = np.random.RandomState(11)
    grid = strategy_grid(2, 2)
    for _ in range(200):
        k = rng.randint(1, 6)
        weights = rng.dirichlet(np.ones(k))
        model = LocalModel(weights, grid[rng.randint(4, size=k)],
                           grid[rng.randint(4, size=k)])
        assert abs(evaluate(chsh_expression(), predict(model))) <= 2 + 1e-12


def test_evaluate_pr_box():
    """Test the PR box reaches the algebraic maximum 4."""
    assert_allclose(evaluate(chsh_expression(), pr_box()), 4.)
    assert evaluate(chsh_expression(), uniform_table()) == 0.
    with raises(ValueError, match='does not fit'):
        evaluate(chained_expression(3), pr_box())


@pytest.mark.parametrize("n", [2, 3, 4, 5, 10])
def test_quantum_chained_value(n):
    """Test the closed form against the explicit phases."""
    phases_a, phases_b = chained_phases(n)
    value = quantum_value(chained_expression(n), phases_a, phases_b)
    assert_allclose(value, quantum_chained_value(n), atol=1e-9)
    table = fringe_table(phases_a, phases_b)
    assert_allclose(evaluate(chained_expression(n), table), value, atol=1e-9)


def test_quantum_chained_examples():
    """Test published quantum values and critical visibilities."""
    assert_allclose(quantum_chained_value(2), 2 * np.sqrt(2))
    assert_allclose(quantum_chained_value(10), 19.753767, atol=1e-6)
    assert_allclose(critical_visibility(2), 0.707107, atol=1e-6)
    assert_allclose(critical_visibility(3), 0.769800, atol=1e-6)
    assert_allclose(critical_visibility(4), 6 / (8 * np.cos(np.pi / 8)),
                    atol=1e-12)
    assert_allclose(critical_visibility(4), 0.811794, atol=1e-6)
    visibilities = [critical_visibility(n) for n in range(2, 20)]
    assert np.all(np.diff(visibilities) > 0)
    assert visibilities[-1] < 1.


@pytest.mark.parametrize("n", [2, 3, 4])
def test_optimal_quantum_phases(n):
    """Test the phase search reaches the closed-form quantum value."""
    expr = chained_expression(n)
    phases_a, phases_b, value = optimal_quantum_phases(expr, budget=10,
                                                       seed=0)
    assert phases_a[0] == 0.
    assert len(phases_a) == n and len(phases_b) == n
    assert_allclose(value, quantum_chained_value(n), atol=1e-6)
    assert_allclose(quantum_value(expr, phases_a, phases_b), value)


def test_optimal_quantum_phases_visibility():
    """Test the optimum scales linearly with the visibility."""
    _, _, value = optimal_quantum_phases(chsh_expression(), visibility=0.5)
    assert_allclose(value, np.sqrt(2), atol=1e-6)


def test_chained_tradeoff():
    """Test the tradeoff table."""
    frame = chained_tradeoff(range(2, 8))
    assert list(frame.columns) == ['n', 'local_bound', 'quantum_value',
                                   'violation_ratio', 'critical_visibility']
    assert frame['n'].tolist() == list(range(2, 8))
    assert np.all(np.diff(frame['violation_ratio']) < 0)
    assert_allclose(frame['violation_ratio'] * frame['critical_visibility'],
                    1.)


def test_get_expression():
    """Test expressions by name."""
    assert get_expression('chsh').name == 'chsh'
    assert get_expression('chained-4').local_bound == 6.
    with raises(ValueError, match='expression name'):
        get_expression('cglmp')


@pytest.mark.parametrize("coefficients, msg", [
    ([1., 1.], '2D'),
    ([[0., 0.], [0., 0.]], 'nonzero'),
    ([[np.inf, 1.]], 'finite'),
])
def test_expression_validation(coefficients, msg):
    """Test malformed expressions are rejected."""
    with raises(ValueError, match=msg):
        BellExpression(coefficients, 2.)


def test_expression_dict():
    """Test the dictionary form of an expression."""
    expr = chained_expression(3)
    again = BellExpression.from_dict(expr.to_dict())
    assert again.name == 'chained-3'
    assert_allclose(again.coefficients, expr.coefficients)
    with raises(ConfigError):
        BellExpression.from_dict(dict(name='x'))


def test_chained_errors():
    """Test invalid sizes and the enumeration cap."""
    with raises(ValueError):
        chained_expression(1)
    with raises(ValueError):
        quantum_chained_value(2.5)
    with raises(CapExceededError):
        local_bound_by_enumeration(chained_expression(12))
    with raises(CapExceededError):
        local_bound_by_enumeration(chsh_expression(), max_strategies=8)
