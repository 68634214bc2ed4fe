"""Correlator-form Bell expressions: CHSH and the chained family."""

import re
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .correlations import correlators
from .exceptions import CapExceededError, ConfigError
from .lhv import DeterministicStrategy, MAX_STRATEGIES, strategy_grid
from .numeric import minimize_free
from .utils import logger, _check_count


@dataclass
class BellExpression:
    """Linear functional ``sum_xy c_xy E(x, y)`` on binary correlators.

    Parameters
    ----------
    coefficients : array, shape (n_settings_a, n_settings_b)
        Weight of each correlator; at least one must be nonzero.
    local_bound : float
        Declared maximum over local models. Check it with
        :func:`local_bound_by_enumeration`.
    name : str
        Short identifier such as ``'chsh'`` or ``'chained-3'``.
    """

    coefficients: np.ndarray
    local_bound: float
    name: str = ''

    def __post_init__(self):
        coefficients = np.array(self.coefficients, dtype=float)
        if coefficients.ndim != 2:
            raise ValueError('coefficients must be 2D [x][y], got %dD'
                             % coefficients.ndim)
        if not np.all(np.isfinite(coefficients)):
            raise ValueError('coefficients must be finite')
        if not np.any(coefficients != 0):
            raise ValueError('a Bell expression needs a nonzero coefficient')
        coefficients.setflags(write=False)
        self.coefficients = coefficients
        self.local_bound = float(self.local_bound)

    @property
    def shape(self):
        return self.coefficients.shape

    @property
    def settings_a(self):
        return self.shape[0]

    @property
    def settings_b(self):
        return self.shape[1]

    def to_dict(self):
        return dict(name=self.name, local_bound=self.local_bound,
                    coefficients=self.coefficients.tolist())

    @classmethod
    def from_dict(cls, data, source=None):
        try:
            return cls(data['coefficients'], data['local_bound'],
                       data.get('name', ''))
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError(['malformed Bell expression: %s' % err],
                              source)


def chsh_expression():
    """``S = E00 + E01 + E10 - E11`` with local bound 2."""
    return BellExpression([[1., 1.], [1., -1.]], 2., 'chsh')


def chained_expression(n):
    """Chained Bell expression with ``n`` settings per side.

    ``E(a1, b1) + E(b1, a2) + E(a2, b2) + ... + E(an, bn) - E(bn, a1)``;
    local bound ``2n - 2``.

    Parameters
    ----------
    n : int
        Settings per side, ``n >= 2``.

    Returns
    -------
    expr : BellExpression
    """
    n = _check_count(n, 'n', minimum=2)
    coefficients = np.zeros((n, n))
    k = np.arange(n)
    coefficients[k, k] = 1.
    coefficients[k[1:], k[:-1]] = 1.
    coefficients[0, n - 1] = -1.
    return BellExpression(coefficients, 2. * n - 2., 'chained-%d' % n)


def expression_settings(name):
    """Settings per side named by ``'chsh'`` (2) or ``'chained-<n>'`` (n)."""
    if not isinstance(name, str):
        raise ValueError("expression name must be a string, got %r"
                         % (name,))
    if name == 'chsh':
        return 2
    match = re.fullmatch(r'chained-(\d+)', name)
    if match is None:
        raise ValueError("expression name must be 'chsh' or 'chained-<n>', "
                         "got %r" % (name,))
    return _check_count(int(match.group(1)), 'n', minimum=2)


def get_expression(name):
    """Expression from its name, ``'chsh'`` or ``'chained-<n>'``."""
    n = expression_settings(name)
    if name == 'chsh':
        return chsh_expression()
    return chained_expression(n)


def evaluate(expr, table):
    """Value of a Bell expression on a binary correlation table.

    The expression uses the first ``expr.settings_a`` and
    ``expr.settings_b`` settings of the table.
    """
    if expr.settings_a > table.settings_a or \
            expr.settings_b > table.settings_b:
        raise ValueError('expression with %d x %d settings does not fit a '
                         '%d x %d table' % (expr.shape + table.shape[:2]))
    corr = correlators(table)[:expr.settings_a, :expr.settings_b]
    return float(np.sum(expr.coefficients * corr))


def _signs(n_settings):
    """Deterministic +/-1 responses, lexicographic in outcome index."""
    return 1 - 2 * strategy_grid(n_settings, 2)


def local_bound_by_enumeration(expr, max_strategies=MAX_STRATEGIES,
                               return_witness=False):
    """Maximum of ``expr`` over all deterministic local strategies.

    Parameters
    ----------
    expr : BellExpression
    max_strategies : int
        Refuse expressions with more than this many strategies.
        default: 1e6
    return_witness : bool
        Also return the first maximizing strategy in lexicographic order
        (A's responses major, outcome index 0 meaning +1).

    Returns
    -------
    bound : float
    witness : DeterministicStrategy
        Only if ``return_witness``.
    """
    n_x, n_y = expr.shape
    size = 2. ** (n_x + n_y)
    if size > max_strategies:
        raise CapExceededError(int(size), max_strategies)
    signs_a, signs_b = _signs(n_x), _signs(n_y)
    values = signs_a.dot(expr.coefficients).dot(signs_b.T)
    best = int(np.argmax(values))
    ia, ib = np.unravel_index(best, values.shape)
    bound = float(values[ia, ib])
    logger.info('%s: local bound %g over %d strategies'
                % (expr.name or 'expression', bound, int(size)))
    if return_witness:
        witness = DeterministicStrategy(
            tuple(((1 - signs_a[ia]) // 2).tolist()),
            tuple(((1 - signs_b[ib]) // 2).tolist()))
        return bound, witness
    return bound


def quantum_value(expr, phases_a, phases_b, visibility=1.):
    """Value of ``expr`` when ``E(x, y) = V cos(phi_x + phi_y)``."""
    phases_a = np.asarray(phases_a, dtype=float)
    phases_b = np.asarray(phases_b, dtype=float)
    corr = visibility * np.cos(phases_a[:, None] + phases_b[None, :])
    return float(np.sum(expr.coefficients * corr))


def quantum_chained_value(n):
    """Quantum maximum ``2n cos(pi / 2n)`` of the chained expression."""
    n = _check_count(n, 'n', minimum=2)
    return 2 * n * np.cos(np.pi / (2 * n))


def critical_visibility(n):
    """Visibility at which the quantum chained value meets the local bound."""
    return (2. * n - 2.) / quantum_chained_value(n)


def chained_phases(n):
    """Phases reaching :func:`quantum_chained_value` for ``cos`` correlators.

    Returns
    -------
    phases_a, phases_b : array, shape (n,)
        ``phi_a(k) = 2k theta`` and ``phi_b(k) = -(2k + 1) theta`` with
        ``theta = pi / 2n``.
    """
    n = _check_count(n, 'n', minimum=2)
    theta = np.pi / (2 * n)
    k = np.arange(n)
    return 2 * k * theta, -(2 * k + 1) * theta


def optimal_quantum_phases(expr, budget=10, seed=0, visibility=1.):
    """Maximize the ``cos`` quantum value of ``expr`` over phases.

    A's first phase is pinned to 0, which removes the common phase offset
    the value does not depend on.

    Parameters
    ----------
    expr : BellExpression
    budget : int
        Pattern-search restarts.
        default: 10
    seed : int
        Restart seed.
        default: 0
    visibility : float
        default: 1.0

    Returns
    -------
    phases_a, phases_b : array
    value : float
    """
    n_x, n_y = expr.shape

    def split(z):
        return np.concatenate([[0.], z[:n_x - 1]]), z[n_x - 1:]

    def loss(z):
        phases_a, phases_b = split(z)
        return -quantum_value(expr, phases_a, phases_b, visibility)

    dims = n_x + n_y - 1
    z, value = minimize_free(loss, dims, budget, seed,
                             bounds=[(-np.pi, np.pi)] * dims,
                             x0=np.zeros(dims))
    phases_a, phases_b = split(z)
    return phases_a, phases_b, -value


def chained_tradeoff(ns):
    """Bounds of the chained family for a list of ``n``.

    Returns
    -------
    frame : pandas.DataFrame
        Columns ``n``, ``local_bound``, ``quantum_value``,
        ``violation_ratio`` and ``critical_visibility``.
    """
    rows = list()
    for n in ns:
        quantum = quantum_chained_value(n)
        local = 2. * n - 2.
        rows.append(dict(n=int(n), local_bound=local, quantum_value=quantum,
                         violation_ratio=quantum / local,
                         critical_visibility=local / quantum))
    return pd.DataFrame(rows, columns=['n', 'local_bound', 'quantum_value',
                                       'violation_ratio',
                                       'critical_visibility'])
