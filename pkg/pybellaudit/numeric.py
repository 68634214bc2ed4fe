"""Numeric kernel: dense simplex LP, pattern search and seeded streams.

Everything here is deterministic given its inputs. Randomness only enters
through :func:`rng_stream`, whose streams are keyed by ``(seed, stream_id)``
and never shared between callers.
"""

import numbers
import warnings
from dataclasses import dataclass, field

import numpy as np

from .utils import logger, _verbose_iterable

FEAS_TOL = 1e-9
ALLOWED_SENSES = ('<=', '=', '>=')


@dataclass
class LinearProgram:
    """A dense linear program ``min c.x`` subject to row constraints.

    Parameters
    ----------
    c : array, shape (n_vars,)
        Objective coefficients. The program is always a minimization; to
        maximize pass ``-c``.
    A : array, shape (n_rows, n_vars)
        Constraint matrix.
    b : array, shape (n_rows,)
        Right-hand side.
    senses : list of str, length n_rows
        One of ``'<='``, ``'='``, ``'>='`` per row.
    bounds : list of (float, float) | None
        Per-variable ``(lower, upper)``; infinite values are allowed.
        Defaults to ``(0, inf)`` for every variable.
    """

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    senses: list
    bounds: list = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float).ravel()
        n_rows, n_vars = self.A.shape
        if self.c.shape[0] != n_vars:
            raise ValueError('c has %d entries but A has %d columns'
                             % (self.c.shape[0], n_vars))
        if self.b.shape[0] != n_rows:
            raise ValueError('b has %d entries but A has %d rows'
                             % (self.b.shape[0], n_rows))
        self.senses = list(self.senses)
        if len(self.senses) != n_rows:
            raise ValueError('senses has %d entries but A has %d rows'
                             % (len(self.senses), n_rows))
        for sense in self.senses:
            if sense not in ALLOWED_SENSES:
                raise ValueError('senses must be one of %s, got %r'
                                 % (', '.join(ALLOWED_SENSES), sense))
        if self.bounds is None:
            self.bounds = [(0., np.inf)] * n_vars
        self.bounds = [(float(lo), float(hi)) for lo, hi in self.bounds]
        if len(self.bounds) != n_vars:
            raise ValueError('bounds has %d entries but A has %d columns'
                             % (len(self.bounds), n_vars))
        for lo, hi in self.bounds:
            if lo > hi or lo == np.inf or hi == -np.inf:
                raise ValueError('invalid variable bounds (%s, %s)' % (lo, hi))

    @property
    def shape(self):
        return self.A.shape


@dataclass
class LPResult:
    """Outcome of :func:`solve_lp`.

    Attributes
    ----------
    status : str
        ``'optimal'``, ``'infeasible'`` or ``'unbounded'``.
    x : array | None
        Optimal point (``'optimal'`` only).
    dual : array | None
        Row multipliers. At optimality these are the dual solution of the
        minimization (``c.x == b.dual`` for programs with ``x >= 0``). For an
        infeasible program they form a Farkas certificate ``y``:
        ``A.T y <= 0``, ``b.y > 0``, ``y_i >= 0`` on ``'>='`` rows and
        ``y_i <= 0`` on ``'<='`` rows.
    objective : float | None
        ``c.x`` at the optimum.
    n_iter : int
        Number of simplex pivots over both phases.
    """

    status: str
    x: np.ndarray = None
    dual: np.ndarray = None
    objective: float = None
    n_iter: int = 0
    message: str = field(default='', repr=False)


def _standard_form(lp):
    """Shift, mirror and split variables so that every one is >= 0.

    Returns the transformed pieces and the map ``x = offset + T @ x_std``.
    """
    n_rows, n_vars = lp.shape
    columns, offset, t_cols = [], np.zeros(n_vars), []
    extra_rows = []
    for j, (lo, hi) in enumerate(lp.bounds):
        unit = np.zeros(n_vars)
        unit[j] = 1.
        if np.isfinite(lo):
            offset[j] = lo
            columns.append(lp.A[:, j])
            t_cols.append(unit)
            if np.isfinite(hi):
                extra_rows.append((len(columns) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            columns.append(-lp.A[:, j])
            t_cols.append(-unit)
        else:
            columns.append(lp.A[:, j])
            t_cols.append(unit)
            columns.append(-lp.A[:, j])
            t_cols.append(-unit)

    A = np.column_stack(columns) if columns else np.zeros((n_rows, 0))
    T = np.column_stack(t_cols)
    b = lp.b - lp.A.dot(offset)
    senses = list(lp.senses)
    if extra_rows:
        bound_rows = np.zeros((len(extra_rows), A.shape[1]))
        for k, (col, width) in enumerate(extra_rows):
            bound_rows[k, col] = 1.
        A = np.vstack([A, bound_rows])
        b = np.concatenate([b, [width for _, width in extra_rows]])
        senses += ['<='] * len(extra_rows)
    c = T.T.dot(lp.c)
    return A, b, senses, c, T, offset


class _Tableau(object):
    """Dense simplex tableau ``B^-1 [A | b]`` pivoted with Bland's rule."""

    def __init__(self, A, b, basis, tol):
        self.tab = np.column_stack([A, b]).astype(float)
        self.basis = np.array(basis, dtype=int)
        self.tol = tol
        self.n_iter = 0

    def set_costs(self, costs):
        self.costs = np.asarray(costs, dtype=float)
        full = np.append(self.costs, 0.)
        self.reduced = full - self.costs[self.basis].dot(self.tab)

    def pivot(self, row, col):
        tab = self.tab
        tab[row] /= tab[row, col]
        factors = tab[:, col].copy()
        factors[row] = 0.
        tab -= np.outer(factors, tab[row])
        self.reduced -= self.reduced[col] * tab[row]
        self.basis[row] = col
        self.n_iter += 1

    def run(self, allowed, max_iter):
        """Iterate to optimality; return ``'optimal'`` or ``'unbounded'``."""
        tol = self.tol
        for _ in range(max_iter):
            candidates = np.flatnonzero((self.reduced[:-1] < -tol) & allowed)
            if candidates.size == 0:
                return 'optimal'
            # Bland: lowest-index improving column enters
            col = candidates[0]
            column = self.tab[:, col]
            rows = np.flatnonzero(column > tol)
            if rows.size == 0:
                return 'unbounded'
            ratios = self.tab[rows, -1] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + tol * max(1., abs(best))]
            # Bland: lowest-index basic variable leaves
            row = ties[np.argmin(self.basis[ties])]
            self.pivot(row, col)
        raise RuntimeError('simplex did not terminate in %d pivots' % max_iter)

    def objective(self):
        return float(self.costs[self.basis].dot(self.tab[:, -1]))

    def multipliers(self, identity_cols):
        """Simplex multipliers ``c_B B^-1`` read off the initial identity."""
        return self.costs[self.basis].dot(self.tab[:, identity_cols])


def solve_lp(lp, tol=FEAS_TOL, max_iter=None):
    """Solve a dense linear program with the two-phase simplex method.

    Entering and leaving variables follow Bland's rule, so the method
    terminates on degenerate programs.

    Parameters
    ----------
    lp : LinearProgram
        The program ``min c.x``.
    tol : float
        Feasibility and optimality tolerance.
        default: 1e-9
    max_iter : int | None
        Pivot limit per phase. Defaults to ``50 * (n_rows + n_cols)``.

    Returns
    -------
    result : LPResult
        See :class:`LPResult` for the meaning of ``dual`` per status.
    """
    if not isinstance(lp, LinearProgram):
        raise ValueError('lp must be a LinearProgram, got %s' % type(lp))
    n_rows, n_vars = lp.shape
    A, b, senses, c, T, offset = _standard_form(lp)
    n_std_rows, n_std = A.shape

    # make every right-hand side non-negative
    flip = np.where(b < 0, -1., 1.)
    A = A * flip[:, None]
    b = b * flip
    flipped = {'<=': '>=', '>=': '<=', '=': '='}
    senses = [flipped[s] if f < 0 else s for s, f in zip(senses, flip)]

    # slack (+1) for <=, surplus (-1) for >=, artificial for = and >=
    n_ineq = sum(s != '=' for s in senses)
    n_art = sum(s != '<=' for s in senses)
    n_cols = n_std + n_ineq + n_art
    full = np.zeros((n_std_rows, n_cols))
    full[:, :n_std] = A
    basis = np.zeros(n_std_rows, dtype=int)
    identity_cols = np.zeros(n_std_rows, dtype=int)
    slack_col, art_col = n_std, n_std + n_ineq
    for i, sense in enumerate(senses):
        if sense == '<=':
            full[i, slack_col] = 1.
            basis[i] = identity_cols[i] = slack_col
            slack_col += 1
        else:
            if sense == '>=':
                full[i, slack_col] = -1.
                slack_col += 1
            full[i, art_col] = 1.
            basis[i] = identity_cols[i] = art_col
            art_col += 1
    is_art = np.zeros(n_cols, dtype=bool)
    is_art[n_std + n_ineq:] = True

    if max_iter is None:
        max_iter = 50 * (n_std_rows + n_cols)
    tableau = _Tableau(full, b, basis, tol)

    # phase 1: minimize the sum of artificials
    tableau.set_costs(is_art.astype(float))
    tableau.run(np.ones(n_cols, dtype=bool), max_iter)
    infeasibility = tableau.objective()
    logger.debug('simplex phase 1: %d pivots, infeasibility %.3g'
                 % (tableau.n_iter, infeasibility))
    if infeasibility > tol * max(1., np.abs(b).max(initial=0.)):
        y = tableau.multipliers(identity_cols) * flip
        return LPResult(status='infeasible', dual=y[:n_rows],
                        n_iter=tableau.n_iter,
                        message='phase 1 infeasibility %.3g' % infeasibility)

    # drive zero-level artificials out of the basis where possible; rows
    # where that fails are redundant and keep their artificial at zero
    for row in np.flatnonzero(is_art[tableau.basis]):
        entries = np.abs(tableau.tab[row, :-1])
        entries[is_art] = 0.
        candidates = np.flatnonzero(entries > tol)
        if candidates.size:
            tableau.pivot(row, candidates[0])

    costs = np.zeros(n_cols)
    costs[:n_std] = c
    tableau.set_costs(costs)
    status = tableau.run(~is_art, max_iter)
    if status == 'unbounded':
        return LPResult(status='unbounded', n_iter=tableau.n_iter)

    x_std = np.zeros(n_cols)
    x_std[tableau.basis] = tableau.tab[:, -1]
    x = offset + T.dot(x_std[:n_std])
    y = tableau.multipliers(identity_cols) * flip
    logger.debug('simplex phase 2 done after %d pivots' % tableau.n_iter)
    return LPResult(status='optimal', x=x, dual=y[:n_rows],
                    objective=float(lp.c.dot(x)), n_iter=tableau.n_iter)


def check_farkas(lp, y, tol=1e-7):
    """Check that ``y`` certifies infeasibility of a program with ``x >= 0``.

    Parameters
    ----------
    lp : LinearProgram
        A program whose variables all have bounds ``(0, inf)``.
    y : array, shape (n_rows,)
        Candidate certificate.
    tol : float
        Slack allowed on each Farkas condition.

    Returns
    -------
    ok : bool
    """
    y = np.asarray(y, dtype=float)
    senses = np.array(lp.senses)
    signs_ok = (np.all(y[senses == '>='] >= -tol) and
                np.all(y[senses == '<='] <= tol))
    return bool(signs_ok and np.all(lp.A.T.dot(y) <= tol) and
                lp.b.dot(y) > tol)


def rng_stream(seed, stream_id=0):
    """Return a deterministic random stream keyed by ``(seed, stream_id)``.

    The stream is a Philox4x64-10 counter-based generator whose 128-bit key
    is ``seed + 2**64 * stream_id`` and whose counter starts at zero.
    Distinct ``stream_id`` values give statistically independent streams;
    identical inputs always give identical sequences. Raw 64-bit words are
    available from ``rng.bit_generator.random_raw``.

    Parameters
    ----------
    seed : int
        Unsigned 64-bit seed.
    stream_id : int
        Unsigned 64-bit stream index.

    Returns
    -------
    rng : numpy.random.Generator
    """
    for value, name in ((seed, 'seed'), (stream_id, 'stream_id')):
        if isinstance(value, bool) or \
                not isinstance(value, (numbers.Integral, np.integer)):
            raise ValueError('%s must be of type int, got %s'
                             % (name, type(value)))
        if not 0 <= int(value) < 2 ** 64:
            raise ValueError('%s must be an unsigned 64-bit integer, got %d'
                             % (name, value))
    key = int(seed) + (int(stream_id) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def minimize_free(f, dims, budget, seed, bounds=None, x0=None,
                  initial_step=None, tol=1e-9, max_evals=None):
    """Derivative-free minimization by pattern search with random restarts.

    Each restart tries ``+/- step`` along every coordinate, keeps moving
    while a direction improves and halves the step once no coordinate
    improves. Starting points are drawn uniformly from ``bounds``; the
    search itself is unconstrained.

    Parameters
    ----------
    f : callable
        Objective, called with a float array of shape (dims,). Non-finite
        values are treated as +inf.
    dims : int
        Number of coordinates.
    budget : int
        Number of restarts.
    seed : int
        Seed of the restart stream (stream 0 of :func:`rng_stream`).
    bounds : list of (float, float) | None
        Box the starting points are drawn from.
        default: ``[(-1, 1)] * dims``
    x0 : array | None
        Starting point of the first restart.
    initial_step : float | array | None
        Initial step; defaults to a quarter of each box width.
    tol : float
        Restarts stop once every step is below ``tol``.
    max_evals : int | None
        Evaluation limit per restart.
        default: ``5000 * dims``

    Returns
    -------
    best_x : array
        Best point evaluated over all restarts.
    best_value : float
        ``f(best_x)``.
    """
    if not isinstance(budget, numbers.Integral) or budget <= 0:
        raise ValueError('budget must be a positive int, got %r' % (budget,))
    if not isinstance(dims, numbers.Integral) or dims <= 0:
        raise ValueError('dims must be a positive int, got %r' % (dims,))
    if bounds is None:
        bounds = [(-1., 1.)] * dims
    bounds = np.asarray(bounds, dtype=float)
    if bounds.shape != (dims, 2):
        raise ValueError('bounds must have shape (%d, 2)' % dims)
    lo, hi = bounds[:, 0], bounds[:, 1]
    if initial_step is None:
        initial_step = 0.25 * (hi - lo)
    initial_step = np.broadcast_to(np.asarray(initial_step, dtype=float),
                                   (dims,))
    if max_evals is None:
        max_evals = 5000 * dims
    rng = rng_stream(seed, 0)

    best = {'x': None, 'value': np.inf}

    def evaluate(x):
        value = float(f(x))
        if not np.isfinite(value):
            value = np.inf
        if value < best['value'] or best['x'] is None:
            best['x'], best['value'] = x.copy(), value
        return value

    for restart in _verbose_iterable(range(budget)):
        if restart == 0 and x0 is not None:
            x = np.array(x0, dtype=float)
        else:
            x = lo + (hi - lo) * rng.random(dims)
        step = initial_step.copy()
        fx = evaluate(x)
        n_evals = 1
        while step.max() > tol and n_evals < max_evals:
            improved = False
            for i in range(dims):
                for sign in (1., -1.):
                    trial = x.copy()
                    trial[i] += sign * step[i]
                    ft = evaluate(trial)
                    n_evals += 1
                    moved = False
                    while ft < fx and n_evals < max_evals:
                        x, fx = trial, ft
                        moved = True
                        trial = x.copy()
                        trial[i] += sign * step[i]
                        ft = evaluate(trial)
                        n_evals += 1
                    if moved:
                        improved = True
                        break
            if not improved:
                step = step / 2.
        if n_evals >= max_evals:
            warnings.warn('pattern search restart %d hit max_evals=%d'
                          % (restart, max_evals))
    return best['x'], best['value']
