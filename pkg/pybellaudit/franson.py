"""Franson-type time-bin experiments and the postselection loophole.

Each photon of a pair passes an unbalanced interferometer and takes the
Short or Long arm with equal probability. Only the central coincidence slot
(Short-Short and Long-Long) shows two-photon interference; the side peaks at
``+/- delta_t`` are discarded. That postselection lets local strategies which
choose their path from the local setting fake correlations that violate
CHSH.
"""

import itertools
import warnings
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from multiprocessing import Pool

import numpy as np
import pandas as pd
from scipy.optimize import curve_fit

from .bell import quantum_chained_value, chained_expression, \
    local_bound_by_enumeration
from .correlations import CorrelationTable, fringe_table
from .exceptions import CapExceededError, EmptyCellError
from .lhv import MAX_STRATEGIES
from .numeric import minimize_free, rng_stream
from .spacetime import SPEED_OF_LIGHT
from .utils import (logger, set_log_level, _check_count, _check_probability,
                    _check_vector, _verbose_iterable, _tqdm_log)

CHUNK_SIZE = 65536
MAX_PAIRS = 5 * 10 ** 6
WEIGHT_STEPS = 64
_PAIR_BLOCK = 16384
_MIXTURE_TOL = 1e-12


def _check_positive(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValueError('%s must be a real number, got %r' % (name, value))
    if not np.isfinite(value) or value <= 0:
        raise ValueError('%s must be finite and > 0, got %s' % (name, value))
    return value


def _check_phases(phases, name):
    phases = np.atleast_1d(np.asarray(phases, dtype=float))
    if phases.ndim != 1 or phases.size == 0:
        raise ValueError('%s must be a non-empty list of phases' % name)
    if not np.all(np.isfinite(phases)):
        raise ValueError('%s must be finite' % name)
    return tuple(phases.tolist())


@dataclass
class FransonConfig:
    """Interferometer, source and run parameters of a Franson experiment.

    Parameters
    ----------
    delta_t : float
        Arm imbalance of both interferometers, in seconds.
        default: 1.2e-9
    phases_a : list of float
        Phase settings of A in radians (the scanned phases).
        default: [0.]
    phases_b : list of float
        Phase settings of B; a single entry is a setting kept stable.
        default: [0.]
    visibility : float
        Two-photon fringe visibility in [0, 1].
        default: 1.
    detector_efficiency : float
        Detection probability per photon in (0, 1].
        default: 1.
    coincidence_window : float | None
        Full width of the coincidence window in seconds; must satisfy
        ``delta_t > coincidence_window / 2``.
        default: delta_t / 2
    n_pairs : int
        Number of emitted pairs in a run.
        default: 100000
    seed : int
        Seed of the run.
        default: 0
    fiber_length_a, fiber_length_b : float
        Fiber length from the source to each station, in meters.
        default: 17500.
    refractive_index : float
        Group index of the fibers.
        default: 1.468
    """

    delta_t: float = 1.2e-9
    phases_a: tuple = (0.,)
    phases_b: tuple = (0.,)
    visibility: float = 1.
    detector_efficiency: float = 1.
    coincidence_window: float = None
    n_pairs: int = 100000
    seed: int = 0
    fiber_length_a: float = 17500.
    fiber_length_b: float = 17500.
    refractive_index: float = 1.468

    def __post_init__(self):
        self.delta_t = _check_positive(self.delta_t, 'delta_t')
        if self.coincidence_window is None:
            self.coincidence_window = self.delta_t / 2.
        self.coincidence_window = _check_positive(self.coincidence_window,
                                                  'coincidence_window')
        if not self.delta_t > self.coincidence_window / 2.:
            raise ValueError('delta_t must exceed half the coincidence window '
                             '(%g <= %g)' % (self.delta_t,
                                             self.coincidence_window / 2.))
        self.phases_a = _check_phases(self.phases_a, 'phases_a')
        self.phases_b = _check_phases(self.phases_b, 'phases_b')
        self.visibility = _check_probability(self.visibility, 'visibility')
        self.detector_efficiency = _check_probability(
            self.detector_efficiency, 'detector_efficiency', low_open=True)
        self.n_pairs = _check_count(self.n_pairs, 'n_pairs', minimum=0)
        self.seed = _check_count(self.seed, 'seed', minimum=0)
        self.fiber_length_a = _check_positive(self.fiber_length_a,
                                              'fiber_length_a')
        self.fiber_length_b = _check_positive(self.fiber_length_b,
                                              'fiber_length_b')
        self.refractive_index = _check_positive(self.refractive_index,
                                                'refractive_index')
        if self.refractive_index < 1:
            raise ValueError('refractive_index must be >= 1, got %s'
                             % self.refractive_index)

    @property
    def settings_a(self):
        return len(self.phases_a)

    @property
    def settings_b(self):
        return len(self.phases_b)

    def arrival_time(self, side):
        """Fiber transit time (s) from the source to station ``side``."""
        length = self.fiber_length_a if side == 'A' else self.fiber_length_b
        return length * self.refractive_index / SPEED_OF_LIGHT

    def to_dict(self):
        return dict(delta_t_s=self.delta_t, phases_a_rad=list(self.phases_a),
                    phases_b_rad=list(self.phases_b),
                    visibility=self.visibility,
                    detector_efficiency=self.detector_efficiency,
                    coincidence_window_s=self.coincidence_window,
                    n_pairs=self.n_pairs, seed=self.seed,
                    fiber_length_a_m=self.fiber_length_a,
                    fiber_length_b_m=self.fiber_length_b,
                    refractive_index=self.refractive_index)


def quantum_postselected_table(config):
    """Postselected quantum prediction ``E = V cos(phi_a + phi_b)``.

    Returns
    -------
    table : CorrelationTable
        Settings ``phases_a`` x ``phases_b``, binary outcomes with index 0
        for +1.
    """
    return fringe_table(config.phases_a, config.phases_b, config.visibility)


@dataclass
class RunRecord:
    """Per-pair records of a simulated run.

    ``slot`` is -1, 0 or +1 for A's photon arriving in the early side peak,
    the central slot or the late side peak relative to B's. Outcomes are
    +1/-1 and 0 for an undetected photon.
    """

    x: np.ndarray
    y: np.ndarray
    slot: np.ndarray
    detected_a: np.ndarray
    detected_b: np.ndarray
    outcome_a: np.ndarray
    outcome_b: np.ndarray
    kept: np.ndarray

    def __len__(self):
        return self.x.size

    def to_frame(self):
        slot_names = np.array(['Early', 'Central', 'Late'])
        return pd.DataFrame(dict(x=self.x, y=self.y,
                                 slot=slot_names[self.slot + 1],
                                 detected_a=self.detected_a,
                                 detected_b=self.detected_b,
                                 outcome_a=self.outcome_a,
                                 outcome_b=self.outcome_b, kept=self.kept))


@dataclass
class RunSummary:
    """Counts of a simulated run.

    Attributes
    ----------
    counts : array of int, shape (X, Y, 2, 2)
        Kept coincidences per settings and outcome indices.
    n_pairs : int
        Emitted pairs.
    n_detected : int
        Pairs with both photons detected, in any slot.
    seed : int
    config : FransonConfig
    """

    counts: np.ndarray
    n_pairs: int
    n_detected: int
    seed: int
    config: FransonConfig = field(repr=False, default=None)

    @property
    def n_kept(self):
        return int(self.counts.sum())

    @property
    def kept_fraction(self):
        return self.n_kept / self.n_pairs

    def to_table(self, pool_marginal=None):
        """Empirical kept-subensemble table.

        ``pool_marginal='b'`` gives the no-signaling estimate for a run with a
        single B setting (see :meth:`CorrelationTable.from_counts`).
        """
        return CorrelationTable.from_counts(self.counts, pool_marginal)

    def to_dict(self):
        return dict(counts=self.counts.tolist(), n_pairs=self.n_pairs,
                    n_detected=self.n_detected, n_kept=self.n_kept,
                    kept_fraction=self.kept_fraction, seed=self.seed,
                    config=self.config.to_dict())


def _simulate_chunk(args):
    """Simulate pairs ``[start, stop)`` on stream ``chunk`` of the seed."""
    chunk, n, phases_a, phases_b, visibility, efficiency, delta_t, \
        half_window, seed, keep_records = args
    rng = rng_stream(seed, chunk)
    # draw order is part of the reproducibility contract
    x = rng.integers(len(phases_a), size=n)
    y = rng.integers(len(phases_b), size=n)
    path_a = rng.integers(2, size=n)
    path_b = rng.integers(2, size=n)
    detected_a = rng.random(n) < efficiency
    detected_b = rng.random(n) < efficiency
    bit_a = rng.integers(2, size=n)
    u_equal = rng.random(n)

    slot = (path_a - path_b).astype(np.int8)
    both = detected_a & detected_b
    kept = both & (np.abs(slot * delta_t) <= half_window)
    corr = visibility * np.cos(phases_a[x] + phases_b[y])
    p_equal = np.where(kept, (1 + corr) / 2., 0.5)
    bit_b = np.where(u_equal < p_equal, bit_a, 1 - bit_a)

    counts = np.zeros((len(phases_a), len(phases_b), 2, 2), dtype=np.int64)
    np.add.at(counts, (x[kept], y[kept], bit_a[kept], bit_b[kept]), 1)
    result = dict(counts=counts, n_detected=int(both.sum()))
    if keep_records:
        result['record'] = dict(
            x=x, y=y, slot=slot, detected_a=detected_a, detected_b=detected_b,
            outcome_a=np.where(detected_a, 1 - 2 * bit_a, 0),
            outcome_b=np.where(detected_b, 1 - 2 * bit_b, 0), kept=kept)
    return result


def simulate_run(config, n_jobs=1, keep_records=True, verbose=None):
    """Monte Carlo simulation of a Franson run.

    Pairs are simulated in chunks of ``CHUNK_SIZE``; chunk ``k`` draws from
    ``rng_stream(config.seed, k)``, so the output does not depend on
    ``n_jobs``.

    Parameters
    ----------
    config : FransonConfig
        Needs ``n_pairs > 0``.
    n_jobs : int
        Worker processes.
        default: 1
    keep_records : bool
        Also return the per-pair :class:`RunRecord`.
        default: True
    verbose : bool | str | int | None
        default: None

    Returns
    -------
    record : RunRecord | None
    summary : RunSummary
    """
    set_log_level(verbose)
    if config.n_pairs == 0:
        raise ValueError('n_pairs must be > 0 to simulate a run')
    n_jobs = _check_count(n_jobs, 'n_jobs')
    phases_a = np.asarray(config.phases_a)
    phases_b = np.asarray(config.phases_b)
    starts = range(0, config.n_pairs, CHUNK_SIZE)
    tasks = [(k, min(CHUNK_SIZE, config.n_pairs - start), phases_a, phases_b,
              config.visibility, config.detector_efficiency, config.delta_t,
              config.coincidence_window / 2., config.seed, keep_records)
             for k, start in enumerate(starts)]
    logger.info('simulating %d pairs in %d chunks on %d worker(s)'
                % (config.n_pairs, len(tasks), n_jobs))
    if n_jobs == 1:
        results = [_simulate_chunk(t) for t in _verbose_iterable(tasks)]
    else:
        with Pool(processes=n_jobs) as pool:
            results = list(_verbose_iterable(
                pool.imap(_simulate_chunk, tasks), total=len(tasks)))

    counts = sum(r['counts'] for r in results)
    summary = RunSummary(counts=counts, n_pairs=config.n_pairs,
                         n_detected=sum(r['n_detected'] for r in results),
                         seed=config.seed, config=config)
    _tqdm_log('kept %d of %d pairs (%.4f)' % (summary.n_kept, config.n_pairs,
                                              summary.kept_fraction))
    empty = np.argwhere(counts.sum(axis=(2, 3)) == 0)
    if empty.size:
        warnings.warn('no kept coincidences for setting pairs %s'
                      % [tuple(c) for c in empty.tolist()])
    record = None
    if keep_records:
        record = RunRecord(**{key: np.concatenate([r['record'][key]
                                                   for r in results])
                              for key in RunRecord.__dataclass_fields__})
    return record, summary


def fringe_from_summary(summary):
    """Per-phase fringe data of a run with a single B setting.

    Returns
    -------
    frame : pandas.DataFrame
        Columns ``phase_a_rad``, ``n_kept``, ``n_equal``, ``n_unequal`` and
        ``e_hat``; ``e_hat`` is NaN for phases without kept events.
    """
    counts = summary.counts
    if counts.shape[1] != 1:
        raise ValueError('a fringe needs a single B setting, got %d'
                         % counts.shape[1])
    cell = counts[:, 0]
    n_equal = cell[:, 0, 0] + cell[:, 1, 1]
    n_unequal = cell[:, 0, 1] + cell[:, 1, 0]
    n_kept = n_equal + n_unequal
    with np.errstate(invalid='ignore', divide='ignore'):
        e_hat = np.where(n_kept > 0, (n_equal - n_unequal) / n_kept, np.nan)
    return pd.DataFrame(dict(phase_a_rad=np.asarray(summary.config.phases_a),
                             n_kept=n_kept, n_equal=n_equal,
                             n_unequal=n_unequal, e_hat=e_hat),
                        columns=['phase_a_rad', 'n_kept', 'n_equal',
                                 'n_unequal', 'e_hat'])


def scan_fringe(config, n_jobs=1, verbose=None):
    """Simulate a phase scan at A with B's setting kept stable.

    Parameters
    ----------
    config : FransonConfig
        ``phases_b`` must have a single entry.
    n_jobs : int
        default: 1

    Returns
    -------
    frame : pandas.DataFrame
        See :func:`fringe_from_summary`.
    """
    if config.settings_b != 1:
        raise ValueError('scan_fringe needs a single B phase, got %d'
                         % config.settings_b)
    _, summary = simulate_run(config, n_jobs=n_jobs, keep_records=False,
                              verbose=verbose)
    return fringe_from_summary(summary)


@dataclass
class FringeFit:
    amplitude: float
    offset: float
    residual_rms: float
    sigma: float


def _fringe(phase, amplitude, offset):
    return amplitude * np.cos(phase + offset)


def fit_fringe(frame, phase_b=0.):
    """Least-squares fit of ``E = V cos(phi_a + phi_0)`` to fringe data.

    Parameters
    ----------
    frame : pandas.DataFrame
        Output of :func:`scan_fringe`.
    phase_b : float
        Starting guess for the offset ``phi_0``.

    Returns
    -------
    fit : FringeFit
        ``amplitude >= 0``, ``offset`` in (-pi, pi], the RMS of the
        residuals and the mean binomial standard error of ``e_hat``.
    """
    data = frame[frame['n_kept'] > 0]
    if len(data) < 3:
        raise ValueError('a fringe fit needs at least 3 phases with kept '
                         'events, got %d' % len(data))
    phase = data['phase_a_rad'].to_numpy(dtype=float)
    e_hat = data['e_hat'].to_numpy(dtype=float)
    n_kept = data['n_kept'].to_numpy(dtype=float)
    sigma = np.sqrt(np.maximum(1 - e_hat ** 2, 1. / n_kept) / n_kept)
    p0 = [max(np.abs(e_hat).max(), 1e-3), phase_b]
    (amplitude, offset), _ = curve_fit(_fringe, phase, e_hat, p0=p0,
                                       sigma=sigma)
    if amplitude < 0:
        amplitude, offset = -amplitude, offset + np.pi
    offset = float(np.pi - np.mod(np.pi - offset, 2 * np.pi))
    residuals = e_hat - _fringe(phase, amplitude, offset)
    return FringeFit(amplitude=float(amplitude), offset=offset,
                     residual_rms=float(np.sqrt(np.mean(residuals ** 2))),
                     sigma=float(sigma.mean()))


class PathClass(Enum):
    """Local strategies that may or may not pick a path from the setting."""

    SETTING_DEPENDENT = 'setting-dependent'
    FIXED = 'fixed-path'


def _expand_path(path, n_settings, name):
    if isinstance(path, str):
        path = (path,) * n_settings
    path = tuple(path)
    if len(path) != n_settings:
        raise ValueError('%s has %d entries for %d settings'
                         % (name, len(path), n_settings))
    if any(p not in ('S', 'L') for p in path):
        raise ValueError("%s entries must be 'S' or 'L', got %s"
                         % (name, path))
    return path


@dataclass(frozen=True)
class PathStrategy:
    """Deterministic local strategy that also chooses an interferometer arm.

    Parameters
    ----------
    outcome_a, outcome_b : tuple of int
        +1 or -1 per local setting.
    path_a, path_b : tuple of str | str
        ``'S'`` (short) or ``'L'`` (long) per local setting; a single string
        is a fixed path.
    path_class : PathClass | str
        ``'fixed-path'`` strategies must use setting-independent paths.
    """

    outcome_a: tuple
    outcome_b: tuple
    path_a: tuple
    path_b: tuple
    path_class: PathClass = PathClass.SETTING_DEPENDENT

    def __post_init__(self):
        for name in ('outcome_a', 'outcome_b'):
            outcome = tuple(int(v) for v in getattr(self, name))
            if not outcome or any(v not in (1, -1) for v in outcome):
                raise ValueError('%s must be a non-empty tuple of +1/-1'
                                 % name)
            object.__setattr__(self, name, outcome)
        object.__setattr__(self, 'path_a', _expand_path(
            self.path_a, len(self.outcome_a), 'path_a'))
        object.__setattr__(self, 'path_b', _expand_path(
            self.path_b, len(self.outcome_b), 'path_b'))
        object.__setattr__(self, 'path_class', PathClass(self.path_class))
        if self.path_class is PathClass.FIXED and \
                (len(set(self.path_a)) > 1 or len(set(self.path_b)) > 1):
            raise ValueError('a fixed-path strategy cannot change its path '
                             'with the setting')

    def kept(self, x, y):
        return self.path_a[x] == self.path_b[y]


def _side_strategies(n_settings, path_class):
    """Outcome (+1/-1) and path (0 = S, 1 = L) maps of one side.

    Lexicographic in (outcomes, paths) with +1 and S first.
    """
    outcomes = 1 - 2 * np.array(list(itertools.product(
        range(2), repeat=n_settings)), dtype=int)
    if path_class is PathClass.FIXED:
        paths = np.array([[0] * n_settings, [1] * n_settings], dtype=int)
    else:
        paths = np.array(list(itertools.product(range(2), repeat=n_settings)),
                         dtype=int)
    io, ip = np.divmod(np.arange(len(outcomes) * len(paths)), len(paths))
    return outcomes[io], paths[ip]


def enumerate_path_strategies(n_a, n_b, path_class='setting-dependent'):
    """All PathStrategies of a class, A's strategy index major."""
    path_class = PathClass(path_class)
    oa, pa = _side_strategies(n_a, path_class)
    ob, pb = _side_strategies(n_b, path_class)
    for i in range(len(oa)):
        for j in range(len(ob)):
            yield _make_strategy(oa[i], pa[i], ob[j], pb[j], path_class)


def _make_strategy(oa, pa, ob, pb, path_class):
    letters = np.array(['S', 'L'])
    return PathStrategy(tuple(oa.tolist()), tuple(ob.tolist()),
                        tuple(letters[pa].tolist()),
                        tuple(letters[pb].tolist()), path_class)


def _check_mixture(mixture, expr):
    weights = np.array([w for w, _ in mixture], dtype=float)
    if weights.size == 0 or np.any(weights < 0):
        raise ValueError('mixture weights must be non-negative and non-empty')
    if abs(weights.sum() - 1.) > 1e-9:
        raise ValueError('mixture weights sum to %.12g, not 1'
                         % weights.sum())
    for _, s in mixture:
        if (len(s.outcome_a), len(s.outcome_b)) != expr.shape:
            raise ValueError('strategy with %d x %d settings does not match '
                             'expression %s' % (len(s.outcome_a),
                                                len(s.outcome_b), expr.shape))


def postselected_value(mixture, expr, exact=False):
    """Bell value a mixture of path strategies shows after postselection.

    Only pairs whose paths agree are kept, so each cell is
    ``E(x, y) = sum w a b k / sum w k`` with ``k = [path_a(x) == path_b(y)]``.

    Parameters
    ----------
    mixture : list of (float, PathStrategy)
        Weights sum to 1.
    expr : BellExpression
    exact : bool
        Evaluate with rational arithmetic on the (binary) float weights.

    Returns
    -------
    value : float

    Raises
    ------
    EmptyCellError
        A cell with a nonzero coefficient keeps no weight.
    """
    _check_mixture(mixture, expr)
    convert = Fraction if exact else float
    total = convert(0)
    for x, y in zip(*np.nonzero(expr.coefficients)):
        num, den = convert(0), convert(0)
        for w, s in mixture:
            if s.kept(x, y):
                w = convert(w)
                den += w
                num += w * s.outcome_a[x] * s.outcome_b[y]
        if den == 0:
            raise EmptyCellError((int(x), int(y)))
        total += convert(expr.coefficients[x, y]) * num / den
    return float(total)


@dataclass
class PostselectedBound:
    """Largest postselected value found and the mixture attaining it."""

    value: float
    witness: list
    path_class: PathClass
    expression: str
    n_strategies: int
    n_distinct: int

    def to_dict(self):
        return dict(
            bound=self.value, path_class=self.path_class.value,
            expression=self.expression, n_strategies=self.n_strategies,
            n_distinct=self.n_distinct,
            witness=[dict(weight=w, outcome_a=list(s.outcome_a),
                          outcome_b=list(s.outcome_b),
                          path_a=''.join(s.path_a), path_b=''.join(s.path_b))
                     for w, s in self.witness])


def _mixture_values(weights, kept, signed, coef):
    """Postselected values of many mixtures at once; -inf when a cell is empty.

    ``weights`` has shape (n_mixtures, n_members) and ``kept``, ``signed``
    shape (n_mixtures, n_members, n_cells).
    """
    den = np.einsum('mk,mkc->mc', weights, kept)
    num = np.einsum('mk,mkc->mc', weights, signed)
    valid = np.all(den > 0, axis=1)
    with np.errstate(invalid='ignore', divide='ignore'):
        values = (np.where(den > 0, num / den, 0.)).dot(coef)
    return np.where(valid, values, -np.inf)


def _weight_grid():
    t = np.arange(1, WEIGHT_STEPS) / WEIGHT_STEPS
    return t[np.argsort(np.abs(t - 0.5), kind='stable')]


def search_postselected_bound(expr, path_class='setting-dependent', budget=5,
                              seed=0, max_strategies=MAX_STRATEGIES,
                              max_pairs=MAX_PAIRS, n_refine=8, verbose=None):
    """Largest Bell value local path strategies reach under postselection.

    Deterministic strategies are reduced to distinct (kept, sign) patterns on
    the cells the expression uses. All single patterns and all pairs on a
    weight grid of step 1/64 (weights nearest 1/2 first) are scored, then the
    best mixture is refined by pattern search over up to ``n_refine``
    members. The reported value is the witness re-evaluated with rational
    arithmetic, a certified lower bound on the postselected local maximum.

    Parameters
    ----------
    expr : BellExpression
    path_class : PathClass | str
        ``'setting-dependent'`` or ``'fixed-path'``.
        default: 'setting-dependent'
    budget : int
        Restarts of the refinement; 0 skips it.
        default: 5
    seed : int
        default: 0
    max_strategies : int
        Cap on the enumerated strategies.
    max_pairs : int
        Cap on the number of distinct pattern pairs.
    n_refine : int
        Mixture size of the refinement.
    verbose : bool | str | int | None

    Returns
    -------
    bound : PostselectedBound
    """
    set_log_level(verbose)
    path_class = PathClass(path_class)
    n_x, n_y = expr.shape
    cells = np.argwhere(expr.coefficients != 0)
    coef = expr.coefficients[cells[:, 0], cells[:, 1]]
    algebraic_max = float(np.abs(coef).sum())

    oa, pa = _side_strategies(n_x, path_class)
    ob, pb = _side_strategies(n_y, path_class)
    n_strategies = len(oa) * len(ob)
    if n_strategies > max_strategies:
        raise CapExceededError(n_strategies, max_strategies)
    ia, ib = np.divmod(np.arange(n_strategies), len(ob))
    kept = pa[ia][:, cells[:, 0]] == pb[ib][:, cells[:, 1]]
    signed = oa[ia][:, cells[:, 0]] * ob[ib][:, cells[:, 1]] * kept

    _, first = np.unique(signed, axis=0, return_index=True)
    first = np.sort(first)
    n_distinct = first.size
    n_pairs = n_distinct * (n_distinct - 1) // 2
    if n_pairs > max_pairs:
        raise CapExceededError(n_pairs, max_pairs, 'strategy pairs')
    K = kept[first].astype(float)
    S = signed[first].astype(float)
    logger.info('%d strategies, %d distinct postselection patterns'
                % (n_strategies, n_distinct))

    singles = np.where(K.all(axis=1), S.dot(coef), -np.inf)
    best = int(np.argmax(singles))
    best_value, members, weights = singles[best], [best], [1.]

    if n_pairs and best_value < algebraic_max - _MIXTURE_TOL:
        ii, jj = np.triu_indices(n_distinct, k=1)
        for t in _verbose_iterable(_weight_grid()):
            w = np.array([t, 1. - t])
            for start in range(0, n_pairs, _PAIR_BLOCK):
                i, j = ii[start:start + _PAIR_BLOCK], jj[start:start +
                                                         _PAIR_BLOCK]
                values = _mixture_values(
                    np.broadcast_to(w, (i.size, 2)),
                    np.stack([K[i], K[j]], axis=1),
                    np.stack([S[i], S[j]], axis=1), coef)
                k = int(np.argmax(values))
                if values[k] > best_value + _MIXTURE_TOL:
                    best_value = values[k]
                    members, weights = [int(i[k]), int(j[k])], [t, 1. - t]
            if best_value >= algebraic_max - _MIXTURE_TOL:
                break
        _tqdm_log('best single/pair value %.9g' % best_value)

    if budget > 0 and best_value < algebraic_max - _MIXTURE_TOL:
        members, weights, best_value = _refine(
            members, weights, best_value, K, S, coef, budget, seed, n_refine)

    witness = [(float(w), _make_strategy(oa[ia[first[m]]], pa[ia[first[m]]],
                                         ob[ib[first[m]]], pb[ib[first[m]]],
                                         path_class))
               for m, w in zip(members, weights)]
    value = postselected_value(witness, expr, exact=True)
    logger.info('postselected bound of %s (%s): %.9g'
                % (expr.name or 'expression', path_class.value, value))
    return PostselectedBound(value=value, witness=witness,
                             path_class=path_class,
                             expression=expr.name, n_strategies=n_strategies,
                             n_distinct=n_distinct)


def _members_value(members, weights, K, S, coef):
    return _mixture_values(np.asarray(weights)[None], K[members][None],
                           S[members][None], coef)[0]


def _refine(members, weights, best_value, K, S, coef, budget, seed,
            n_refine):
    """Pattern search over softmax weights of the best mixture plus partners.
    """
    n = K.shape[0]
    # partners ranked by an equal-weight mix with the current witness
    w = np.append(np.asarray(weights) / 2., 0.5)
    kept = np.concatenate([np.broadcast_to(K[members], (n, len(members),
                                                        K.shape[1])),
                           K[:, None, :]], axis=1)
    signed = np.concatenate([np.broadcast_to(S[members], (n, len(members),
                                                          S.shape[1])),
                             S[:, None, :]], axis=1)
    scores = _mixture_values(np.broadcast_to(w, (n, w.size)), kept, signed,
                             coef)
    scores[members] = -np.inf
    order = [int(c) for c in np.argsort(-scores, kind='stable')
             if np.isfinite(scores[c])]
    candidates = list(members) + order[:max(0, n_refine - len(members))]
    m = len(candidates)

    def softmax(z):
        e = np.exp(z - z.max())
        return e / e.sum()

    def loss(z):
        return -_members_value(candidates, softmax(z), K, S, coef)

    x0 = np.full(m, -10.)
    x0[:len(members)] = np.log(weights)
    z, value = minimize_free(loss, m, budget, seed, bounds=[(-5., 5.)] * m,
                             x0=x0)
    if -value <= best_value + _MIXTURE_TOL:
        return members, weights, best_value
    w = softmax(z)
    keep = w > 1e-9
    refined = [c for c, k in zip(candidates, keep) if k]
    w = w[keep] / w[keep].sum()
    value = _members_value(refined, w, K, S, coef)
    if value > best_value + _MIXTURE_TOL:
        return refined, w.tolist(), value
    return members, weights, best_value


def postselected_critical_visibility(n, path_class='setting-dependent',
                                     budget=5, seed=0):
    """Visibility a chained test needs once postselection is accounted for.

    The searched postselected local bound divided by the quantum value
    ``2n cos(pi / 2n)``; values above 1 mean no visibility suffices.
    """
    expr = chained_expression(n)
    if PathClass(path_class) is PathClass.FIXED:
        bound = local_bound_by_enumeration(expr)
    else:
        bound = search_postselected_bound(expr, path_class, budget=budget,
                                          seed=seed).value
    return bound / quantum_chained_value(n)


@dataclass
class StationGeometry:
    """Lab positions (m) of the source and both measurement stations."""

    source: tuple
    station_a: tuple
    station_b: tuple

    def __post_init__(self):
        for name in ('source', 'station_a', 'station_b'):
            setattr(self, name,
                    tuple(_check_vector(getattr(self, name), name).tolist()))

    def distance(self, p, q):
        return float(np.linalg.norm(np.subtract(getattr(self, p),
                                                getattr(self, q))))


@dataclass
class SwitchingReport:
    """Switching-rate requirement and its contributing constraints.

    ``constraints`` maps each constraint to the rate it demands in Hz;
    ``windows`` holds the time window (s) in which each side's setting
    choice must fall. ``feasible`` is False when a window is empty.
    """

    rate_hz: float
    binding: str
    constraints: dict
    windows: dict
    feasible: bool

    def to_dict(self):
        def finite(v):
            return 'inf' if np.isinf(v) else v

        return dict(rate_hz=finite(self.rate_hz), binding=self.binding,
                    feasible=self.feasible,
                    constraints={k: finite(v)
                                 for k, v in self.constraints.items()},
                    windows_s=self.windows)


def required_switching_rate(config, geometry):
    """Setting-switching rate a Franson Bell test needs in a given geometry.

    Rule-based requirement: (1) the setting must change within the arm
    imbalance, ``rate >= 1 / delta_t``; (2) each side's setting choice for a
    pair must fall outside the future light cone of the emission and outside
    the past light cone of the remote outcome. With emission at t = 0 and
    outcomes after the fiber transit times, side A's window is
    ``d(S, A) / c - (t_B - d(A, B) / c)``; a fresh choice per window needs
    ``rate >= 1 / window``.

    Parameters
    ----------
    config : FransonConfig
    geometry : StationGeometry

    Returns
    -------
    report : SwitchingReport
        ``binding`` is ``'arm imbalance'`` or ``'light-cone timing'``.

    Raises
    ------
    ValueError
        If a fiber is shorter than the straight line from the source.
    """
    c = SPEED_OF_LIGHT
    d_ab = geometry.distance('station_a', 'station_b')
    arrival = dict()
    for side, station, length in (('A', 'station_a', config.fiber_length_a),
                                  ('B', 'station_b', config.fiber_length_b)):
        if length < geometry.distance('source', station):
            raise ValueError('fiber to side %s (%g m) is shorter than the '
                             'distance from the source (%g m)'
                             % (side, length,
                                geometry.distance('source', station)))
        arrival[side] = config.arrival_time(side)

    windows = dict()
    for side, station in (('A', 'station_a'), ('B', 'station_b')):
        other = 'B' if side == 'A' else 'A'
        latest = geometry.distance('source', station) / c
        earliest = arrival[other] - d_ab / c
        windows[side] = latest - earliest

    constraints = {'arm imbalance': 1. / config.delta_t}
    feasible = all(w > 0 for w in windows.values())
    light_cone = (max(1. / w for w in windows.values()) if feasible
                  else np.inf)
    constraints['light-cone timing'] = light_cone
    binding = max(constraints, key=constraints.get)
    rate = constraints[binding]
    logger.info('switching rate %.4g Hz, binding constraint: %s'
                % (rate, binding))
    return SwitchingReport(rate_hz=rate, binding=binding,
                           constraints=constraints, windows=windows,
                           feasible=feasible)
