"""Common-cause (local hidden variable) explanations of correlation tables.

A hidden variable ``lambda`` selects a deterministic response for each
side; a model is a weighted mixture of such responses. The one-way
communication models additionally let one side's response depend on the
remote setting.
"""

import itertools
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .base import BaseEstimator, check_is_fitted
from .correlations import CorrelationTable, NO_SIGNALING_TOL
from .exceptions import CapExceededError, ConfigError, SignalingError
from .metrics import max_abs_error
from .numeric import LinearProgram, solve_lp, FEAS_TOL
from .utils import logger, set_log_level

MAX_STRATEGIES = 10 ** 6
WEIGHT_TOL = 1e-12
ALLOWED_METHODS = ['auto', 'single-setting', 'comm', 'polytope']


@dataclass(frozen=True)
class DeterministicStrategy:
    """``a = response_a[x]`` and ``b = response_b[y]``."""

    response_a: tuple
    response_b: tuple


@dataclass(frozen=True)
class CommStrategy:
    """Deterministic responses where the receiver also sees the remote setting.

    For ``receiver='A'``, ``response_a[x][y]`` and ``response_b[y]``; for
    ``receiver='B'``, ``response_a[x]`` and ``response_b[x][y]``.
    """

    response_a: tuple
    response_b: tuple
    receiver: str = 'A'


def _check_weights(weights):
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 1 or weights.size == 0:
        raise ValueError('a model needs at least one component')
    if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
        raise ValueError('component weights must be finite and > 0')
    total = weights.sum()
    if abs(total - 1.) > 1e-9:
        raise ValueError('component weights sum to %.12g, not 1' % total)
    return weights / total


def _check_responses(responses, n_components, n_outcomes, name):
    responses = np.asarray(responses, dtype=int)
    if responses.shape[0] != n_components:
        raise ValueError('%s has %d rows for %d components'
                         % (name, responses.shape[0], n_components))
    if responses.min() < 0 or responses.max() >= n_outcomes:
        raise ValueError('%s holds outcomes outside range(%d)'
                         % (name, n_outcomes))
    return responses


class LocalModel(object):
    """Weighted mixture of deterministic response strategies.

    Parameters
    ----------
    weights : array, shape (n_components,)
        Positive weights summing to 1.
    responses_a : array of int, shape (n_components, n_settings_a)
    responses_b : array of int, shape (n_components, n_settings_b)
    outcomes_a, outcomes_b : int
        Outcome alphabet sizes.
    """

    def __init__(self, weights, responses_a, responses_b, outcomes_a=2,
                 outcomes_b=2):
        self.weights = _check_weights(weights)
        n = self.weights.size
        self.responses_a = _check_responses(responses_a, n, outcomes_a,
                                            'responses_a').reshape(n, -1)
        self.responses_b = _check_responses(responses_b, n, outcomes_b,
                                            'responses_b').reshape(n, -1)
        self.outcomes_a = outcomes_a
        self.outcomes_b = outcomes_b

    @classmethod
    def from_components(cls, components, outcomes_a=2, outcomes_b=2):
        """Build from a list of ``(weight, DeterministicStrategy)``."""
        weights = [w for w, _ in components]
        responses_a = [s.response_a for _, s in components]
        responses_b = [s.response_b for _, s in components]
        return cls(weights, responses_a, responses_b, outcomes_a, outcomes_b)

    @property
    def components(self):
        return [(w, DeterministicStrategy(tuple(ra.tolist()),
                                          tuple(rb.tolist())))
                for w, ra, rb in zip(self.weights, self.responses_a,
                                     self.responses_b)]

    @property
    def shape(self):
        return (self.responses_a.shape[1], self.responses_b.shape[1],
                self.outcomes_a, self.outcomes_b)

    def swap_parties(self):
        return LocalModel(self.weights, self.responses_b, self.responses_a,
                          self.outcomes_b, self.outcomes_a)

    def __len__(self):
        return self.weights.size

    def __repr__(self):
        return ('<LocalModel | %d components, settings %d x %d>'
                % ((len(self),) + self.shape[:2]))


class CommModel(object):
    """Mixture of strategies with one-way communication of the setting.

    Parameters
    ----------
    weights : array, shape (n_components,)
    responses_a, responses_b : array of int
        The receiver's responses have shape (n_components, X, Y); the
        sender's (n_components, X) or (n_components, Y).
    receiver : 'A' | 'B'
        The side that learns the remote setting.
    outcomes_a, outcomes_b : int
    """

    def __init__(self, weights, responses_a, responses_b, receiver='A',
                 outcomes_a=2, outcomes_b=2):
        if receiver not in ('A', 'B'):
            raise ValueError("receiver must be 'A' or 'B', got %r"
                             % (receiver,))
        self.weights = _check_weights(weights)
        n = self.weights.size
        self.responses_a = _check_responses(responses_a, n, outcomes_a,
                                            'responses_a')
        self.responses_b = _check_responses(responses_b, n, outcomes_b,
                                            'responses_b')
        recv, send = ((self.responses_a, self.responses_b) if receiver == 'A'
                      else (self.responses_b, self.responses_a))
        if recv.ndim != 3 or send.ndim != 2:
            raise ValueError('receiver responses must be 3D and sender '
                             'responses 2D')
        self.receiver = receiver
        self.outcomes_a = outcomes_a
        self.outcomes_b = outcomes_b

    @property
    def shape(self):
        recv = (self.responses_a if self.receiver == 'A'
                else self.responses_b)
        return recv.shape[1:] + (self.outcomes_a, self.outcomes_b)

    @property
    def components(self):
        def as_tuple(arr):
            return tuple(map(tuple, arr.tolist())) if arr.ndim == 2 \
                else tuple(arr.tolist())

        return [(w, CommStrategy(as_tuple(ra), as_tuple(rb), self.receiver))
                for w, ra, rb in zip(self.weights, self.responses_a,
                                     self.responses_b)]

    def swap_parties(self):
        recv = self.responses_a if self.receiver == 'A' else self.responses_b
        send = self.responses_b if self.receiver == 'A' else self.responses_a
        recv = recv.transpose(0, 2, 1)
        if self.receiver == 'A':
            return CommModel(self.weights, send, recv, 'B',
                             self.outcomes_b, self.outcomes_a)
        return CommModel(self.weights, recv, send, 'A',
                         self.outcomes_b, self.outcomes_a)

    def __len__(self):
        return self.weights.size

    def __repr__(self):
        return ('<CommModel | %d components, receiver %s>'
                % (len(self), self.receiver))


def predict(model, shape=None):
    """Correlation table generated by a mixture of strategies.

    Parameters
    ----------
    model : LocalModel | CommModel
    shape : tuple | None
        Expected ``(X, Y, A, B)``; a mismatch raises ValueError.

    Returns
    -------
    table : CorrelationTable
    """
    if shape is not None and tuple(shape) != model.shape:
        raise ValueError('model shape %s does not match requested shape %s'
                         % (model.shape, tuple(shape)))
    n_x, n_y, n_a, n_b = model.shape
    k, x, y = np.meshgrid(np.arange(len(model)), np.arange(n_x),
                          np.arange(n_y), indexing='ij')
    ra, rb = model.responses_a, model.responses_b
    if isinstance(model, LocalModel):
        a, b = ra[k, x], rb[k, y]
    elif model.receiver == 'A':
        a, b = ra[k, x, y], rb[k, y]
    else:
        a, b = ra[k, x], rb[k, x, y]
    probs = np.zeros((n_x, n_y, n_a, n_b))
    np.add.at(probs, (x, y, a, b), model.weights[k])
    return CorrelationTable(probs)


def _marginal_spread(marg, axis):
    """Largest change of a marginal along the remote-setting ``axis``."""
    return float((marg.max(axis=axis) - marg.min(axis=axis)).max())


def _conditional(probs, marg):
    """``P(a | ..., b)``; uniform where the conditioning event is null."""
    n_a = probs.shape[-2]
    with np.errstate(invalid='ignore', divide='ignore'):
        return np.where(marg > 0, probs / marg, 1. / n_a)


def _mixture_from_factors(factors, max_strategies):
    """Enumerate the support of a product of independent factors.

    ``factors`` is a list of 1D probability arrays. Returns the index
    tuples with positive probability (lexicographic) and their weights.
    """
    supports = [np.flatnonzero(f > 0) for f in factors]
    size = int(np.prod([len(s) for s in supports], dtype=float))
    if size > max_strategies:
        raise CapExceededError(size, max_strategies)
    grid = np.array(list(itertools.product(*supports)), dtype=int)
    grid = grid.reshape(-1, len(factors))
    weights = np.ones(grid.shape[0])
    for i, f in enumerate(factors):
        weights *= f[grid[:, i]]
    return grid, weights


def build_single_setting_model(table, max_strategies=MAX_STRATEGIES):
    """Common-cause model reproducing a table with one setting on a side.

    With B's setting fixed, ``lambda = (b, a_1, ..., a_X)`` with weight
    ``P(b) prod_x P(a_x | x, b)``; B always answers ``b`` and A answers
    ``a_x`` for setting ``x``. A table with ``settings_a == 1`` is handled
    by exchanging the parties.

    Parameters
    ----------
    table : CorrelationTable
        Needs ``settings_b == 1`` or ``settings_a == 1``, and the fixed
        side's marginal must not depend on the other side's setting.
    max_strategies : int
        Cap on the number of components.

    Returns
    -------
    model : LocalModel
        ``predict(model)`` reproduces ``table``.
    """
    if table.settings_b != 1:
        if table.settings_a == 1:
            return build_single_setting_model(
                table.swap_parties(), max_strategies).swap_parties()
        raise ValueError('the single-setting construction needs one setting '
                         'on a side, got %d x %d'
                         % (table.settings_a, table.settings_b))
    probs = table.probs[:, 0]                    # [x, a, b]
    marg_b = probs.sum(axis=1)                   # [x, b]
    spread = _marginal_spread(marg_b, axis=0)
    if spread > NO_SIGNALING_TOL:
        raise SignalingError('B', spread)
    p_b = marg_b.mean(axis=0)
    cond = _conditional(probs, marg_b[:, None, :])   # [x, a, b]

    weights, resp_a, resp_b = [], [], []
    for b in np.flatnonzero(p_b > 0):
        factors = [cond[x, :, b] for x in range(table.settings_a)]
        grid, w = _mixture_from_factors(factors, max_strategies)
        weights.append(p_b[b] * w)
        resp_a.append(grid)
        resp_b.append(np.full((grid.shape[0], 1), b))
    weights = np.concatenate(weights)
    keep = weights > 0
    model = LocalModel(weights[keep], np.vstack(resp_a)[keep],
                       np.vstack(resp_b)[keep], table.outcomes_a,
                       table.outcomes_b)
    logger.info('single-setting model with %d components' % len(model))
    return model


def build_comm_model(table, receiver='A', max_strategies=MAX_STRATEGIES):
    """Model with one-way communication of the sender's setting.

    Uses the chain rule ``P(a, b | x, y) = P(b | y) P(a | b, x, y)``:
    ``lambda = (b_1, ..., b_Y, a_xy for all x, y)`` with weight
    ``prod_y P(b_y | y) prod_xy P(a_xy | x, y, b_y)``.

    Parameters
    ----------
    table : CorrelationTable
        The sender's marginal must not depend on the receiver's setting.
    receiver : 'A' | 'B'
        Side that learns the remote setting.
    max_strategies : int
        Cap on the number of components.

    Returns
    -------
    model : CommModel
    """
    if receiver == 'B':
        return build_comm_model(table.swap_parties(), 'A',
                                max_strategies).swap_parties()
    if receiver != 'A':
        raise ValueError("receiver must be 'A' or 'B', got %r" % (receiver,))
    probs = table.probs                          # [x, y, a, b]
    marg_b = probs.sum(axis=2)                   # [x, y, b]
    spread = _marginal_spread(marg_b, axis=0)
    if spread > NO_SIGNALING_TOL:
        raise SignalingError(
            'B', spread, 'marginal of B depends on the setting of A '
            '(max deviation %.3g): not even one-way communication from B to '
            'A can explain the table' % spread)
    p_b = marg_b.mean(axis=0)                    # [y, b]
    cond = _conditional(probs, marg_b[:, :, None, :])
    n_x, n_y = table.settings_a, table.settings_b

    b_grid, b_weights = _mixture_from_factors(
        [p_b[y] for y in range(n_y)], max_strategies)
    weights, resp_a, resp_b = [], [], []
    n_total = 0
    for b_tuple, b_weight in zip(b_grid, b_weights):
        factors = [cond[x, y, :, b_tuple[y]]
                   for x in range(n_x) for y in range(n_y)]
        grid, w = _mixture_from_factors(factors, max_strategies)
        n_total += grid.shape[0]
        if n_total > max_strategies:
            raise CapExceededError(n_total, max_strategies)
        weights.append(b_weight * w)
        resp_a.append(grid.reshape(-1, n_x, n_y))
        resp_b.append(np.tile(b_tuple, (grid.shape[0], 1)))
    weights = np.concatenate(weights)
    keep = weights > 0
    model = CommModel(weights[keep], np.concatenate(resp_a)[keep],
                      np.concatenate(resp_b)[keep], 'A', table.outcomes_a,
                      table.outcomes_b)
    logger.info('one-way communication model with %d components'
                % len(model))
    return model


def strategy_grid(n_settings, n_outcomes):
    """All response maps ``range(n_settings) -> range(n_outcomes)``.

    Rows are in lexicographic order.
    """
    return np.array(list(itertools.product(range(n_outcomes),
                                           repeat=n_settings)),
                    dtype=int).reshape(-1, n_settings)


def _strategy_matrix(shape):
    """0/1 matrix ``D[(x, y, a, b), lambda]`` over deterministic strategies.
    """
    n_x, n_y, n_a, n_b = shape
    grid_a, grid_b = strategy_grid(n_x, n_a), strategy_grid(n_y, n_b)
    ind_a = (grid_a.T[:, None, :] == np.arange(n_a)[None, :, None])
    ind_b = (grid_b.T[:, None, :] == np.arange(n_b)[None, :, None])
    D = np.einsum('xai,ybj->xyabij', ind_a.astype(float),
                  ind_b.astype(float))
    return D.reshape(n_x * n_y * n_a * n_b, -1), grid_a, grid_b


def _check_enumeration(shape, max_strategies):
    n_x, n_y, n_a, n_b = shape
    size = float(n_a) ** n_x * float(n_b) ** n_y
    if size > max_strategies:
        raise CapExceededError(int(size), max_strategies)


@dataclass
class PolytopeCertificate:
    """A linear functional separating a table from the local polytope.

    Attributes
    ----------
    coefficients : array, shape (X, Y, A, B)
        Weights of the functional on ``P(a, b | x, y)``.
    local_bound : float
        Maximum of the functional over all deterministic strategies.
    value : float
        Value of the functional on the certified table.
    """

    coefficients: np.ndarray
    local_bound: float
    value: float

    @property
    def violation(self):
        return self.value - self.local_bound

    def check(self, table, tol=1e-7, max_strategies=MAX_STRATEGIES):
        """Recompute value and bound; True iff value > bound + tol."""
        _check_enumeration(table.shape, max_strategies)
        D, _, _ = _strategy_matrix(table.shape)
        coefficients = self.coefficients.ravel()
        bound = float(D.T.dot(coefficients).max())
        value = float(table.probs.ravel().dot(coefficients))
        return value > bound + tol

    def to_dict(self):
        return dict(type='polytope-certificate',
                    coefficients=self.coefficients.tolist(),
                    local_bound=self.local_bound, value=self.value)


@dataclass
class MembershipResult:
    feasible: bool
    model: LocalModel = None
    certificate: PolytopeCertificate = None
    n_iter: int = 0


def local_polytope_membership(table, max_strategies=MAX_STRATEGIES,
                              tol=FEAS_TOL):
    """Decide whether a table is a mixture of deterministic strategies.

    Solves the feasibility LP over the weights of all
    ``A**X * B**Y`` deterministic strategies (lexicographic order).

    Parameters
    ----------
    table : CorrelationTable
    max_strategies : int
        Refuse larger instances with :class:`CapExceededError`.
        default: 1e6
    tol : float
        LP feasibility tolerance.

    Returns
    -------
    result : MembershipResult
        ``model`` when feasible, otherwise a self-checking ``certificate``.
    """
    _check_enumeration(table.shape, max_strategies)
    D, grid_a, grid_b = _strategy_matrix(table.shape)
    n_rows, n_strategies = D.shape
    logger.info('local polytope LP: %d strategies, %d constraints'
                % (n_strategies, n_rows))
    p = table.probs.ravel()
    lp = LinearProgram(c=np.zeros(n_strategies), A=D, b=p,
                       senses=['='] * n_rows)
    res = solve_lp(lp, tol=tol)

    if res.status == 'optimal':
        w = np.clip(res.x, 0., None)
        support = np.flatnonzero(w > WEIGHT_TOL)
        ia, ib = np.divmod(support, grid_b.shape[0])
        model = LocalModel(w[support] / w[support].sum(), grid_a[ia],
                           grid_b[ib], table.outcomes_a, table.outcomes_b)
        err = max_abs_error(predict(model), table)
        if err > 1e-7:
            warnings.warn('LP model reproduces the table only to %.3g' % err)
        return MembershipResult(True, model=model, n_iter=res.n_iter)

    y = res.dual / np.abs(res.dual).max()
    certificate = PolytopeCertificate(
        coefficients=y.reshape(table.shape),
        local_bound=float(D.T.dot(y).max()), value=float(p.dot(y)))
    logger.info('table outside the local polytope: functional value %.6g '
                '> local bound %.6g' % (certificate.value,
                                        certificate.local_bound))
    return MembershipResult(False, certificate=certificate,
                            n_iter=res.n_iter)


class CommonCauseModel(BaseEstimator):
    """Fit a common-cause explanation to a correlation table.

    Parameters
    ----------
    method : str
        ``'auto'`` uses the single-setting construction when a side has one
        setting and the local-polytope LP otherwise. ``'single-setting'``,
        ``'comm'`` (one-way communication) and ``'polytope'`` force a
        construction.
        default: 'auto'
    receiver : 'A' | 'B'
        Receiving side for ``method='comm'``.
        default: 'A'
    max_strategies : int
        Enumeration cap.
        default: 1e6
    verbose : bool | str | int
        default: False

    Attributes
    ----------
    model_ : LocalModel | CommModel | None
        The fitted mixture, None when the table is outside the local
        polytope.
    certificate_ : PolytopeCertificate | None
        Separating functional for a nonlocal table.
    method_ : str
        Construction actually used.

    Examples
    --------
    >>> from pybellaudit import CommonCauseModel, pr_box
    >>> ccm = CommonCauseModel().fit(pr_box())
    >>> ccm.model_ is None, ccm.certificate_.violation > 0
    (True, True)
    """

    def __init__(self, method='auto', receiver='A',
                 max_strategies=MAX_STRATEGIES, verbose=False):
        if method not in ALLOWED_METHODS:
            raise ValueError('method must be one of %s, got %s'
                             % (', '.join(ALLOWED_METHODS), method))
        self.method = method
        self.receiver = receiver
        self.max_strategies = max_strategies
        self.verbose = verbose
        set_log_level(verbose)

    def fit(self, table):
        """Construct the model.

        Parameters
        ----------
        table : CorrelationTable

        Returns
        -------
        self : instance of CommonCauseModel
        """
        if not isinstance(table, CorrelationTable):
            raise ValueError('table must be a CorrelationTable, got %s'
                             % type(table))
        method = self.method
        if method == 'auto':
            single = min(table.settings_a, table.settings_b) == 1
            method = 'single-setting' if single else 'polytope'
        self.certificate_ = None
        if method == 'single-setting':
            self.model_ = build_single_setting_model(table,
                                                     self.max_strategies)
        elif method == 'comm':
            self.model_ = build_comm_model(table, self.receiver,
                                           self.max_strategies)
        else:
            result = local_polytope_membership(table, self.max_strategies)
            self.model_ = result.model
            self.certificate_ = result.certificate
        self.method_ = method
        self.shape_ = table.shape
        return self

    def predict(self):
        """Table predicted by the fitted model."""
        check_is_fitted(self, ['method_'])
        if self.model_ is None:
            raise ValueError('the fitted table is outside the local polytope; '
                             'see certificate_')
        return predict(self.model_, self.shape_)

    def score(self, table):
        """Largest absolute probability error of the fitted model on ``table``.
        """
        return max_abs_error(self.predict(), table)


def model_to_dict(model):
    """JSON-ready representation of a LocalModel or CommModel."""
    n_x, n_y, n_a, n_b = model.shape
    data = dict(settings_a=n_x, settings_b=n_y, outcomes_a=n_a,
                outcomes_b=n_b,
                components=[dict(weight=float(w), response_a=ra.tolist(),
                                 response_b=rb.tolist())
                            for w, ra, rb in zip(model.weights,
                                                 model.responses_a,
                                                 model.responses_b)])
    if isinstance(model, CommModel):
        data['type'] = 'comm'
        data['receiver'] = model.receiver
    else:
        data['type'] = 'local'
    return data


def model_from_dict(data, source=None):
    """Inverse of :func:`model_to_dict`."""
    try:
        comps = data['components']
        weights = [c['weight'] for c in comps]
        ra = [c['response_a'] for c in comps]
        rb = [c['response_b'] for c in comps]
        n_a, n_b = data['outcomes_a'], data['outcomes_b']
        if data['type'] == 'comm':
            model = CommModel(weights, ra, rb, data['receiver'], n_a, n_b)
        elif data['type'] == 'local':
            model = LocalModel(weights, ra, rb, n_a, n_b)
        else:
            raise ValueError('unknown model type %r' % data['type'])
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(['malformed model: %s' % err], source)
    declared = tuple(data.get(k) for k in ('settings_a', 'settings_b',
                                           'outcomes_a', 'outcomes_b'))
    if declared != model.shape:
        raise ConfigError(['model header %s does not match components %s'
                           % (declared, model.shape)], source)
    return model


def save_model(model, fname):
    """Write a model in the JSON model format."""
    with open(fname, 'w', encoding='utf-8') as fid:
        json.dump(model_to_dict(model), fid, indent=2)
        fid.write('\n')


def load_model(fname):
    """Read a model written by :func:`save_model`."""
    with open(fname, 'r', encoding='utf-8') as fid:
        try:
            data = json.load(fid)
        except json.JSONDecodeError as err:
            raise ConfigError(['not valid JSON: %s' % err], fname)
    return model_from_dict(data, source=fname)
