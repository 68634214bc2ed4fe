"""Finite-alphabet conditional probability tables ``P(a, b | x, y)``.

Outcome index 0 stands for the value +1 and index 1 for -1 in every
correlator and Bell expression of the package.
"""

import json
from collections import namedtuple

import numpy as np

from .exceptions import ConfigError

NORM_TOL = 1e-9
NEG_TOL = 1e-12
NO_SIGNALING_TOL = 1e-9

# renormalize only when the sum is visibly off; keeps file round-trips exact
_RENORM_EPS = 64 * np.finfo(float).eps

SignalingViolation = namedtuple('SignalingViolation',
                                ['side', 'settings', 'deviation'])
SignalingViolation.__doc__ = """\
A marginal of ``side`` that changes with the remote setting.

``settings`` is ``(local_setting, remote_setting, other_remote_setting)``.
"""


class CorrelationTable(object):
    """Conditional outcome distribution over finite settings and outcomes.

    Parameters
    ----------
    probs : array-like, shape (n_settings_a, n_settings_b, n_outcomes_a,
        n_outcomes_b)
        ``probs[x, y, a, b] = P(a, b | x, y)``. Every ``(x, y)`` block must
        sum to 1 within 1e-9; entries down to -1e-12 are clamped to zero.

    Attributes
    ----------
    probs : array
        Read-only normalized probabilities.
    """

    def __init__(self, probs):
        probs = np.array(probs, dtype=float)
        if probs.ndim != 4:
            raise ValueError('probs must be 4-dimensional [x][y][a][b], '
                             'got %dD' % probs.ndim)
        n_x, n_y, n_a, n_b = probs.shape
        if n_x < 1 or n_y < 1:
            raise ValueError('each side needs at least one setting, got %s'
                             % (probs.shape[:2],))
        if n_a < 2 or n_b < 2:
            raise ValueError('each side needs at least two outcomes, got %s'
                             % (probs.shape[2:],))
        if not np.all(np.isfinite(probs)):
            raise ValueError('probs must be finite')
        if probs.min() < -NEG_TOL:
            raise ValueError('probs has a negative entry %.3g'
                             % probs.min())
        probs[probs < 0] = 0.
        sums = probs.sum(axis=(2, 3))
        worst = np.abs(sums - 1.).max()
        if worst > NORM_TOL:
            x, y = np.unravel_index(np.abs(sums - 1.).argmax(), sums.shape)
            raise ValueError('probabilities for settings (%d, %d) sum to '
                             '%.12g, not 1' % (x, y, sums[x, y]))
        if worst > _RENORM_EPS:
            probs /= sums[:, :, None, None]
        probs.setflags(write=False)
        self._probs = probs

    @property
    def probs(self):
        return self._probs

    @property
    def shape(self):
        return self._probs.shape

    @property
    def settings_a(self):
        return self.shape[0]

    @property
    def settings_b(self):
        return self.shape[1]

    @property
    def outcomes_a(self):
        return self.shape[2]

    @property
    def outcomes_b(self):
        return self.shape[3]

    @property
    def is_binary(self):
        return self.outcomes_a == 2 and self.outcomes_b == 2

    def swap_parties(self):
        """The same experiment with the roles of A and B exchanged."""
        return CorrelationTable(self._probs.transpose(1, 0, 3, 2))

    def __eq__(self, other):
        return (isinstance(other, CorrelationTable) and
                self.shape == other.shape and
                np.array_equal(self._probs, other._probs))

    def __repr__(self):
        return ('<CorrelationTable | settings %d x %d, outcomes %d x %d>'
                % self.shape)

    @classmethod
    def from_counts(cls, counts, pool_marginal=None):
        """Empirical table from joint counts ``counts[x, y, a, b]``.

        Parameters
        ----------
        counts : array-like of int, shape (X, Y, A, B)
            Every ``(x, y)`` cell needs at least one count.
        pool_marginal : None | 'a' | 'b'
            With ``'b'`` the table must have a single B setting and is
            estimated as ``P(b) P(a | x, b)`` with ``P(b)`` pooled over all
            A settings: the maximum-likelihood table of a common-cause model
            with a fixed B setting. ``'a'`` is the mirror case.

        Returns
        -------
        table : CorrelationTable
        """
        counts = np.asarray(counts, dtype=float)
        if counts.ndim != 4:
            raise ValueError('counts must be 4-dimensional, got %dD'
                             % counts.ndim)
        if pool_marginal == 'a':
            flipped = counts.transpose(1, 0, 3, 2)
            return cls.from_counts(flipped, 'b').swap_parties()
        totals = counts.sum(axis=(2, 3))
        if np.any(totals <= 0):
            raise ValueError('every setting pair needs at least one count')
        if pool_marginal is None:
            return cls(counts / totals[:, :, None, None])
        if pool_marginal != 'b':
            raise ValueError("pool_marginal must be None, 'a' or 'b', got %r"
                             % (pool_marginal,))
        if counts.shape[1] != 1:
            raise ValueError('pooling the B marginal needs a single B '
                             'setting, got %d' % counts.shape[1])
        n_b = counts.sum(axis=(0, 1, 2))
        p_b = n_b / n_b.sum()
        n_xb = counts.sum(axis=2, keepdims=True)
        n_a = counts.shape[2]
        with np.errstate(invalid='ignore', divide='ignore'):
            p_a_given_b = np.where(n_xb > 0, counts / n_xb, 1. / n_a)
        return cls(p_a_given_b * p_b[None, None, None, :])

    def to_dict(self):
        return dict(settings_a=self.settings_a, settings_b=self.settings_b,
                    outcomes_a=self.outcomes_a, outcomes_b=self.outcomes_b,
                    probs=self._probs.tolist())

    @classmethod
    def from_dict(cls, data, source=None):
        """Build a table from the JSON table format, checking every field."""
        problems = list()
        if not isinstance(data, dict):
            raise ConfigError(['table must be a JSON object'], source)
        for key in ('settings_a', 'settings_b', 'outcomes_a', 'outcomes_b',
                    'probs'):
            if key not in data:
                problems.append('missing field %r' % key)
        if problems:
            raise ConfigError(problems, source)
        try:
            probs = np.array(data['probs'], dtype=float)
        except (TypeError, ValueError) as err:
            raise ConfigError(['probs is not a numeric nested array: %s'
                               % err], source)
        declared = tuple(data[k] for k in ('settings_a', 'settings_b',
                                           'outcomes_a', 'outcomes_b'))
        if probs.shape != declared:
            raise ConfigError(['probs has shape %s but the header declares %s'
                               % (probs.shape, declared)], source)
        try:
            return cls(probs)
        except ValueError as err:
            raise ConfigError([str(err)], source)


def save_table(table, fname):
    """Write a table in the JSON table format."""
    with open(fname, 'w', encoding='utf-8') as fid:
        json.dump(table.to_dict(), fid, indent=2)
        fid.write('\n')


def load_table(fname):
    """Read a table written by :func:`save_table`."""
    with open(fname, 'r', encoding='utf-8') as fid:
        try:
            data = json.load(fid)
        except json.JSONDecodeError as err:
            raise ConfigError(['not valid JSON: %s' % err], fname)
    return CorrelationTable.from_dict(data, source=fname)


def _check_settings(table, x, y):
    if not (0 <= x < table.settings_a and 0 <= y < table.settings_b):
        raise IndexError('settings (%d, %d) out of range for a %d x %d table'
                         % (x, y, table.settings_a, table.settings_b))


def marginal_a(table, x, y):
    """Distribution of A's outcome given settings ``(x, y)``."""
    _check_settings(table, x, y)
    return table.probs[x, y].sum(axis=1)


def marginal_b(table, x, y):
    """Distribution of B's outcome given settings ``(x, y)``."""
    _check_settings(table, x, y)
    return table.probs[x, y].sum(axis=0)


def correlator(table, x, y):
    """``E(x, y) = P(00) + P(11) - P(01) - P(10)`` for binary outcomes."""
    if not table.is_binary:
        raise ValueError('correlators need binary outcomes, got %d x %d'
                         % (table.outcomes_a, table.outcomes_b))
    _check_settings(table, x, y)
    p = table.probs[x, y]
    return p[0, 0] + p[1, 1] - p[0, 1] - p[1, 0]


def correlators(table):
    """All correlators as an array of shape (X, Y)."""
    if not table.is_binary:
        raise ValueError('correlators need binary outcomes, got %d x %d'
                         % (table.outcomes_a, table.outcomes_b))
    p = table.probs
    return p[:, :, 0, 0] + p[:, :, 1, 1] - p[:, :, 0, 1] - p[:, :, 1, 0]


def no_signaling_check(table, tol=NO_SIGNALING_TOL):
    """Check that no marginal depends on the remote setting.

    Parameters
    ----------
    table : CorrelationTable
    tol : float
        Largest marginal difference still accepted.
        default: 1e-9

    Returns
    -------
    violations : list of SignalingViolation
        Empty when the table is no-signaling.
    """
    p = table.probs
    violations = list()
    for side, marg in (('A', p.sum(axis=3)),
                       ('B', p.sum(axis=2).transpose(1, 0, 2))):
        # marg[local, remote, outcome]
        n_local, n_remote = marg.shape[:2]
        for local in range(n_local):
            for r1 in range(n_remote):
                for r2 in range(r1 + 1, n_remote):
                    dev = np.abs(marg[local, r1] - marg[local, r2]).max()
                    if dev > tol:
                        violations.append(
                            SignalingViolation(side, (local, r1, r2), dev))
    return violations


def pr_box():
    """The Popescu-Rohrlich box: ``a XOR b = x AND y`` with uniform marginals.
    """
    probs = np.zeros((2, 2, 2, 2))
    for x, y, a in np.ndindex(2, 2, 2):
        probs[x, y, a, a ^ (x & y)] = 0.5
    return CorrelationTable(probs)


def uniform_table(settings_a=2, settings_b=2, outcomes_a=2, outcomes_b=2):
    """Table where every outcome pair is equally likely."""
    shape = (settings_a, settings_b, outcomes_a, outcomes_b)
    return CorrelationTable(np.full(shape, 1. / (outcomes_a * outcomes_b)))


def fringe_table(phases_a, phases_b, visibility=1.):
    """Binary table with ``P(a, b | x, y) = (1 +/- V cos(phi_x + phi_y)) / 4``.

    The sign is ``+`` for equal outcomes, so ``E(x, y) = V cos(phi_x +
    phi_y)`` and all marginals are uniform.

    Parameters
    ----------
    phases_a, phases_b : array-like of float
        Phase settings in radians, one per setting index.
    visibility : float
        Fringe visibility in [0, 1].
        default: 1.0

    Returns
    -------
    table : CorrelationTable
    """
    phases_a = np.atleast_1d(np.asarray(phases_a, dtype=float))
    phases_b = np.atleast_1d(np.asarray(phases_b, dtype=float))
    if phases_a.ndim != 1 or phases_b.ndim != 1 or \
            phases_a.size == 0 or phases_b.size == 0:
        raise ValueError('phases must be non-empty 1D sequences')
    if not 0 <= visibility <= 1:
        raise ValueError('visibility must be in [0, 1], got %s' % visibility)
    corr = visibility * np.cos(phases_a[:, None] + phases_b[None, :])
    probs = np.empty(corr.shape + (2, 2))
    probs[..., 0, 0] = probs[..., 1, 1] = (1 + corr) / 4
    probs[..., 0, 1] = probs[..., 1, 0] = (1 - corr) / 4
    return CorrelationTable(probs)


def deterministic_table(response_a, response_b, outcomes_a=2, outcomes_b=2):
    """0/1 table of fixed responses ``response_a[x]``, ``response_b[y]``.
    """
    response_a, response_b = list(response_a), list(response_b)
    probs = np.zeros((len(response_a), len(response_b),
                      outcomes_a, outcomes_b))
    for x, a in enumerate(response_a):
        for y, b in enumerate(response_b):
            probs[x, y, a, b] = 1.
    return CorrelationTable(probs)
