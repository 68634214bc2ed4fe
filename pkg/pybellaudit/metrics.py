""" A set of scoring functions for correlation tables. """

import numpy as np


def _probs(table):
    return np.asarray(getattr(table, 'probs', table), dtype=float)


def _check_same_shape(p, q):
    if p.shape != q.shape:
        raise ValueError('tables must have the same shape, got %s and %s'
                         % (p.shape, q.shape))


def max_abs_error(table, other):
    """Largest absolute difference between two tables.

    Parameters
    ----------
    table, other : CorrelationTable | array
        Tables of identical shape (X, Y, A, B).

    Returns
    -------
    score : float
        ``max |P(a, b | x, y) - Q(a, b | x, y)|``.
    """
    p, q = _probs(table), _probs(other)
    _check_same_shape(p, q)
    return float(np.abs(p - q).max())


def total_variation(table, other):
    """Worst-case total variation distance over setting pairs.

    Returns
    -------
    score : float
        ``max_{x,y} 1/2 sum_{a,b} |P - Q|``.
    """
    p, q = _probs(table), _probs(other)
    _check_same_shape(p, q)
    return float(0.5 * np.abs(p - q).sum(axis=(2, 3)).max())


def deviance(counts, table):
    """Deviance of observed counts against a model table.

    Parameters
    ----------
    counts : array, shape (X, Y, A, B)
        Observed joint counts.
    table : CorrelationTable | array
        Model probabilities.

    Returns
    -------
    score : float
        ``2 sum n log(n / (N p))`` over cells with ``n > 0``; infinite when a
        cell with counts has zero model probability.
    """
    counts = np.asarray(counts, dtype=float)
    p = _probs(table)
    _check_same_shape(counts, p)
    totals = counts.sum(axis=(2, 3), keepdims=True)
    expected = totals * p
    mask = counts > 0
    if np.any(expected[mask] <= 0):
        return np.inf
    return float(2 * np.sum(counts[mask] *
                            np.log(counts[mask] / expected[mask])))


def frequency_zscores(counts, table):
    """Binomial z-scores of observed cell frequencies.

    Parameters
    ----------
    counts : array, shape (X, Y, A, B)
    table : CorrelationTable | array

    Returns
    -------
    z : array, shape (X, Y, A, B)
        ``(n - N p) / sqrt(N p (1 - p))``; zero where the model variance is
        zero and the count matches, infinite where it does not.
    """
    counts = np.asarray(counts, dtype=float)
    p = _probs(table)
    _check_same_shape(counts, p)
    totals = counts.sum(axis=(2, 3), keepdims=True)
    diff = counts - totals * p
    sd = np.sqrt(totals * p * (1 - p))
    with np.errstate(divide='ignore', invalid='ignore'):
        z = np.where(sd > 0, diff / sd,
                     np.where(diff == 0, 0., np.inf * np.sign(diff)))
    return z
