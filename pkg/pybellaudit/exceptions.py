"""
The :mod:`pybellaudit.exceptions` module includes all custom error classes
used across pybellaudit.
"""

__all__ = ['CapExceededError',
           'ConfigError',
           'EmptyCellError',
           'NotFittedError',
           'SignalingError']


class CapExceededError(ValueError):
    """Raised when an enumeration would exceed the configured cap.

    The strategy spaces handled by :mod:`pybellaudit.lhv`,
    :mod:`pybellaudit.bell` and :mod:`pybellaudit.franson` grow
    exponentially with the number of settings. Instead of silently degrading
    to a partial search the computation is refused.

    Examples
    --------
    >>> from pybellaudit import chained_expression, local_bound_by_enumeration
    >>> local_bound_by_enumeration(chained_expression(12))  # doctest: +SKIP
    Traceback (most recent call last):
    ...
    CapExceededError: instance too large: 16777216 strategies > cap 1000000
    """

    def __init__(self, size, cap, what='strategies'):
        self.size = size
        self.cap = cap
        super(CapExceededError, self).__init__(
            'instance too large: %d %s > cap %d' % (size, what, cap))


class SignalingError(ValueError):
    """Raised when a table signals in a direction a construction forbids.

    ``side`` is the side whose marginal depends on the remote setting and
    ``deviation`` the largest marginal difference found.
    """

    def __init__(self, side, deviation, message=None):
        self.side = side
        self.deviation = deviation
        if message is None:
            message = ('marginal of side %s depends on the remote setting '
                       '(max deviation %.3g); no model of this kind can '
                       'reproduce the table' % (side, deviation))
        super(SignalingError, self).__init__(message)


class EmptyCellError(ValueError):
    """Raised when a postselected cell keeps no weight at all."""

    def __init__(self, cell):
        self.cell = cell
        super(EmptyCellError, self).__init__(
            'empty cell: setting pair %s has zero kept weight' % (cell,))


class ConfigError(ValueError):
    """Raised when a configuration or input file fails validation.

    Attributes
    ----------
    diagnostics : list of str
        Every schema problem found, not just the first one.
    """

    def __init__(self, diagnostics, source=None):
        self.diagnostics = list(diagnostics)
        self.source = source
        head = 'invalid configuration'
        if source is not None:
            head += ' in %s' % source
        super(ConfigError, self).__init__(
            head + ':\n  ' + '\n  '.join(self.diagnostics))


class NotFittedError(ValueError, AttributeError):
    """Exception class to raise if a model is used before fitting.

    This class inherits from both ValueError and AttributeError to help with
    exception handling and backward compatibility.
    """
