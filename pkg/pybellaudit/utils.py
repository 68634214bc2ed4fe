"""
A few miscellaneous helper functions for pybellaudit
"""

import logging
import numbers

import numpy as np


logger = logging.getLogger('pybellaudit')
logger.addHandler(logging.StreamHandler())

try:
    from tqdm.auto import tqdm
    has_tqdm = True
except ImportError:
    logger.warning(
        "tqdm library not found. Falling back to non-interactive progress "
        "visualization.")
    has_tqdm = False


def _check_vector(value, name, size=3):
    """Return ``value`` as a finite float array of length ``size``."""
    arr = np.asarray(value, dtype=float)
    if arr.shape != (size,):
        raise ValueError('%s must have shape (%d,), got %s'
                         % (name, size, arr.shape))
    if not np.all(np.isfinite(arr)):
        raise ValueError('%s must be finite, got %s' % (name, arr))
    return arr


def _check_count(value, name, minimum=1):
    """Check that ``value`` is an integer not smaller than ``minimum``."""
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValueError('%s must be of type int, got %s'
                         % (name, type(value)))
    if value < minimum:
        raise ValueError('%s must be >= %d, got %d' % (name, minimum, value))
    return int(value)


def _check_probability(value, name, low_open=False):
    """Check that ``value`` lies in [0, 1] (or (0, 1] if ``low_open``)."""
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValueError('%s must be a finite real, got %r' % (name, value))
    if value > 1 or value < 0 or (low_open and value == 0):
        interval = '(0, 1]' if low_open else '[0, 1]'
        raise ValueError('%s must be in %s, got %s' % (name, interval, value))
    return float(value)


def set_log_level(verbose):
    """Convenience function for setting the log level.

    Parameters
    ----------
    verbose : bool, str, int, or None
        The verbosity of messages to print. If a str, it can be either DEBUG,
        INFO, WARNING, ERROR, or CRITICAL. Note that these are for
        convenience and are equivalent to passing in logging.DEBUG, etc.
        For bool, True is the same as 'INFO', False is the same as 'WARNING'.
    """
    if verbose is None:
        return
    if isinstance(verbose, bool):
        if verbose is True:
            verbose = 'INFO'
        else:
            verbose = 'WARNING'
    if isinstance(verbose, str):
        verbose = verbose.upper()
        logging_types = dict(DEBUG=logging.DEBUG, INFO=logging.INFO,
                             WARNING=logging.WARNING, ERROR=logging.ERROR,
                             CRITICAL=logging.CRITICAL)
        if verbose not in logging_types:
            raise ValueError('verbose must be of a valid type')
        verbose = logging_types[verbose]
    logger.setLevel(verbose)


def _verbose_iterable(data, total=None):
    """Wrap an iterable object with tqdm.

    If tqdm is not available or if we did not set the appropriate
    log level, then we fall back to the classical method.

    Parameters
    ----------
    data: range, list \n
        This will be data which will wrapped by tqdm (if available).
    total: int | None \n
        Length hint for generators.

    Returns
    -------
    wrapped_data: \n
        Data object wrapped with tqdm.
    """
    wrapped_data = data
    if logger.getEffectiveLevel() == logging.INFO:
        if has_tqdm:
            wrapped_data = tqdm(data, total=total, leave=False)
    return wrapped_data


def _tqdm_log(msg):
    """Log a message by using either tqdm or the system logger. This method
    is needed inside long loops such to provide better visualization.

    Parameters
    ----------
    msg: string
        Message which will be printed
    """
    if has_tqdm and logger.getEffectiveLevel() <= logging.INFO:
        tqdm.write(msg)
    else:
        logger.info(msg)
