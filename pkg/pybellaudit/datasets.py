"""
Access to the example configurations and tables shipped with pybellaudit
"""
import os.path as op

from .config import load_config
from .correlations import load_table

DATA_DIR = op.join(op.dirname(op.realpath(__file__)), 'data')

EXAMPLE_CONFIGS = {
    'salart_like': 'salart_like.cfg',
    'loophole_aware': 'loophole_aware.cfg',
}


def get_data_path(fname):
    """Absolute path of a file in the package data directory."""
    path = op.join(DATA_DIR, fname)
    if not op.exists(path):
        raise ValueError('no shipped data file named %r' % fname)
    return path


def fetch_example_config(name, load=False):
    """Path of a shipped example configuration.

    Parameters
    ----------
    name : str
        ``'salart_like'``: a phase scan at A with B's setting kept stable,
        postselected and analysed with CHSH. ``'loophole_aware'``: two
        settings per side, each choice space-like separated from the remote
        outcome.
    load : bool
        Return the validated :class:`~pybellaudit.config.ToolConfig` instead
        of the path.
        default: False

    Returns
    -------
    path : str | ToolConfig
    """
    if name not in EXAMPLE_CONFIGS:
        raise ValueError('name must be one of %s, got %s'
                         % (', '.join(sorted(EXAMPLE_CONFIGS)), name))
    path = get_data_path(EXAMPLE_CONFIGS[name])
    return load_config(path) if load else path


def fetch_pr_box_table():
    """The PR box golden table file, loaded as a CorrelationTable."""
    return load_table(get_data_path('pr_box.json'))
