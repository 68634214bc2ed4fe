"""Pybellaudit: causal audits, local bounds and common-cause models for Bell tests"""

# PEP0440 compatible formatted version, see:
# https://www.python.org/dev/peps/pep-0440/
#
# Generic release markers:
#   X.Y
#   X.Y.Z   # For bugfix releases
#
# Admissible pre-release markers:
#   X.YaN   # Alpha release
#   X.YbN   # Beta release
#   X.YrcN  # Release Candidate
#   X.Y     # Final release
#
# Dev branch marker is: 'X.Y.devN' where N is an integer.
#

__version__ = '0.1.dev0'


from .spacetime import (Event, EventKind, Side, IntervalClass, Finding, ExperimentSchedule, AuditReport, interval_squared, classify, min_influence_speed, lorentz_boost, frame_speed_scan, simultaneity_beta, audit_experiment, receiver_from_schedule, SPEED_OF_LIGHT)
from .correlations import (CorrelationTable, marginal_a, marginal_b, correlator, correlators, no_signaling_check, pr_box, uniform_table, deterministic_table, fringe_table, save_table, load_table)
from .lhv import (DeterministicStrategy, LocalModel, CommStrategy, CommModel, PolytopeCertificate, CommonCauseModel, predict, build_single_setting_model, build_comm_model, local_polytope_membership, save_model, load_model)
from .bell import (BellExpression, chsh_expression, chained_expression, evaluate, local_bound_by_enumeration, quantum_chained_value, critical_visibility, optimal_quantum_phases, chained_tradeoff)
from .franson import (FransonConfig, PathStrategy, PathClass, RunRecord, RunSummary, StationGeometry, quantum_postselected_table, simulate_run, scan_fringe, fit_fringe, postselected_value, search_postselected_bound, postselected_critical_visibility, required_switching_rate)
from .numeric import LinearProgram, solve_lp, minimize_free, rng_stream
from .config import load_config
from .datasets import fetch_example_config, fetch_pr_box_table
from .utils import set_log_level
from .exceptions import CapExceededError, ConfigError, EmptyCellError, NotFittedError, SignalingError
