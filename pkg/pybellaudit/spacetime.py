"""Special-relativistic event algebra and the causal audit of a schedule.

Coordinates are SI: positions in meters, times in seconds on a shared lab
clock. The interval uses the (+, -, -, -) signature,
``s2 = c**2 * dt**2 - |dx|**2``.
"""

import itertools
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .bell import expression_settings
from .utils import logger, _check_count, _check_vector

SPEED_OF_LIGHT = 299792458.
INTERVAL_TOL = 1.
SIMULTANEITY_RTOL = 1e-12


class EventKind(Enum):
    EMISSION = 'Emission'
    SETTING_CHOICE = 'SettingChoice'
    OUTCOME = 'Outcome'


class Side(Enum):
    A = 'A'
    B = 'B'
    SOURCE = 'Source'

    @property
    def other(self):
        if self is Side.SOURCE:
            raise ValueError('the source has no opposite side')
        return Side.B if self is Side.A else Side.A


class IntervalClass(Enum):
    TIMELIKE = 'Timelike'
    LIGHTLIKE = 'Lightlike'
    SPACELIKE = 'Spacelike'


class Finding(Enum):
    """Closed set of audit finding codes."""

    SINGLE_SETTING_NO_BELL_TEST = (
        'a side uses a single setting: the correlations admit a common-cause '
        'model without any communication, so no Bell test was performed')
    CHOICE_NOT_SPACELIKE_FROM_REMOTE_OUTCOME = (
        'a setting choice is not space-like separated from the remote '
        'outcome (or a multi-setting side has no choice event): subluminal '
        'communication can explain the data')
    OUTCOMES_NOT_SPACELIKE = (
        'the two outcomes are not space-like separated')
    POSTSELECTION_PRESENT_CHSH_INVALID = (
        'coincidences are postselected (Franson-type) and the analysis uses '
        'CHSH, whose local bound does not hold under postselection')
    OK = 'no causal loophole found for the declared events'

    @property
    def code(self):
        return self.name

    @property
    def text(self):
        return self.value


@dataclass(frozen=True)
class Event:
    """A labeled spacetime point.

    Parameters
    ----------
    label : str
        Unique within a schedule.
    kind : EventKind | str
        ``'Emission'``, ``'SettingChoice'`` or ``'Outcome'``.
    side : Side | str
        ``'A'``, ``'B'`` or ``'Source'``.
    position : array-like, shape (3,)
        Meters.
    time : float
        Seconds.
    """

    label: str
    kind: EventKind
    side: Side
    position: tuple
    time: float

    def __post_init__(self):
        object.__setattr__(self, 'kind', EventKind(self.kind))
        object.__setattr__(self, 'side', Side(self.side))
        position = _check_vector(self.position, 'position')
        object.__setattr__(self, 'position', tuple(position.tolist()))
        time = float(self.time)
        if not np.isfinite(time):
            raise ValueError('time must be finite, got %s' % self.time)
        object.__setattr__(self, 'time', time)

    @property
    def x(self):
        return np.array(self.position)


def _deltas(e1, e2):
    return e2.time - e1.time, e2.x - e1.x


def interval_squared(e1, e2):
    """Minkowski interval ``c**2 dt**2 - |dx|**2`` between two events (m**2).

    Symmetric in its arguments.
    """
    dt, dx = _deltas(e1, e2)
    return (SPEED_OF_LIGHT * dt) ** 2 - float(dx.dot(dx))


def classify(e1, e2, tol=INTERVAL_TOL):
    """Light-cone class of a pair of events.

    Parameters
    ----------
    e1, e2 : Event
        The pair; the result does not depend on the order.
    tol : float
        Width ``eps`` of the lightlike band on ``s2``, in m**2.
        default: 1.0

    Returns
    -------
    cls : IntervalClass
        Spacelike iff ``s2 < -eps``, Timelike iff ``s2 > eps``.
    """
    s2 = interval_squared(e1, e2)
    if s2 < -tol:
        return IntervalClass.SPACELIKE
    if s2 > tol:
        return IntervalClass.TIMELIKE
    return IntervalClass.LIGHTLIKE


def min_influence_speed(e1, e2):
    """Slowest influence that could connect two events, in units of c.

    Returns ``inf`` for distinct simultaneous events and ``0`` for
    coincident ones. Events whose light-travel time ``c |dt|`` is below
    ``SIMULTANEITY_RTOL`` times their distance count as simultaneous.
    """
    dt, dx = _deltas(e1, e2)
    distance = float(np.linalg.norm(dx))
    if SPEED_OF_LIGHT * abs(dt) <= SIMULTANEITY_RTOL * distance:
        return np.inf if distance > 0 else 0.
    return distance / abs(dt) / SPEED_OF_LIGHT


def _check_beta(beta):
    beta = _check_vector(beta, 'beta')
    speed = float(np.linalg.norm(beta))
    if speed >= 1:
        raise ValueError('|beta| must be < 1, got %.17g' % speed)
    return beta, speed


def lorentz_boost(e, beta):
    """Coordinates of an event in a frame moving with velocity ``beta * c``.

    Parameters
    ----------
    e : Event
        Event in the lab frame.
    beta : array-like, shape (3,)
        Frame velocity in units of c, ``|beta| < 1``.

    Returns
    -------
    boosted : Event
        Same label, kind and side, transformed ``(t, x)``.
    """
    beta, speed = _check_beta(beta)
    if speed == 0:
        return e
    gamma = 1. / np.sqrt(1. - speed ** 2)
    n = beta / speed
    ct, x = SPEED_OF_LIGHT * e.time, e.x
    along = n.dot(x)
    ct_new = gamma * (ct - speed * along)
    x_new = x + ((gamma - 1.) * along - gamma * speed * ct) * n
    return Event(e.label, e.kind, e.side, x_new, ct_new / SPEED_OF_LIGHT)


def frame_speed_scan(e1, e2, betas):
    """Minimum influence speed of a pair in each of a list of frames.

    Parameters
    ----------
    e1, e2 : Event
        The pair, in lab coordinates.
    betas : iterable of array-like, shape (3,)
        Frame velocities; every ``|beta| < 1``.

    Returns
    -------
    scan : list of (tuple, float)
        ``(beta, speed)`` per frame, in input order.
    """
    scan = list()
    for beta in betas:
        b1, b2 = lorentz_boost(e1, beta), lorentz_boost(e2, beta)
        scan.append((tuple(np.asarray(beta, dtype=float).tolist()),
                     min_influence_speed(b1, b2)))
    return scan


def simultaneity_beta(e1, e2):
    """Boost in which a spacelike pair is simultaneous.

    The frame moves along the separation with ``beta = c dt / |dx|``.
    """
    if classify(e1, e2, tol=0.) is not IntervalClass.SPACELIKE:
        raise ValueError('events %s and %s are not space-like separated'
                         % (e1.label, e2.label))
    dt, dx = _deltas(e1, e2)
    distance = np.linalg.norm(dx)
    return SPEED_OF_LIGHT * dt / distance * dx / distance


@dataclass
class ExperimentSchedule:
    """The events of one Bell-type run plus the number of settings per side.

    A side with a single setting needs no SettingChoice event: a fixed
    setting is chosen in the infinite past.

    Parameters
    ----------
    events : list of Event
    settings_count_a, settings_count_b : int
        Number of distinct settings used on each side.
    postselected : bool
        Whether coincidences are postselected (Franson-type detection).
    bell_expression : str
        ``'chsh'`` or ``'chained-<n>'``; the inequality the data is
        analysed with.
    """

    events: list
    settings_count_a: int = 1
    settings_count_b: int = 1
    postselected: bool = False
    bell_expression: str = 'chsh'

    def __post_init__(self):
        self.events = list(self.events)
        if len(self.events) == 0:
            raise ValueError('schedule must contain at least one event')
        self.settings_count_a = _check_count(self.settings_count_a,
                                             'settings_count_a')
        self.settings_count_b = _check_count(self.settings_count_b,
                                             'settings_count_b')
        labels = [e.label for e in self.events]
        duplicates = sorted(set(lb for lb in labels if labels.count(lb) > 1))
        if duplicates:
            raise ValueError('event labels must be unique, repeated: %s'
                             % ', '.join(duplicates))
        negative = [e.label for e in self.events if e.time < 0]
        if negative:
            raise ValueError('event times must be non-negative: %s'
                             % ', '.join(negative))
        if len(self.by_kind(EventKind.EMISSION)) > 1:
            raise ValueError('a schedule holds at most one Emission event')
        for side in (Side.A, Side.B):
            if not self.by_kind(EventKind.OUTCOME, side):
                raise ValueError('side %s has no Outcome event' % side.value)
        try:
            expression_settings(self.bell_expression)
        except ValueError as err:
            raise ValueError('bell_expression: %s' % err)

    def by_kind(self, kind, side=None):
        return [e for e in self.events
                if e.kind is kind and (side is None or e.side is side)]

    def settings_count(self, side):
        return (self.settings_count_a if side is Side.A
                else self.settings_count_b)


@dataclass
class PairClassification:
    first: str
    second: str
    interval_class: IntervalClass
    interval_squared: float
    min_speed: float


@dataclass
class AuditReport:
    """Pairwise light-cone table and the findings of a causal audit."""

    pair_classifications: dict
    findings: list = field(default_factory=list)
    min_outcome_speed: float = None

    @property
    def codes(self):
        return set(f.code for f in self.findings)

    @property
    def ok(self):
        return self.codes == {Finding.OK.code}

    def to_dict(self):
        """JSON-ready representation; infinite speeds become ``'inf'``."""
        def speed(v):
            return 'inf' if np.isinf(v) else v

        pairs = [dict(first=p.first, second=p.second,
                      interval_class=p.interval_class.value,
                      interval_squared_m2=p.interval_squared,
                      min_speed_c=speed(p.min_speed))
                 for p in self.pair_classifications.values()]
        return dict(pairs=pairs,
                    findings=[dict(code=f.code, text=f.text)
                              for f in self.findings],
                    min_outcome_speed_c=(None if self.min_outcome_speed is None
                                         else speed(self.min_outcome_speed)))


def audit_experiment(schedule, tol=INTERVAL_TOL):
    """Audit a Bell-experiment schedule for causal loopholes.

    Only Emission, SettingChoice and Outcome events are considered relevant.

    Parameters
    ----------
    schedule : ExperimentSchedule
        Validated schedule.
    tol : float
        Lightlike band on ``s2`` (m**2), see :func:`classify`.

    Returns
    -------
    report : AuditReport
        Findings are drawn from :class:`Finding`; ``OK`` appears iff no
        other finding fires.
    """
    if not isinstance(schedule, ExperimentSchedule):
        raise ValueError('schedule must be an ExperimentSchedule, got %s'
                         % type(schedule))
    pairs = dict()
    for e1, e2 in itertools.combinations(schedule.events, 2):
        pairs[(e1.label, e2.label)] = PairClassification(
            e1.label, e2.label, classify(e1, e2, tol),
            interval_squared(e1, e2), min_influence_speed(e1, e2))

    findings = list()
    if min(schedule.settings_count_a, schedule.settings_count_b) < 2:
        findings.append(Finding.SINGLE_SETTING_NO_BELL_TEST)

    choice_loophole = False
    for side in (Side.A, Side.B):
        choices = schedule.by_kind(EventKind.SETTING_CHOICE, side)
        if schedule.settings_count(side) >= 2 and not choices:
            logger.info('side %s uses %d settings but declares no choice '
                        'event' % (side.value, schedule.settings_count(side)))
            choice_loophole = True
        remote = schedule.by_kind(EventKind.OUTCOME, side.other)
        for choice, outcome in itertools.product(choices, remote):
            if classify(choice, outcome, tol) is not IntervalClass.SPACELIKE:
                logger.info('choice %s is not space-like from outcome %s'
                            % (choice.label, outcome.label))
                choice_loophole = True
    if choice_loophole:
        findings.append(Finding.CHOICE_NOT_SPACELIKE_FROM_REMOTE_OUTCOME)

    outcome_pairs = list(itertools.product(
        schedule.by_kind(EventKind.OUTCOME, Side.A),
        schedule.by_kind(EventKind.OUTCOME, Side.B)))
    if any(classify(oa, ob, tol) is not IntervalClass.SPACELIKE
           for oa, ob in outcome_pairs):
        findings.append(Finding.OUTCOMES_NOT_SPACELIKE)
    min_outcome_speed = min(min_influence_speed(oa, ob)
                            for oa, ob in outcome_pairs)

    if schedule.postselected and schedule.bell_expression == 'chsh':
        findings.append(Finding.POSTSELECTION_PRESENT_CHSH_INVALID)

    if not findings:
        findings.append(Finding.OK)
    logger.info('audit findings: %s' % ', '.join(f.code for f in findings))
    return AuditReport(pair_classifications=pairs, findings=findings,
                       min_outcome_speed=min_outcome_speed)


def receiver_from_schedule(schedule):
    """Side whose last outcome comes latest; it may see the remote setting.

    Ties go to ``'A'``.

    Parameters
    ----------
    schedule : ExperimentSchedule

    Returns
    -------
    receiver : 'A' | 'B'
    """
    last_a, last_b = (max(e.time for e in
                          schedule.by_kind(EventKind.OUTCOME, side))
                      for side in (Side.A, Side.B))
    receiver = 'B' if last_b > last_a else 'A'
    logger.info('last outcomes at %.9g s (A) and %.9g s (B): receiver %s'
                % (last_a, last_b, receiver))
    return receiver
