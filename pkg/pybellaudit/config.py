"""Run configuration files (``*.cfg``, UTF-8 JSON).

Every schema problem is collected before anything is computed, and all of
them are reported together in one :class:`ConfigError`.
"""

import json
import numbers
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError
from .franson import FransonConfig, StationGeometry
from .spacetime import Event, EventKind, ExperimentSchedule, Side

TOP_LEVEL_KEYS = ('experiment', 'franson', 'geometry', 'output')
OUTPUT_KEYS = ('report', 'csv', 'summary', 'table')
_KINDS = [k.value for k in EventKind]
_SIDES = [s.value for s in Side]


@dataclass
class ToolConfig:
    """Validated content of a configuration file.

    Attributes
    ----------
    stations : dict
        Station name to position (m).
    schedule : ExperimentSchedule | None
    franson : FransonConfig | None
    geometry : StationGeometry | None
    output : dict
        Optional output paths keyed by ``report``, ``csv``, ``summary`` and
        ``table``.
    source : str | None
        File the configuration was read from.
    """

    stations: dict = field(default_factory=dict)
    schedule: ExperimentSchedule = None
    franson: FransonConfig = None
    geometry: StationGeometry = None
    output: dict = field(default_factory=dict)
    source: str = None


def _is_number(value):
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


def _is_int(value):
    return isinstance(value, numbers.Integral) and not isinstance(value, bool)


class _Checker(object):
    """Accumulates diagnostics while walking a config document."""

    def __init__(self):
        self.problems = list()

    def error(self, msg):
        self.problems.append(msg)

    def require(self, section, key, where, check, expected):
        if key not in section:
            self.error('%s: missing field %r' % (where, key))
            return None
        value = section[key]
        if not check(value):
            self.error('%s.%s must be %s, got %r' % (where, key, expected,
                                                     value))
            return None
        return value

    def unknown(self, section, allowed, where):
        for key in sorted(set(section) - set(allowed)):
            self.error('%s: unknown field %r' % (where, key))


def _parse_stations(doc, checker):
    stations = dict()
    entries = doc.get('stations')
    if not isinstance(entries, list) or not entries:
        checker.error('experiment.stations must be a non-empty list')
        return stations
    for i, st in enumerate(entries):
        where = 'experiment.stations[%d]' % i
        if not isinstance(st, dict):
            checker.error('%s must be an object' % where)
            continue
        name = checker.require(st, 'name', where,
                               lambda v: isinstance(v, str) and v, 'a name')
        pos = checker.require(
            st, 'position_m', where,
            lambda v: (isinstance(v, list) and len(v) == 3 and
                       all(_is_number(c) and np.isfinite(c) for c in v)),
            'a list of 3 finite numbers')
        if name is None or pos is None:
            continue
        if name in stations:
            checker.error('%s: duplicate station name %r' % (where, name))
        stations[name] = tuple(float(c) for c in pos)
    return stations


def _parse_events(doc, stations, checker):
    events = list()
    entries = doc.get('events')
    if not isinstance(entries, list) or not entries:
        checker.error('experiment.events must be a non-empty list')
        return events
    for i, ev in enumerate(entries):
        where = 'experiment.events[%d]' % i
        if not isinstance(ev, dict):
            checker.error('%s must be an object' % where)
            continue
        checker.unknown(ev, ('label', 'kind', 'side', 'station', 'time_s'),
                        where)
        label = checker.require(ev, 'label', where,
                                lambda v: isinstance(v, str) and v, 'a label')
        kind = checker.require(ev, 'kind', where, lambda v: v in _KINDS,
                               'one of %s' % ', '.join(_KINDS))
        side = checker.require(ev, 'side', where, lambda v: v in _SIDES,
                               'one of %s' % ', '.join(_SIDES))
        station = checker.require(ev, 'station', where,
                                  lambda v: isinstance(v, str), 'a name')
        time = checker.require(ev, 'time_s', where,
                               lambda v: _is_number(v) and np.isfinite(v),
                               'a finite number')
        if station is not None and station not in stations:
            checker.error('%s references unknown station %r'
                          % (where, station))
            continue
        if None in (label, kind, side, station, time):
            continue
        events.append(Event(label, kind, side, stations[station], time))
    return events


def _parse_experiment(doc, checker):
    if not isinstance(doc, dict):
        checker.error('experiment must be an object')
        return dict(), None
    checker.unknown(doc, ('stations', 'events', 'settings_count_a',
                          'settings_count_b', 'postselected',
                          'bell_expression'), 'experiment')
    stations = _parse_stations(doc, checker)
    events = _parse_events(doc, stations, checker)
    counts = [checker.require(doc, key, 'experiment',
                              lambda v: _is_int(v) and v >= 1,
                              'an integer >= 1')
              for key in ('settings_count_a', 'settings_count_b')]
    postselected = doc.get('postselected', False)
    if not isinstance(postselected, bool):
        checker.error('experiment.postselected must be true or false')
    expression = doc.get('bell_expression', 'chsh')
    if checker.problems or None in counts:
        return stations, None
    try:
        schedule = ExperimentSchedule(events, counts[0], counts[1],
                                      postselected, expression)
    except ValueError as err:
        checker.error('experiment: %s' % err)
        return stations, None
    return stations, schedule


def _parse_phases(doc, side, checker):
    keys = [k for k in ('phases_%s_rad' % side, 'phases_%s_deg' % side,
                        'phases_%s_scan_count' % side) if k in doc]
    if len(keys) > 1:
        checker.error('franson: give only one of %s' % ', '.join(keys))
        return None
    if not keys:
        if side == 'a':
            checker.error('franson: missing phases_a_rad, phases_a_deg or '
                          'phases_a_scan_count')
            return None
        return (0.,)
    key, value = keys[0], doc[keys[0]]
    if key.endswith('scan_count'):
        if not _is_int(value) or value < 1:
            checker.error('franson.%s must be an integer >= 1, got %r'
                          % (key, value))
            return None
        return tuple(np.linspace(0, 2 * np.pi, value, endpoint=False))
    if not isinstance(value, list) or not value or \
            not all(_is_number(v) and np.isfinite(v) for v in value):
        checker.error('franson.%s must be a non-empty list of numbers' % key)
        return None
    phases = np.asarray(value, dtype=float)
    if key.endswith('_deg'):
        phases = np.deg2rad(phases)
    return tuple(phases.tolist())


_FRANSON_FIELDS = dict(delta_t_s='delta_t', visibility='visibility',
                       detector_efficiency='detector_efficiency',
                       coincidence_window_s='coincidence_window',
                       n_pairs='n_pairs', seed='seed',
                       fiber_length_a_m='fiber_length_a',
                       fiber_length_b_m='fiber_length_b',
                       refractive_index='refractive_index')


def _parse_franson(doc, checker):
    if not isinstance(doc, dict):
        checker.error('franson must be an object')
        return None
    phase_keys = ['phases_%s_%s' % (s, u) for s in 'ab'
                  for u in ('rad', 'deg', 'scan_count')]
    checker.unknown(doc, list(_FRANSON_FIELDS) + phase_keys, 'franson')
    kwargs = dict()
    for key, name in _FRANSON_FIELDS.items():
        if key in doc:
            value = doc[key]
            integral = name in ('n_pairs', 'seed')
            if (integral and not _is_int(value)) or \
                    (not integral and not _is_number(value)):
                checker.error('franson.%s must be %s, got %r'
                              % (key, 'an integer' if integral else
                                 'a number', value))
                continue
            kwargs[name] = value
    phases_a = _parse_phases(doc, 'a', checker)
    phases_b = _parse_phases(doc, 'b', checker)
    if checker.problems:
        return None
    try:
        return FransonConfig(phases_a=phases_a, phases_b=phases_b, **kwargs)
    except ValueError as err:
        checker.error('franson: %s' % err)
        return None


def _parse_geometry(doc, stations, checker):
    if not isinstance(doc, dict):
        checker.error('geometry must be an object')
        return None
    keys = ('source', 'station_a', 'station_b')
    checker.unknown(doc, keys, 'geometry')
    positions = list()
    for key in keys:
        name = doc.get(key)
        if name not in stations:
            checker.error('geometry.%s references unknown station %r'
                          % (key, name))
        else:
            positions.append(stations[name])
    if len(positions) < 3:
        return None
    return StationGeometry(*positions)


def parse_config(data, source=None):
    """Validate a decoded configuration document.

    Parameters
    ----------
    data : dict
        The decoded JSON document.
    source : str | None
        Name used in diagnostics.

    Returns
    -------
    config : ToolConfig

    Raises
    ------
    ConfigError
        Listing every problem found.
    """
    checker = _Checker()
    if not isinstance(data, dict):
        raise ConfigError(['configuration must be a JSON object'], source)
    checker.unknown(data, TOP_LEVEL_KEYS, 'config')
    config = ToolConfig(source=source)
    if 'experiment' in data:
        config.stations, config.schedule = _parse_experiment(
            data['experiment'], checker)
    if 'franson' in data:
        config.franson = _parse_franson(data['franson'], checker)
    if 'geometry' in data:
        config.geometry = _parse_geometry(data['geometry'], config.stations,
                                          checker)
    output = data.get('output', dict())
    if not isinstance(output, dict):
        checker.error('output must be an object')
    else:
        checker.unknown(output, OUTPUT_KEYS, 'output')
        for key, value in output.items():
            if not isinstance(value, str):
                checker.error('output.%s must be a path string' % key)
        config.output = dict(output)
    if checker.problems:
        raise ConfigError(checker.problems, source)
    return config


def load_config(fname):
    """Read and validate a configuration file.

    Parameters
    ----------
    fname : str
        Path of a UTF-8 JSON configuration.

    Returns
    -------
    config : ToolConfig
    """
    try:
        with open(fname, 'r', encoding='utf-8') as fid:
            data = json.load(fid)
    except OSError as err:
        raise ConfigError(['cannot read file: %s' % err], fname)
    except (json.JSONDecodeError, UnicodeDecodeError) as err:
        raise ConfigError(['not valid JSON: %s' % err], fname)
    return parse_config(data, source=fname)
