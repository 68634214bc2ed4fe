"""Tests for configuration files and shipped datasets."""

import copy
import json

import numpy as np
from numpy.testing import assert_allclose
from pytest import raises

from pybellaudit import ConfigError
from pybellaudit.config import load_config, parse_config
from pybellaudit.datasets import (EXAMPLE_CONFIGS, fetch_example_config,
                                  fetch_pr_box_table, get_data_path)
from pybellaudit.correlations import pr_box
from pybellaudit.spacetime import audit_experiment


def _example_doc(name='loophole_aware'):
    with open(fetch_example_config(name), encoding='utf-8') as fid:
        return json.load(fid)


def test_example_configs_load():
    """Test every shipped configuration validates."""
    for name in EXAMPLE_CONFIGS:
        config = fetch_example_config(name, load=True)
        assert config.schedule is not None
        assert config.franson is not None
        assert config.geometry is not None
        assert set(config.stations) == {'source', 'lab_a', 'lab_b'}


def test_example_audits():
    """Test the shipped configurations audit as documented."""
    scan = fetch_example_config('salart_like', load=True)
    report = audit_experiment(scan.schedule)
    assert report.codes == {'SINGLE_SETTING_NO_BELL_TEST',
                            'POSTSELECTION_PRESENT_CHSH_INVALID'}
    assert_allclose(report.min_outcome_speed, 12008.3, rtol=1e-5)
    aware = fetch_example_config('loophole_aware', load=True)
    assert audit_experiment(aware.schedule).ok


def test_phase_units():
    """Test degree phases and scan counts are converted to radians."""
    config = fetch_example_config('loophole_aware', load=True)
    assert_allclose(config.franson.phases_a, [0., np.pi / 2])
    assert_allclose(config.franson.phases_b, [-np.pi / 4, np.pi / 4])
    scan = fetch_example_config('salart_like', load=True)
    assert_allclose(scan.franson.phases_a,
                    np.arange(16) * 2 * np.pi / 16)
    assert scan.franson.phases_b == (0.,)


def test_phase_b_default():
    """Test B's phase defaults to a single zero phase."""
    doc = _example_doc()
    del doc['franson']['phases_b_deg']
    assert parse_config(doc).franson.phases_b == (0.,)


def test_all_diagnostics_reported():
    """Test every problem is collected into a single error."""
    doc = _example_doc()
    doc['experiment']['events'][1]['station'] = 'lab_c'
    doc['experiment']['settings_count_a'] = 0
    doc['franson']['visibility'] = 'high'
    doc['franson']['phases_a_rad'] = [0.]
    doc['geometry']['source'] = 'nowhere'
    doc['colour'] = 'blue'
    with raises(ConfigError) as excinfo:
        parse_config(doc, source='bad.cfg')
    diagnostics = excinfo.value.diagnostics
    assert len(diagnostics) == 6
    text = '\n'.join(diagnostics)
    assert 'lab_c' in text
    assert 'settings_count_a' in text
    assert 'visibility' in text
    assert 'only one of' in text
    assert 'nowhere' in text
    assert "unknown field 'colour'" in text
    assert 'bad.cfg' in str(excinfo.value)


def test_unknown_fields():
    """Test misspelt fields are reported."""
    doc = _example_doc()
    doc['franson']['seeds'] = 3
    doc['experiment']['events'][0]['time'] = 0.
    with raises(ConfigError) as excinfo:
        parse_config(doc)
    text = str(excinfo.value)
    assert "'seeds'" in text and "'time'" in text


def test_schedule_errors_become_diagnostics():
    """Test schedule validation errors are reported as diagnostics."""
    doc = _example_doc()
    doc['experiment']['events'] = [
        e for e in doc['experiment']['events'] if e['side'] != 'B']
    with raises(ConfigError, match='side B has no Outcome'):
        parse_config(doc)


def test_franson_errors_become_diagnostics():
    """Test run parameter errors are reported as diagnostics."""
    doc = copy.deepcopy(_example_doc())
    doc['franson']['coincidence_window_s'] = 1e-8
    with raises(ConfigError, match='coincidence window'):
        parse_config(doc)
    doc = _example_doc()
    doc['franson']['n_pairs'] = 1.5
    with raises(ConfigError, match='n_pairs must be an integer'):
        parse_config(doc)


def test_minimal_config():
    """Test sections are optional."""
    config = parse_config({'franson': {'phases_a_scan_count': 4}})
    assert config.schedule is None
    assert config.franson.settings_a == 4
    assert config.output == dict()
    with raises(ConfigError, match='JSON object'):
        parse_config([1, 2])


def test_load_config_errors(tmp_path):
    """Test unreadable and malformed files raise ConfigError."""
    with raises(ConfigError, match='cannot read'):
        load_config(str(tmp_path / 'missing.cfg'))
    fname = tmp_path / 'broken.cfg'
    fname.write_text('{"experiment": ')
    with raises(ConfigError, match='not valid JSON'):
        load_config(str(fname))
    fname.write_text(json.dumps({'output': {'report': 3}}))
    with raises(ConfigError, match='path string'):
        load_config(str(fname))


def test_datasets():
    """Test access to the shipped data files."""
    assert fetch_pr_box_table() == pr_box()
    assert get_data_path('pr_box.json').endswith('pr_box.json')
    with raises(ValueError, match='no shipped data file'):
        get_data_path('nothing.json')
    with raises(ValueError, match='name must be one of'):
        fetch_example_config('aspect_1982')
