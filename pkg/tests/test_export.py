from __future__ import annotations

import math

import numpy as np
import pytest

import poiseuille2d
from poiseuille2d import (
    BifurcationEvent,
    ContinuationCurve,
    ContinuationPoint,
    EventKind,
    Formulation,
    NeutralPoint,
    SpectralState,
)
from poiseuille2d.export import (
    SCHEMA_VERSION,
    WAVE_COLUMNS,
    format_value,
    header_lines,
    parse_float,
    read_header,
    read_table,
    write_energy_history,
    write_events,
    write_neutral_curve,
    write_spectrum,
    write_table,
    write_torus_section,
    write_wave_curve,
)
from poiseuille2d.models import StabilitySpectrum
from poiseuille2d.quasiperiodic import TorusSection


@pytest.mark.parametrize(
    ('value', 'expected'),
    [
        (None, ''),
        (True, 'true'),
        (np.bool_(False), 'false'),
        (0.1, '0.1'),
        (np.float64(1 / 3), repr(1 / 3)),
        (7, '7'),
        ('text', 'text'),
        (Formulation.FLUX, 'flux'),
        (EventKind.HOPF, 'hopf'),
    ],
)
def test_format_value(value, expected):
    assert format_value(value) == expected


def test_floats_read_back_exactly(tmp_path):
    values = [1 / 3, math.pi * 1e-17, 5815.600000000001]
    path = write_table(tmp_path / 'values.csv', 'values', {}, ('x',), [(v,) for v in values])
    assert [float(row['x']) for row in read_table(path)] == values


def test_header():
    lines = header_lines('wave-curve', {'re': 6000.0, 'alpha': 1.02056}, ('Re', 'c'))
    assert lines[0] == f'# schema: wave-curve/{SCHEMA_VERSION}'
    assert lines[1] == f'# version: {poiseuille2d.version}'
    assert lines[2:4] == ['# alpha: 1.02056', '# re: 6000.0']
    assert lines[-1] == '# columns: Re,c'


def test_header_read_back(tmp_path):
    params = {'n': 4, 'note': 'a: b'}
    path = write_table(tmp_path / 'out' / 't.csv', 'test', params, ('x',), [])
    header = read_header(path)
    assert header['schema'] == f'test/{SCHEMA_VERSION}'
    assert header['n'] == '4'
    assert header['note'] == 'a: b'
    assert read_table(path) == []


def test_parse_float():
    assert parse_float('2.5') == 2.5
    assert math.isnan(parse_float(''))


def test_neutral_curve(tmp_path):
    points = [
        NeutralPoint(alpha=1.0, Re=5815.0, frequency=0.27, upper=False),
        NeutralPoint(alpha=1.3, Re=None),
    ]
    rows = read_table(write_neutral_curve(tmp_path / 'neutral.csv', points, {}))
    assert rows[0] == {'alpha': '1.0', 'Re': '5815.0', 'frequency': '0.27', 'upper': 'false'}
    assert rows[1]['Re'] == ''


def test_wave_curve(tmp_path, disc):
    state = SpectralState.laminar(disc, Formulation.PRESSURE)
    spectrum = StabilitySpectrum(
        eigenvalues=np.array([0.02 + 0.3j, -0.1 + 0j]), trivial=0j, unstable_count=2
    )
    points = [
        ContinuationPoint(
            Re=6000.0 - 10 * i,
            c=0.28,
            amplitude=0.05,
            state=state,
            tangent=np.zeros(state.data.size + 1),
            ds=0.1,
            iterations=2,
            spectrum=spectrum if i == 1 else None,
        )
        for i in range(3)
    ]
    events = [
        BifurcationEvent(
            kind=EventKind.SADDLE_NODE, Re=5990.0, c=0.28, amplitude=0.05, index=1
        ),
        BifurcationEvent(kind=EventKind.HOPF, Re=5990.0, c=0.28, amplitude=0.05, index=1),
    ]
    curve = ContinuationCurve(
        disc=disc, formulation=Formulation.PRESSURE, points=points, events=events
    )
    path = write_wave_curve(tmp_path / 'curve.csv', curve, {'mode': 'wave-continue'})
    rows = read_table(path)
    assert list(rows[0]) == list(WAVE_COLUMNS)
    assert [row['Re'] for row in rows] == ['6000.0', '5990.0', '5980.0']
    assert rows[0]['unstable'] == ''
    assert rows[1]['unstable'] == '2'
    assert rows[1]['leading_real'] == '0.02'
    assert rows[1]['events'] == 'saddle-node+hopf'
    assert read_header(path)['truncated'] == 'false'

    events_path = write_events(tmp_path / 'events.csv', events, {})
    assert [row['kind'] for row in read_table(events_path)] == ['saddle-node', 'hopf']


def test_spectrum(tmp_path):
    spectrum = StabilitySpectrum(
        eigenvalues=np.array([3.0 + 4.0j, -1.0 + 0j]), trivial=0j, unstable_count=1
    )
    path = write_spectrum(tmp_path / 'spectrum.csv', spectrum, {})
    rows = read_table(path)
    assert rows[0]['modulus'] == '5.0'
    assert rows[1]['imag'] == '0.0'
    assert read_header(path)['unstable_count'] == '1'


def test_history_and_torus(tmp_path):
    history = read_table(
        write_energy_history(tmp_path / 'history.csv', [(0.0, 0.1), (0.5, 0.2)], {})
    )
    assert history == [{'t': '0.0', 'amplitude': '0.1'}, {'t': '0.5', 'amplitude': '0.2'}]

    section = TorusSection(
        indices=(3, 7),
        trajectory=np.array([[0.0, 1.0, 2.0], [0.1, 1.5, 2.5]]),
        section=np.array([[0.05, 0.0, 2.2]]),
    )
    path = write_torus_section(tmp_path / 'torus.csv', section, {})
    rows = read_table(path)
    assert [row['set'] for row in rows] == ['trajectory', 'trajectory', 'section']
    assert rows[2]['x_j'] == '2.2'
    assert (read_header(path)['i'], read_header(path)['j']) == ('3', '7')
