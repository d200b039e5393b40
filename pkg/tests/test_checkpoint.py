from __future__ import annotations

import numpy as np
import pytest

from poiseuille2d import (
    BifurcationEvent,
    CheckpointCorruptedError,
    CheckpointError,
    CheckpointVersionError,
    ContinuationCurve,
    ContinuationPoint,
    EventKind,
    Formulation,
    ModulatedWave,
    ResumeState,
    SimulationCheckpoint,
    SpectralState,
    TravellingWave,
    load_checkpoint,
    save_checkpoint,
)
from poiseuille2d.checkpoint import (
    CHECKPOINT_MAGIC,
    CheckpointFrame,
    RecordKind,
    decode,
    encode,
    record_kind,
)
from poiseuille2d.integrator import IntegratorState
from poiseuille2d.models import StabilitySpectrum
from poiseuille2d.state import state_layout


@pytest.fixture
def state(disc, rng):
    size = state_layout(disc, Formulation.PRESSURE).size
    data = rng.standard_normal(size)
    return SpectralState(disc=disc, formulation=Formulation.PRESSURE, data=data)


@pytest.fixture
def spectrum():
    return StabilitySpectrum(
        eigenvalues=np.array([0.01 + 0.3j, 0.01 - 0.3j, -0.5 + 0j]),
        trivial=1e-12 + 0j,
        unstable_count=2,
    )


def assert_same_state(a, b):
    assert a.disc == b.disc
    assert a.formulation == b.formulation
    np.testing.assert_array_equal(a.data, b.data)


def test_state_is_bit_identical(tmp_path, state):
    path = save_checkpoint(tmp_path / 'state.p2d', state)
    loaded = load_checkpoint(path, SpectralState)
    assert_same_state(loaded, state)
    assert not (tmp_path / 'state.p2d.tmp').exists()


@pytest.mark.parametrize('with_history', [False, True])
def test_simulation(tmp_path, state, rng, with_history):
    nl_prev = rng.standard_normal(state.data.size) if with_history else None
    record = SimulationCheckpoint(
        state=IntegratorState(U=state.data, dt=0.02, t=12.34, step_count=617, nl_prev=nl_prev),
        disc=state.disc,
        formulation=state.formulation,
        Re=6000.0,
        c=0.28,
    )
    loaded = load_checkpoint(save_checkpoint(tmp_path / 'run.p2d', record))
    assert (loaded.Re, loaded.c) == (6000.0, 0.28)
    assert (loaded.state.dt, loaded.state.t, loaded.state.step_count) == (0.02, 12.34, 617)
    np.testing.assert_array_equal(loaded.state.U, state.data)
    if with_history:
        np.testing.assert_array_equal(loaded.state.nl_prev, nl_prev)
    else:
        assert loaded.state.nl_prev is None


def test_wave(state, spectrum):
    wave = TravellingWave(
        Re=5815.6, c=0.2823, state=state, amplitude=0.0563, residual=1e-11, spectrum=spectrum
    )
    loaded = decode(encode(wave))
    assert isinstance(loaded, TravellingWave)
    assert (loaded.Re, loaded.c, loaded.amplitude, loaded.residual) == (
        5815.6,
        0.2823,
        0.0563,
        1e-11,
    )
    assert_same_state(loaded.state, state)
    np.testing.assert_array_equal(loaded.spectrum.eigenvalues, spectrum.eigenvalues)
    assert loaded.spectrum.trivial == spectrum.trivial
    assert loaded.spectrum.unstable_count == 2


def test_modulated_wave(state):
    wave = ModulatedWave(
        Re=7000.0,
        c=0.28,
        state=state,
        tau=17.52,
        n_c=2,
        amplitude=0.05,
        s1=0.0,
        s2=0.01,
        residual=1e-9,
    )
    loaded = decode(encode(wave))
    assert isinstance(loaded, ModulatedWave)
    assert (loaded.tau, loaded.n_c, loaded.s2) == (17.52, 2, 0.01)
    assert loaded.multipliers is None
    assert_same_state(loaded.state, state)


def test_curve(tmp_path, state, spectrum, rng):
    points = [
        ContinuationPoint(
            Re=5900.0 + i,
            c=0.28,
            amplitude=0.05 + 0.01 * i,
            state=state,
            tangent=rng.standard_normal(state.data.size),
            ds=0.1,
            iterations=3,
            spectrum=spectrum if i else None,
        )
        for i in range(3)
    ]
    events = [
        BifurcationEvent(
            kind=EventKind.SADDLE_NODE, Re=5815.6, c=0.2823, amplitude=0.056, index=1
        ),
        BifurcationEvent(
            kind=EventKind.HOPF,
            Re=6926.8,
            c=0.27,
            amplitude=0.1,
            index=2,
            eigenvalue=0.35863j,
            tau=17.52,
            approximate=True,
        ),
    ]
    jacobian = rng.standard_normal((4, 5))
    curve = ContinuationCurve(
        disc=state.disc,
        formulation=state.formulation,
        points=points,
        events=events,
        truncated=True,
        message='step size underflow',
        resume=ResumeState(ds=0.05, age=2, jacobian=jacobian),
    )
    loaded = load_checkpoint(save_checkpoint(tmp_path / 'curve.p2d', curve), ContinuationCurve)
    assert loaded.events == events
    assert loaded.truncated
    assert loaded.message == 'step size underflow'
    assert loaded.scaling == curve.scaling
    assert (loaded.resume.ds, loaded.resume.age) == (0.05, 2)
    np.testing.assert_array_equal(loaded.resume.jacobian, jacobian)
    np.testing.assert_array_equal(loaded.reynolds, curve.reynolds)
    for a, b in zip(loaded.points, points, strict=True):
        assert_same_state(a.state, b.state)
        np.testing.assert_array_equal(a.tangent, b.tangent)
        assert (a.ds, a.iterations, a.tau, a.n_c) == (b.ds, b.iterations, None, None)
    assert loaded.points[0].spectrum is None
    assert loaded.points[1].spectrum.unstable_count == 2


def test_record_kind(state):
    assert record_kind(state) is RecordKind.STATE
    with pytest.raises(CheckpointError):
        record_kind(object())


def test_wrong_type(tmp_path, state):
    path = save_checkpoint(tmp_path / 'state.p2d', state)
    with pytest.raises(CheckpointError, match='expected TravellingWave'):
        load_checkpoint(path, TravellingWave)


def test_checksum_mismatch(state):
    data = bytearray(encode(state))
    data[-10] ^= 0xFF
    with pytest.raises(CheckpointCorruptedError):
        decode(bytes(data))


def test_truncated(state):
    with pytest.raises(CheckpointCorruptedError):
        decode(encode(state)[:-5])


def test_bad_magic(state):
    data = b'XXXX' + encode(state)[len(CHECKPOINT_MAGIC) :]
    with pytest.raises(CheckpointCorruptedError, match='Not a checkpoint'):
        decode(data)


def test_other_version(state):
    frame = CheckpointFrame.parse(encode(state))
    data = CheckpointFrame.build(
        {
            'magic': CHECKPOINT_MAGIC,
            'version': 99,
            'kind': frame.kind,
            'payload': frame.payload,
        }
    )
    with pytest.raises(CheckpointVersionError):
        decode(data)


def test_unknown_kind(state):
    frame = CheckpointFrame.parse(encode(state))
    data = CheckpointFrame.build(
        {'magic': CHECKPOINT_MAGIC, 'version': 1, 'kind': 42, 'payload': frame.payload}
    )
    with pytest.raises(CheckpointCorruptedError, match='record kind'):
        decode(data)
