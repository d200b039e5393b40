from __future__ import annotations

import numpy as np
import pytest

from poiseuille2d import DivergenceError, Formulation, ParameterError
from poiseuille2d.integrator import (
    AmplitudeObserver,
    ModeObserver,
    integrate,
    restart,
    start,
    step,
)
from poiseuille2d.reduced import laminar_mode
from poiseuille2d.spectral import build_operators
from poiseuille2d.state import laminar_vector, state_layout


def test_laminar_flow_stays_laminar(pressure_ops):
    U = laminar_vector(pressure_ops.disc, Formulation.PRESSURE)
    result = integrate(start(U, pressure_ops.dt), pressure_ops, 0.2)
    np.testing.assert_allclose(result.state.U, U, atol=1e-12)


def test_step_count_and_time(flux_ops):
    U = laminar_vector(flux_ops.disc, Formulation.FLUX)
    result = integrate(start(U, flux_ops.dt, t=1.0), flux_ops, 1.1)
    assert result.state.step_count == 10
    assert result.state.t == pytest.approx(1.1)
    assert result.records == []


def test_integrate_to_past_time_does_nothing(flux_ops):
    U = laminar_vector(flux_ops.disc, Formulation.FLUX)
    result = integrate(start(U, flux_ops.dt, t=2.0), flux_ops, 1.0)
    assert result.state.step_count == 0


def test_time_step_mismatch(pressure_ops):
    U = laminar_vector(pressure_ops.disc, Formulation.PRESSURE)
    with pytest.raises(ParameterError):
        step(start(U, 2.0 * pressure_ops.dt), pressure_ops)


def test_divergence_is_reported(pressure_ops):
    U = laminar_vector(pressure_ops.disc, Formulation.PRESSURE)
    U[-1] = np.nan
    with pytest.raises(DivergenceError) as info:
        step(start(U, pressure_ops.dt), pressure_ops)
    assert info.value.step == 1


def test_restart_drops_history(pressure_ops, rng):
    U = laminar_vector(pressure_ops.disc, Formulation.PRESSURE)
    state = step(start(U + 1e-3 * rng.standard_normal(U.size), pressure_ops.dt), pressure_ops)
    assert state.nl_prev is not None
    assert restart(state).nl_prev is None
    assert restart(state).step_count == state.step_count


def test_observers(pressure_ops, rng):
    disc = pressure_ops.disc
    U = laminar_vector(disc, Formulation.PRESSURE)
    U += 1e-3 * rng.standard_normal(U.size)
    amplitude = AmplitudeObserver(every=2)
    coefficient = ModeObserver(k=1, every=5)
    result = integrate(start(U, pressure_ops.dt), pressure_ops, 0.1, [amplitude, coefficient])
    assert len(amplitude.records) == 5
    assert len(coefficient.records) == 2
    assert result.records == [amplitude.records, coefficient.records]
    t, value = coefficient.records[-1]
    layout = state_layout(disc, Formulation.PRESSURE)
    i = layout.mode_start(1) + disc.M // 2 - 1
    assert t == pytest.approx(0.1)
    assert value == complex(result.state.U[i], result.state.U[i + layout.mode_size])


def test_viscous_decay(disc, rng):
    ops = build_operators(disc, 5.0, dt=0.01)
    U = laminar_vector(disc, Formulation.PRESSURE) + 1e-2 * rng.standard_normal(
        state_layout(disc, Formulation.PRESSURE).size
    )
    observer = AmplitudeObserver(every=50)
    integrate(start(U, ops.dt), ops, 5.0, [observer])
    amplitudes = [a for _, a in observer.records]
    assert amplitudes[-1] < 0.5 * amplitudes[0]


def test_small_perturbation_follows_leading_mode(pressure_ops):
    disc = pressure_ops.disc
    layout = state_layout(disc, Formulation.PRESSURE)
    value, vector = laminar_mode(pressure_ops, 1)
    eps = 1e-7
    ub = np.zeros((disc.N, disc.M - 2), dtype=np.complex128)
    ub[0] = eps * vector
    x0 = laminar_vector(disc, Formulation.PRESSURE)[: layout.zero_size]
    U = layout.join(x0, ub)

    T = 1.0
    result = integrate(start(U, pressure_ops.dt), pressure_ops, T)
    _, ub_end = layout.split(result.state.U)
    expected = eps * np.exp(value * T) * vector
    error = np.abs(ub_end[0] - expected).max() / np.abs(expected).max()
    assert error < 1e-3


def test_step_halving_shows_second_order(pressure_ops):
    disc = pressure_ops.disc
    layout = state_layout(disc, Formulation.PRESSURE)
    _, vector = laminar_mode(pressure_ops, 1)
    ub = np.zeros((disc.N, disc.M - 2), dtype=np.complex128)
    ub[0] = 0.2 * vector
    ub[1] = 0.1 * vector
    x0 = laminar_vector(disc, Formulation.PRESSURE)[: layout.zero_size]
    U = layout.join(x0, ub)

    finals = []
    for dt in (0.02, 0.01, 0.005):
        ops = build_operators(disc, pressure_ops.Re, pressure_ops.c, dt=dt)
        finals.append(integrate(start(U, dt), ops, 0.4).state.U)
    coarse = np.abs(finals[0] - finals[1]).max()
    fine = np.abs(finals[1] - finals[2]).max()
    assert np.log2(coarse / fine) >= 1.9


def test_flux_is_conserved(flux_ops, rng):
    disc = flux_ops.disc
    layout = state_layout(disc, Formulation.FLUX)
    U = laminar_vector(disc, Formulation.FLUX) + 1e-2 * rng.standard_normal(layout.size)
    result = integrate(start(U, flux_ops.dt), flux_ops, 2.0)
    assert result.state.step_count == 200
    x0, _ = layout.split(result.state.U)
    flux = flux_ops.spectral.flux(flux_ops.zero.nodal(x0))
    assert flux == pytest.approx(4.0 / 3.0, abs=1e-12)
