from __future__ import annotations

import numpy as np
import pytest

from poiseuille2d import (
    ConversionDirection,
    Formulation,
    FormulationError,
    ParameterError,
    SpectralState,
    TravellingWave,
)
from poiseuille2d.reduced import (
    amplitude_of,
    amplitude_of_fields,
    convert_formulation,
    convert_state,
    expand,
    jacobian,
    laminar_mode,
    mean_pressure_gradient,
    nonlinear_term,
    parity_defect,
    recover_pressure,
    residual_norm,
    rhs,
    translation_part,
    viscous_part,
)
from poiseuille2d.spectral import build_operators
from poiseuille2d.state import laminar_vector, state_layout, translate


def perturbed(ops, rng, scale=0.05):
    U = laminar_vector(ops.disc, ops.formulation)
    return U + scale * rng.standard_normal(U.size)


@pytest.fixture(params=list(Formulation), ids=lambda f: f.value)
def ops(request, pressure_ops, flux_ops):
    return pressure_ops if request.param is Formulation.PRESSURE else flux_ops


def test_laminar_flow_is_steady(ops):
    U = laminar_vector(ops.disc, ops.formulation)
    np.testing.assert_allclose(rhs(ops, U), 0.0, atol=1e-12)
    assert residual_norm(ops, U) < 1e-12


def test_batched_rhs(ops, rng):
    U = np.column_stack([perturbed(ops, rng) for _ in range(3)])
    batch = rhs(ops, U)
    assert batch.shape == U.shape
    for j in range(3):
        np.testing.assert_allclose(batch[:, j], rhs(ops, U[:, j]), atol=1e-12)


def test_jacobian_matches_rhs(ops, rng):
    U = perturbed(ops, rng)
    dU = rng.standard_normal(U.size)
    J = jacobian(ops, U, chunk=7)
    # The right-hand side is quadratic, so central differences are exact.
    expected = (rhs(ops, U + dU) - rhs(ops, U - dU)) / 2.0
    np.testing.assert_allclose(J @ dU, expected, atol=1e-9)


def test_rhs_commutes_with_translation(ops, rng):
    U = perturbed(ops, rng)
    shift = 0.7
    moved = rhs(ops, translate(ops.disc, U, shift))
    np.testing.assert_allclose(moved, translate(ops.disc, rhs(ops, U), shift), atol=1e-11)


def test_translation_part_is_derivative_in_c(ops, rng):
    U = perturbed(ops, rng)
    plus = rhs(ops.with_parameters(c=ops.c + 1.0), U)
    minus = rhs(ops.with_parameters(c=ops.c - 1.0), U)
    np.testing.assert_allclose(translation_part(ops, U), (plus - minus) / 2.0, atol=1e-11)


def test_viscous_part_is_derivative_in_reynolds(ops, rng):
    U = perturbed(ops, rng)
    h = 1e-3 * ops.Re
    plus = rhs(ops.with_parameters(Re=ops.Re + h), U)
    minus = rhs(ops.with_parameters(Re=ops.Re - h), U)
    expected = -viscous_part(ops, U) / ops.Re
    np.testing.assert_allclose((plus - minus) / (2.0 * h), expected, rtol=1e-5, atol=1e-12)


def test_rhs_matches_unreduced_momentum_equations(ops, rng):
    disc, spectral = ops.disc, ops.spectral
    U = perturbed(ops, rng)
    Nu, Nv = nonlinear_term(ops, U)
    u, v = expand(spectral, ops.zero, U[:, np.newaxis])
    du, dv = expand(spectral, ops.zero, rhs(ops, U)[:, np.newaxis], affine=False)
    M = disc.M
    n = M - 1
    for mode in spectral.modes:
        ika = 1j * mode.k * disc.alpha
        H = spectral.D2 - (mode.k * disc.alpha) ** 2 * np.eye(n)
        fu = -Nu[mode.k] + H @ u[mode.k, :, 0] / ops.Re
        fv = -Nv[mode.k] + H @ v[mode.k, :, 0] / ops.Re
        # unknowns: du/dt and dv/dt on interior nodes, pressure on Gauss nodes
        A = np.zeros((3 * M - 2, 3 * M - 2), dtype=np.complex128)
        A[:n, :n] = np.eye(n)
        A[:n, 2 * n :] = ika * spectral.E
        A[n : 2 * n, n : 2 * n] = np.eye(n)
        A[n : 2 * n, 2 * n :] = spectral.dE
        A[2 * n :, :n] = ika * spectral.Iu
        A[2 * n :, n : 2 * n] = spectral.Dv
        full = np.linalg.solve(A, np.concatenate([fu, fv, np.zeros(M)]))
        np.testing.assert_allclose(du[mode.k, :, 0], full[:n], atol=1e-9)
        np.testing.assert_allclose(dv[mode.k, :, 0], full[n : 2 * n], atol=1e-9)


def test_jacobian_maps_translation_onto_translated_rhs(ops, rng):
    # at an equilibrium the right side vanishes, leaving a zero eigenvalue
    U = perturbed(ops, rng)
    J = jacobian(ops, U)
    np.testing.assert_allclose(
        J @ translation_part(ops, U), translation_part(ops, rhs(ops, U)), atol=1e-9
    )


def test_laminar_mode_is_jacobian_eigenvalue(pressure_ops):
    value, vector = laminar_mode(pressure_ops, 1)
    assert abs(vector).max() == pytest.approx(1.0)
    U = laminar_vector(pressure_ops.disc, pressure_ops.formulation)
    spectrum = np.linalg.eigvals(jacobian(pressure_ops, U))
    assert abs(spectrum - value).min() < 1e-7


def test_laminar_mode_range(pressure_ops):
    with pytest.raises(ParameterError):
        laminar_mode(pressure_ops, 0)
    with pytest.raises(ParameterError):
        laminar_mode(pressure_ops, pressure_ops.disc.N + 1)


def test_laminar_flow_is_stable_at_low_reynolds(disc):
    ops = build_operators(disc, 500.0)
    value, _ = laminar_mode(ops, 1)
    assert value.real < 0.0


def test_recover_pressure_of_laminar_flow(pressure_ops):
    U = laminar_vector(pressure_ops.disc, pressure_ops.formulation)
    p = recover_pressure(pressure_ops, U)
    assert p.shape == (pressure_ops.disc.N, pressure_ops.disc.M)
    np.testing.assert_allclose(p, 0.0, atol=1e-12)


def test_amplitude_of_laminar_flow(disc):
    for formulation in Formulation:
        amplitude = amplitude_of(disc, formulation, laminar_vector(disc, formulation))
        assert amplitude == pytest.approx(0.0, abs=1e-14)


def test_amplitude_of_single_mode(disc):
    u = np.zeros((disc.N + 1, disc.M - 1), dtype=np.complex128)
    v = np.zeros_like(u)
    y = disc.velocity_nodes
    u[1] = 1.0 - y**2
    expected = np.sqrt(disc.length * 2.0 * 16.0 / 15.0) / (2.0 * disc.length)
    assert amplitude_of_fields(disc, u, v) == pytest.approx(expected)


def test_amplitude_is_translation_invariant(pressure_ops, rng):
    disc = pressure_ops.disc
    U = perturbed(pressure_ops, rng)
    a = amplitude_of(disc, Formulation.PRESSURE, U)
    b = amplitude_of(disc, Formulation.PRESSURE, translate(disc, U, 1.3))
    assert a == pytest.approx(b)
    assert a > 0.0


def test_mean_pressure_gradient_of_laminar_flow(disc):
    for formulation in Formulation:
        state = SpectralState.laminar(disc, formulation)
        assert mean_pressure_gradient(state, 250.0) == pytest.approx(2.0 / 250.0)


def test_mean_pressure_gradient_of_laminar_flux_flow(disc):
    state = SpectralState.laminar(disc, Formulation.FLUX)
    assert mean_pressure_gradient(state, 1000.0) == pytest.approx(0.002)


def test_mean_pressure_gradient_is_fixed_at_constant_pressure(disc, rng):
    state = SpectralState.laminar(disc, Formulation.PRESSURE)
    noisy = state.with_data(state.data + 0.1 * rng.standard_normal(state.data.size))
    assert mean_pressure_gradient(noisy, 4000.0) == pytest.approx(5.0e-4)


def test_parity_defect(disc, rng):
    state = SpectralState.laminar(disc, Formulation.PRESSURE)
    assert parity_defect(state) < 1e-14
    noisy = state.with_data(state.data + 0.1 * rng.standard_normal(state.data.size))
    assert parity_defect(noisy) > 1e-3


def test_convert_state_rescales_velocities(disc, rng):
    layout = state_layout(disc, Formulation.PRESSURE)
    data = np.zeros(layout.size)
    data[layout.flux_index] = 2.0
    start = layout.mode_start(1)
    data[start:] = 0.01 * rng.standard_normal(layout.size - start)
    state = SpectralState(disc=disc, formulation=Formulation.PRESSURE, data=data)

    converted, Re, c, ratio = convert_state(
        state, 100.0, 0.3, ConversionDirection.PRESSURE_TO_FLUX
    )
    assert converted.formulation is Formulation.FLUX
    assert Re == pytest.approx(150.0)
    assert ratio == pytest.approx(2.0 / 3.0)
    assert c == pytest.approx(0.2)
    np.testing.assert_allclose(converted.u0, 0.0, atol=1e-12)
    np.testing.assert_allclose(converted.uk(1), ratio * state.uk(1))


def test_convert_state_checks_direction(disc):
    state = SpectralState.laminar(disc, Formulation.FLUX)
    with pytest.raises(FormulationError):
        convert_state(state, 100.0, 0.0, ConversionDirection.PRESSURE_TO_FLUX)


@pytest.mark.parametrize(
    ('formulation', 'direction'),
    [
        (Formulation.PRESSURE, ConversionDirection.PRESSURE_TO_FLUX),
        (Formulation.FLUX, ConversionDirection.FLUX_TO_PRESSURE),
    ],
)
def test_convert_laminar_wave(disc, formulation, direction):
    state = SpectralState.laminar(disc, formulation)
    wave = TravellingWave(Re=300.0, c=0.0, state=state, amplitude=0.0)
    converted = convert_formulation(wave, direction)
    assert converted.formulation is not formulation
    assert converted.Re == pytest.approx(300.0)
    assert converted.residual < 1e-12


def test_convert_rejects_non_equilibrium(disc, rng):
    state = SpectralState.laminar(disc, Formulation.PRESSURE)
    noisy = state.with_data(state.data + 0.1 * rng.standard_normal(state.data.size))
    wave = TravellingWave(Re=300.0, c=0.0, state=noisy, amplitude=0.1)
    with pytest.raises(FormulationError):
        convert_formulation(wave, ConversionDirection.PRESSURE_TO_FLUX)
