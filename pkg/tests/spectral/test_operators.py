from __future__ import annotations

import numpy as np
import pytest

from poiseuille2d import Formulation, ParameterError
from poiseuille2d.spectral import (
    LAMINAR_FLUX,
    build_operators,
    reconstruct_lu,
    spectral_operators,
)


@pytest.fixture(scope='module')
def spectral(disc):
    return spectral_operators(disc)


@pytest.fixture(scope='module')
def y(disc):
    return disc.velocity_nodes


def test_interior_derivatives(spectral, y):
    np.testing.assert_allclose(spectral.D1 @ (1.0 - y**2), -2.0 * y, atol=1e-10)
    np.testing.assert_allclose(spectral.D2 @ ((1.0 - y**2) * y), -6.0 * y, atol=1e-9)


def test_pressure_interpolation(disc, spectral, y):
    g = disc.pressure_nodes
    np.testing.assert_allclose(spectral.E @ g**3, y**3, atol=1e-12)
    np.testing.assert_allclose(spectral.dE @ g**3, 3.0 * y**2, atol=1e-10)


def test_velocity_to_gauss_nodes(disc, spectral, y):
    g = disc.pressure_nodes
    f = (1.0 - y**2) * y
    np.testing.assert_allclose(spectral.Iu @ f, (1.0 - g**2) * g, atol=1e-12)
    np.testing.assert_allclose(spectral.Dv @ f, 1.0 - 3.0 * g**2, atol=1e-10)


def test_laminar_integrals(spectral):
    laminar = spectral.laminar
    assert spectral.flux(laminar) == pytest.approx(LAMINAR_FLUX)
    assert spectral.wall_jump(laminar) == pytest.approx(-4.0)
    assert laminar @ spectral.mass @ laminar == pytest.approx(16.0 / 15.0)


def test_mode_velocities_are_divergence_free(disc, spectral, rng):
    for mode in spectral.modes:
        ub = rng.standard_normal(disc.M - 2) + 1j * rng.standard_normal(disc.M - 2)
        ika = 1j * mode.k * disc.alpha
        divergence = ika * spectral.Iu @ (mode.Ju @ ub) + spectral.Dv @ (mode.Jv @ ub)
        np.testing.assert_allclose(divergence, 0.0, atol=1e-10)


def test_mode_shapes(disc, spectral):
    mode = spectral.mode(2)
    assert mode.k == 2
    assert mode.T.shape == (disc.M, disc.M - 2)
    assert mode.Ju.shape == (disc.M - 1, disc.M - 2)
    assert mode.Jv.shape == (disc.M - 1, disc.M - 2)
    assert mode.diffusion.shape == (disc.M - 2, disc.M - 2)


def test_reconstruct_lu(spectral):
    mode = spectral.mode(1)
    np.testing.assert_allclose(reconstruct_lu(mode.Q_lu), mode.Q, atol=1e-12)
    np.testing.assert_allclose(reconstruct_lu(mode.R_lu), mode.R, atol=1e-12)


def test_stokes_modes_decay(spectral):
    for mode in spectral.modes:
        assert np.linalg.eigvals(mode.diffusion).real.max() < 0.0


@pytest.mark.parametrize('formulation', list(Formulation))
def test_zero_mode_coordinates(disc, spectral, formulation, rng):
    zero = spectral.zero_mode(formulation)
    x = rng.standard_normal(zero.size)
    np.testing.assert_allclose(zero.coordinates(zero.nodal(x)), x, atol=1e-12)
    assert zero is spectral.zero_mode(formulation)


def test_zero_mode_sizes(disc, spectral):
    assert spectral.zero_mode(Formulation.PRESSURE).size == disc.M - 1
    assert spectral.zero_mode(Formulation.FLUX).size == disc.M - 2


def test_flux_formulation_offset_is_laminar(spectral):
    zero = spectral.zero_mode(Formulation.FLUX)
    np.testing.assert_allclose(zero.nodal(np.zeros(zero.size)), spectral.laminar, atol=1e-12)


def test_operators_share_spectral_matrices(disc):
    a = build_operators(disc, 100.0)
    b = build_operators(disc, 250.0, c=0.3)
    assert a.spectral is b.spectral


def test_blocks_scale_with_reynolds(disc, pressure_ops):
    other = pressure_ops.with_parameters(Re=200.0, c=0.0)
    assert other.Re == 200.0
    mode = other.spectral.mode(1)
    np.testing.assert_allclose(other.blocks[1], mode.diffusion / 200.0)
    shift = pressure_ops.blocks[1] - mode.diffusion / pressure_ops.Re
    np.testing.assert_allclose(np.diag(shift), 1j * disc.alpha * pressure_ops.c)


def test_crank_nicolson_factors(disc, pressure_ops):
    factors = pressure_ops.cn_factors
    assert len(factors) == disc.N + 1
    A = np.eye(disc.M - 2) - 0.5 * pressure_ops.dt * pressure_ops.blocks[2]
    np.testing.assert_allclose(reconstruct_lu(factors[2]), A, atol=1e-12)


def test_crank_nicolson_needs_time_step(disc):
    with pytest.raises(ParameterError):
        build_operators(disc, 100.0).cn_factors  # noqa: B018


@pytest.mark.parametrize(
    'kwargs',
    [{'Re': 0.0}, {'Re': -5.0}, {'Re': float('inf')}, {'Re': 10.0, 'c': float('nan')}],
)
def test_invalid_parameters(disc, kwargs):
    with pytest.raises(ParameterError):
        build_operators(disc, **kwargs)


def test_invalid_time_step(disc):
    with pytest.raises(ParameterError):
        build_operators(disc, 100.0, dt=0.0)
