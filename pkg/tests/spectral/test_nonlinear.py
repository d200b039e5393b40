from __future__ import annotations

import numpy as np
import pytest

from poiseuille2d.spectral import (
    advection,
    build_discretization,
    convolution_advection,
    linearized_advection,
    spectral_operators,
    to_physical,
    to_spectral,
)


def random_fields(disc, rng, batch=1):
    shape = (disc.N + 1, disc.M - 1, batch)
    u = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    v = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    u[0] = u[0].real
    v[0] = v[0].real
    return u, v


def test_to_physical_single_mode():
    nx = 16
    coeffs = np.zeros(4, dtype=np.complex128)
    coeffs[1] = 0.5
    x = 2.0 * np.pi * np.arange(nx) / nx
    np.testing.assert_allclose(to_physical(coeffs, nx), np.cos(x), atol=1e-14)


def test_to_spectral_single_mode():
    nx = 16
    x = 2.0 * np.pi * np.arange(nx) / nx
    modes = to_spectral(1.0 + np.sin(2.0 * x), 3)
    np.testing.assert_allclose(modes, [1.0, 0.0, -0.5j, 0.0], atol=1e-14)


@pytest.mark.parametrize('dealias', [False, True])
def test_advection_matches_convolution(dealias, rng):
    disc = build_discretization(3, 10, 1.3, dealias=dealias)
    D1 = spectral_operators(disc).D1
    u, v = random_fields(disc, rng)
    Nu, Nv = advection(disc, D1, u, v)
    Cu, Cv = convolution_advection(disc, D1, u, v)
    np.testing.assert_allclose(Nu, Cu, atol=1e-10)
    np.testing.assert_allclose(Nv, Cv, atol=1e-10)


@pytest.mark.parametrize('scale', [0.5, 3.0])
def test_advection_is_quadratic(scale, rng):
    disc = build_discretization(3, 10, 1.3)
    D1 = spectral_operators(disc).D1
    u, v = random_fields(disc, rng)
    Nu, Nv = advection(disc, D1, u, v)
    Su, Sv = advection(disc, D1, scale * u, scale * v)
    np.testing.assert_allclose(Su, scale**2 * Nu, rtol=1e-10, atol=1e-9)
    np.testing.assert_allclose(Sv, scale**2 * Nv, rtol=1e-10, atol=1e-9)


def test_dealias_drops_upper_modes(rng):
    disc = build_discretization(3, 10, 1.0, dealias=True)
    u, v = random_fields(disc, rng)
    Nu, Nv = advection(disc, spectral_operators(disc).D1, u, v)
    assert not Nu[3].any()
    assert not Nv[3].any()
    assert Nu[2].any()


def test_linearized_advection(rng):
    disc = build_discretization(2, 10, 1.0)
    D1 = spectral_operators(disc).D1
    u, v = random_fields(disc, rng)
    du, dv = random_fields(disc, rng, batch=3)
    eps = 1.0
    Pu, Pv = advection(disc, D1, u + eps * du, v + eps * dv)
    Mu, Mv = advection(disc, D1, u - eps * du, v - eps * dv)
    Lu, Lv = linearized_advection(disc, D1, u, v, du, dv)
    np.testing.assert_allclose(Lu, (Pu - Mu) / (2.0 * eps), atol=1e-9)
    np.testing.assert_allclose(Lv, (Pv - Mv) / (2.0 * eps), atol=1e-9)
