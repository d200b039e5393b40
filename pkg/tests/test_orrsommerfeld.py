from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.linalg as sla

from poiseuille2d import ParameterError
from poiseuille2d.orrsommerfeld import (
    OSMatrices,
    assemble_os,
    banded_matvec,
    critical_point,
    extrapolate,
    leading_eigenvalue,
    leading_mode,
    mesh_ladder,
    neutral_curve,
)

ALPHA_CRITICAL = 1.02056
RE_CRITICAL = 5772.22


@pytest.mark.parametrize(
    ('alpha', 'Re', 'n'),
    [(1.0, 100.0, 15), (0.0, 100.0, 20), (1.0, 0.0, 20)],
)
def test_invalid_problem(alpha, Re, n):
    with pytest.raises(ParameterError):
        assemble_os(alpha, Re, n)


def test_banded_storage(rng):
    mats = assemble_os(1.0, 2000.0, 16)
    A, B = mats.dense()
    x = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    np.testing.assert_allclose(banded_matvec(mats.A, *OSMatrices.A_BANDS, x), A @ x)
    np.testing.assert_allclose(banded_matvec(mats.B, *OSMatrices.B_BANDS, x), B @ x)
    sigma = 0.1 - 0.3j
    shifted = sla.solve_banded((2, 2), mats.shifted(sigma), x)
    np.testing.assert_allclose((A - sigma * B) @ shifted, x, atol=1e-10)


def test_mesh():
    mats = assemble_os(1.0, 2000.0, 19)
    assert mats.n == 19
    assert mats.h == pytest.approx(0.1)
    assert mats.y[0] == pytest.approx(-0.9)
    assert mats.y[-1] == pytest.approx(0.9)


def test_inverse_iteration_matches_dense_solver():
    mats = assemble_os(1.0, 10000.0, 150)
    A, B = mats.dense()
    values = sla.eigvals(A, B)
    values = values[np.isfinite(values)]
    expected = values[np.argmax(values.real)]
    mode = leading_mode(1.0, 10000.0, 150)
    assert abs(mode.eigenvalue - expected) < 1e-10
    assert mode.residual < 1e-10
    assert abs(mode.eigenfunction).max() == pytest.approx(1.0)


def test_mesh_ladder():
    ladder = mesh_ladder(100, 3)
    assert ladder == [100, 201, 403]
    spacings = [2.0 / (n + 1) for n in ladder]
    assert spacings[0] / spacings[1] == pytest.approx(2.0)
    assert spacings[1] / spacings[2] == pytest.approx(2.0)


def test_extrapolation_removes_even_error_terms():
    h = [0.4, 0.2, 0.1]
    values = [1.0 + 2.0 * s**2 + 3.0 * s**4 for s in h]
    result = extrapolate(h, values)
    assert result.value == pytest.approx(1.0, abs=1e-12)
    assert result.consistent
    assert result.order > 2.0


def test_extrapolation_with_two_levels():
    h = [0.2, 0.1]
    result = extrapolate(h, [1.0 + 5.0 * s**2 for s in h])
    assert result.value == pytest.approx(1.0, abs=1e-12)
    assert math.isnan(result.order)


def test_extrapolation_with_one_level():
    result = extrapolate([0.1], [2.0])
    assert result.value == 2.0
    assert math.isnan(result.error)


def test_non_monotone_ladder_is_flagged():
    result = extrapolate([0.4, 0.2, 0.1], [1.0, 1.01, 1.5])
    assert not result.consistent


@pytest.mark.parametrize(
    ('spacings', 'values'),
    [([0.1, 0.2], [1.0, 1.0]), ([0.2, 0.1], [1.0]), ([], [])],
)
def test_invalid_extrapolation(spacings, values):
    with pytest.raises(ParameterError):
        extrapolate(spacings, values)


def test_phase_speed_at_reference_point():
    result, modes = leading_eigenvalue(1.0, 10000.0, 200)
    assert [m.n for m in modes] == [200, 401, 803]
    c = 1j * result.value
    assert c.real == pytest.approx(0.23752649, abs=1e-5)
    assert c.imag == pytest.approx(0.00373967, abs=1e-5)
    assert result.consistent


@pytest.mark.parametrize(('Re', 'unstable'), [(4000.0, False), (7000.0, True)])
def test_growth_rate_sign(Re, unstable):
    result, _ = leading_eigenvalue(ALPHA_CRITICAL, Re, 200)
    assert (result.value.real > 0.0) is unstable


def test_growth_rate_vanishes_at_critical_point():
    result, _ = leading_eigenvalue(ALPHA_CRITICAL, RE_CRITICAL, 300)
    assert abs(result.value.real) < 5e-4


def test_stable_wavenumber_has_no_neutral_point():
    points = neutral_curve([1.3], (1000.0, 3000.0), 60, samples=3, levels=1)
    assert len(points) == 1
    assert points[0].Re is None
    assert points[0].alpha == 1.3


@pytest.mark.slow
def test_lower_neutral_branch():
    points = neutral_curve([ALPHA_CRITICAL], (4000.0, 8000.0), 300, samples=4, xtol=1e-3)
    lower = [p for p in points if not p.upper]
    assert len(lower) == 1
    assert lower[0].Re == pytest.approx(RE_CRITICAL, abs=0.5)


@pytest.mark.slow
def test_critical_point():
    point = critical_point()
    assert point.Re == pytest.approx(RE_CRITICAL, abs=0.5)
    assert point.alpha == pytest.approx(ALPHA_CRITICAL, abs=5e-3)
    assert 0.2 < point.c < 0.3
