from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
from scipy import fft

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from .discretization import Discretization


def to_physical(coeffs: NDArray[np.complex128], nx: int) -> NDArray[np.float64]:
    """
    Evaluate real fields from their non-negative Fourier modes on ``nx`` uniform points.

    Args:
        coeffs: modes ``0..N`` along the first axis.
        nx: number of physical points, larger than ``2N``.

    Returns:
        ``f(x_j) = sum_{|k| <= N} f_k exp(i k alpha x_j)`` along the first axis.

    """
    return fft.irfft(coeffs, n=nx, axis=0) * nx


def to_spectral(values: NDArray[np.float64], N: int) -> NDArray[np.complex128]:
    """Get Fourier modes ``0..N`` of real fields sampled on a uniform grid (first axis)."""
    nx = values.shape[0]
    return fft.rfft(values, axis=0)[: N + 1] / nx


def advection(
    disc: Discretization,
    D1: NDArray[np.float64],
    u: NDArray[np.complex128],
    v: NDArray[np.complex128],
) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """
    Compute the advection term ``(u . grad) u`` mode by mode.

    Products are evaluated on a padded grid of :attr:`Discretization.nx` points, which gives
    the truncated Galerkin convolution exactly.

    Args:
        disc: discretization of the fields.
        D1: interior wall-normal derivative.
        u: streamwise velocity on interior nodes, shaped ``(N+1, M-1, B)`` for B fields.
        v: wall-normal velocity, with the same shape.

    Returns:
        Streamwise and wall-normal components of the advection term, shaped like ``u``.

    """
    U, V, Ux, Uy, Vx, Vy = _physical_fields(disc, D1, u, v)
    return _truncate(disc, U * Ux + V * Uy, U * Vx + V * Vy)


def linearized_advection(
    disc: Discretization,
    D1: NDArray[np.float64],
    u: NDArray[np.complex128],
    v: NDArray[np.complex128],
    du: NDArray[np.complex128],
    dv: NDArray[np.complex128],
) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """
    Compute the advection term linearized about ``(u, v)`` for perturbations ``(du, dv)``.

    Args:
        disc: discretization of the fields.
        D1: interior wall-normal derivative.
        u: base streamwise velocity, shaped ``(N+1, M-1, 1)``.
        v: base wall-normal velocity.
        du: streamwise perturbations, shaped ``(N+1, M-1, B)``.
        dv: wall-normal perturbations.

    Returns:
        Both components of ``(u . grad) du + (du . grad) u``, shaped like ``du``.

    """
    U, V, Ux, Uy, Vx, Vy = _physical_fields(disc, D1, u, v)
    dU, dV, dUx, dUy, dVx, dVy = _physical_fields(disc, D1, du, dv)
    return _truncate(
        disc,
        U * dUx + dU * Ux + V * dUy + dV * Uy,
        U * dVx + dU * Vx + V * dVy + dV * Vy,
    )


def _physical_fields(
    disc: Discretization,
    D1: NDArray[np.float64],
    u: NDArray[np.complex128],
    v: NDArray[np.complex128],
) -> NDArray[np.float64]:
    """Get velocities and their derivatives on the padded physical grid."""
    N = disc.N
    ika = (1j * disc.alpha * np.arange(N + 1)).reshape((N + 1,) + (1,) * (u.ndim - 1))
    fields = np.stack([u, v, ika * u, D1 @ u, ika * v, D1 @ v])
    # Move the Fourier axis first for the transforms.
    return to_physical(np.moveaxis(fields, 1, 0), disc.nx).swapaxes(0, 1)


def _truncate(
    disc: Discretization,
    fu: NDArray[np.float64],
    fv: NDArray[np.float64],
) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    Nu = to_spectral(fu, disc.N)
    Nv = to_spectral(fv, disc.N)
    cutoff = disc.dealias_cutoff
    if cutoff < disc.N:
        Nu[cutoff + 1 :] = 0.0
        Nv[cutoff + 1 :] = 0.0
    return Nu, Nv


def convolution_advection(
    disc: Discretization,
    D1: NDArray[np.float64],
    u: NDArray[np.complex128],
    v: NDArray[np.complex128],
) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """
    Compute the advection term through the explicit convolution sums.

    This is slow and only meant to cross-check :func:`advection`.
    """
    N = disc.N
    alpha = disc.alpha

    def mode(a: NDArray[np.complex128], k: int) -> NDArray[np.complex128]:
        return a[k] if k >= 0 else np.conj(a[-k])

    Nu = np.zeros_like(u)
    Nv = np.zeros_like(v)
    for k in range(N + 1):
        for p in range(-N, N + 1):
            q = k - p
            if abs(q) > N:
                continue
            up, vp = mode(u, p), mode(v, p)
            uq, vq = mode(u, q), mode(v, q)
            Nu[k] += up * (1j * q * alpha * uq) + vp * (D1 @ uq)
            Nv[k] += up * (1j * q * alpha * vq) + vp * (D1 @ vq)
    cutoff = disc.dealias_cutoff
    if cutoff < N:
        Nu[cutoff + 1 :] = 0.0
        Nv[cutoff + 1 :] = 0.0
    return Nu, Nv
