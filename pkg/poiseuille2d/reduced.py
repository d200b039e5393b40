"""
Reduced Navier-Stokes system ``dU/dt = L U + Nl(U)`` on the packed state vector.

The pressure is eliminated mode by mode, so the state only holds velocity unknowns.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg as sla

from .exceptions import FormulationError, ParameterError
from .models import ConversionDirection, Formulation, TravellingWave
from .spectral import (
    advection,
    build_operators,
    linearized_advection,
    spectral_operators,
)
from .state import SpectralState, state_layout

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from .spectral import Discretization, OperatorSet, SpectralOperators, ZeroModeBlock

logger = logging.getLogger(__package__)

#: Number of Jacobian columns evaluated together.
JACOBIAN_CHUNK = 96


def _as_columns(U: NDArray[np.float64]) -> tuple[NDArray[np.float64], bool]:
    U = np.asarray(U, dtype=np.float64)
    if U.ndim == 1:
        return U[:, np.newaxis], True
    return U, False


def expand(
    spectral: SpectralOperators,
    zero: ZeroModeBlock,
    U: NDArray[np.float64],
    *,
    affine: bool = True,
) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """
    Get interior velocity values of every Fourier mode.

    Args:
        spectral: Re-independent operators.
        zero: zero-mode block of the formulation of ``U``.
        U: state vectors, shaped ``(K, B)``.
        affine: include the constant offset of the zero mode (disable for perturbations).

    Returns:
        Streamwise and wall-normal velocities, shaped ``(N+1, M-1, B)``.

    """
    disc = spectral.disc
    layout = state_layout(disc, zero.formulation)
    x0, ub = layout.split(U)
    u = np.empty((disc.N + 1, disc.M - 1, U.shape[1]), dtype=np.complex128)
    v = np.empty_like(u)
    u[0] = zero.nodal(x0) if affine else zero.basis @ x0
    v[0] = 0.0
    for mode in spectral.modes:
        u[mode.k] = mode.Ju @ ub[mode.k - 1]
        v[mode.k] = mode.Jv @ ub[mode.k - 1]
    return u, v


def project(
    spectral: SpectralOperators,
    zero: ZeroModeBlock,
    fu: NDArray[np.complex128],
    fv: NDArray[np.complex128],
) -> NDArray[np.float64]:
    """
    Project interior momentum tendencies of every mode on the reduced unknowns.

    Args:
        spectral: Re-independent operators.
        zero: zero-mode block of the target formulation.
        fu: streamwise tendencies, shaped ``(N+1, M-1, B)``.
        fv: wall-normal tendencies, with the same shape.

    Returns:
        Reduced tendencies, shaped ``(K, B)``.

    """
    layout = state_layout(spectral.disc, zero.formulation)
    x0 = zero.projection @ fu[0].real
    ub = np.stack([mode.eliminate(fu[mode.k], fv[mode.k]) for mode in spectral.modes])
    return layout.join(x0, ub)


def _apply_blocks(ops: OperatorSet, U: NDArray[np.float64]) -> NDArray[np.float64]:
    layout = state_layout(ops.disc, ops.formulation)
    x0, ub = layout.split(U)
    L0, *Lk = ops.blocks
    out = np.stack([L @ ub[i] for i, L in enumerate(Lk)])
    return layout.join(L0 @ x0, out)


def linear_part(ops: OperatorSet, U: NDArray[np.float64]) -> NDArray[np.float64]:
    """
    Apply the linear operator ``L`` (viscous terms and advection by the frame speed).

    ``L`` maps the zero state to zero; constant forcing belongs to :func:`nonlinear_part`.
    """
    cols, single = _as_columns(U)
    out = _apply_blocks(ops, cols)
    return out[:, 0] if single else out


def advection_term(
    ops: OperatorSet,
    U: NDArray[np.float64],
) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """Get the advection term of every mode on interior nodes, for state vectors ``(K, B)``."""
    spectral = ops.spectral
    u, v = expand(spectral, ops.zero, U)
    return advection(ops.disc, spectral.D1, u, v)


def nonlinear_term(
    ops: OperatorSet,
    U: NDArray[np.float64],
) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """
    Evaluate the advection term seen from the frame moving at ``ops.c``.

    Args:
        ops: operators carrying the frame speed.
        U: a single state vector.

    Returns:
        Interior values of ``((u - c) d/dx + v d/dy)`` applied to ``(u, v)``, mode by mode,
        shaped ``(N+1, M-1)``.

    """
    cols, _ = _as_columns(U)
    u, v = expand(ops.spectral, ops.zero, cols)
    Nu, Nv = advection(ops.disc, ops.spectral.D1, u, v)
    ika = 1j * ops.disc.alpha * np.arange(ops.disc.N + 1)[:, np.newaxis, np.newaxis]
    Nu -= ops.c * ika * u
    Nv -= ops.c * ika * v
    return Nu[..., 0], Nv[..., 0]


def nonlinear_part(ops: OperatorSet, U: NDArray[np.float64]) -> NDArray[np.float64]:
    """Evaluate ``Nl(U)``: constant forcing minus the projected advection term."""
    cols, single = _as_columns(U)
    Nu, Nv = advection_term(ops, cols)
    out = -project(ops.spectral, ops.zero, Nu, Nv)
    out[: ops.zero.size] += ops.forcing[:, np.newaxis]
    return out[:, 0] if single else out


def rhs(ops: OperatorSet, U: NDArray[np.float64]) -> NDArray[np.float64]:
    """
    Evaluate the right-hand side ``L U + Nl(U)`` of the reduced system.

    Args:
        ops: operators for the current ``Re`` and frame speed.
        U: a state vector ``(K,)`` or a batch of them ``(K, B)``.

    Returns:
        Time derivatives, shaped like ``U``.

    """
    cols, single = _as_columns(U)
    out = _apply_blocks(ops, cols) + nonlinear_part(ops, cols)
    return out[:, 0] if single else out


def viscous_part(ops: OperatorSet, U: NDArray[np.float64]) -> NDArray[np.float64]:
    """Get the part of :func:`rhs` scaled by ``1/Re``, so ``d rhs / dRe = -viscous / Re``."""
    return linear_part(ops.with_parameters(c=0.0), U) + _forcing_of(ops, U)


def translation_part(ops: OperatorSet, U: NDArray[np.float64]) -> NDArray[np.float64]:
    """Get ``d rhs / dc``: mode ``k`` is multiplied by ``i k alpha``."""
    layout = state_layout(ops.disc, ops.formulation)
    x0, ub = layout.split(np.asarray(U, dtype=np.float64))
    ika = 1j * ops.disc.alpha * np.arange(1, ops.disc.N + 1)
    ika = ika.reshape(ika.shape + (1,) * (ub.ndim - 1))
    return layout.join(np.zeros_like(x0), ika * ub)


def _forcing_of(ops: OperatorSet, U: NDArray[np.float64]) -> NDArray[np.float64]:
    out = np.zeros_like(np.asarray(U, dtype=np.float64))
    out[: ops.zero.size] = ops.forcing if out.ndim == 1 else ops.forcing[:, np.newaxis]
    return out


def _dense_linear(ops: OperatorSet) -> NDArray[np.float64]:
    layout = state_layout(ops.disc, ops.formulation)
    L0, *Lk = ops.blocks
    blocks = [np.asarray(L0, dtype=np.float64)]
    for L in Lk:
        blocks.append(np.block([[L.real, -L.imag], [L.imag, L.real]]))
    J = sla.block_diag(*blocks)
    if J.shape != (layout.size, layout.size):  # pragma: no cover
        msg = 'Inconsistent block sizes in the linear operator.'
        raise ParameterError(msg)
    return J


def jacobian(
    ops: OperatorSet,
    U: NDArray[np.float64],
    *,
    chunk: int = JACOBIAN_CHUNK,
) -> NDArray[np.float64]:
    """
    Build the dense Jacobian of :func:`rhs` with respect to ``U``.

    The linearized advection is applied to batches of unit vectors.

    Args:
        ops: operators for the current ``Re`` and frame speed.
        U: linearization state.
        chunk: number of columns evaluated at once.

    Returns:
        A ``K x K`` real matrix.

    """
    spectral, zero = ops.spectral, ops.zero
    J = _dense_linear(ops)
    K = J.shape[0]
    u, v = expand(spectral, zero, np.asarray(U, dtype=np.float64)[:, np.newaxis])
    for start in range(0, K, chunk):
        stop = min(start + chunk, K)
        unit = np.zeros((K, stop - start))
        unit[np.arange(start, stop), np.arange(stop - start)] = 1.0
        du, dv = expand(spectral, zero, unit, affine=False)
        dNu, dNv = linearized_advection(ops.disc, spectral.D1, u, v, du, dv)
        J[:, start:stop] -= project(spectral, zero, dNu, dNv)
    return J


def laminar_mode(ops: OperatorSet, k: int = 1) -> tuple[complex, NDArray[np.complex128]]:
    """
    Get the leading eigen-pair of mode ``k`` linearized about the laminar flow.

    Args:
        ops: operators for the current ``Re`` and frame speed.
        k: Fourier mode, from 1 to N.

    Returns:
        The eigenvalue with the largest real part and its eigenvector ``ub_k``, normalized
        to a unit max-norm.

    """
    if not 1 <= k <= ops.disc.N:
        msg = f'Mode {k} is out of range 1..{ops.disc.N}.'
        raise ParameterError(msg)
    spectral = ops.spectral
    mode = spectral.mode(k)
    ub = spectral.laminar[:, np.newaxis]
    dub = -2.0 * ops.disc.velocity_nodes[:, np.newaxis]
    ika = 1j * k * ops.disc.alpha
    fu = ika * ub * mode.Ju + dub * mode.Jv
    fv = ika * ub * mode.Jv
    C = ops.blocks[k] - mode.eliminate(fu, fv)
    values, vectors = sla.eig(C)
    i = int(np.argmax(values.real))
    vec = vectors[:, i]
    vec = vec / vec[np.argmax(np.abs(vec))]
    return complex(values[i]), vec


def recover_pressure(ops: OperatorSet, U: NDArray[np.float64]) -> NDArray[np.complex128]:
    """
    Recover the pressure of modes ``k >= 1`` on the Gauss nodes.

    ``p_k = Q_k^-1 (Vb_k - T_k dub_k/dt)``, where ``Vb_k`` gathers the momentum tendencies
    of the last ``M`` equations.

    Returns:
        Pressure values shaped ``(N, M)``.

    """
    spectral = ops.spectral
    layout = state_layout(ops.disc, ops.formulation)
    Nu, Nv = nonlinear_term(ops, U)
    u, v = expand(spectral, ops.zero, np.asarray(U, dtype=np.float64)[:, np.newaxis])
    _, dub = layout.split(rhs(ops, U))
    M2 = ops.disc.M - 2
    out = np.empty((ops.disc.N, ops.disc.M), dtype=np.complex128)
    for mode in spectral.modes:
        H = spectral.D2 - (mode.k * ops.disc.alpha) ** 2 * np.eye(ops.disc.M - 1)
        fu = -Nu[mode.k] + H @ u[mode.k, :, 0] / ops.Re
        fv = -Nv[mode.k] + H @ v[mode.k, :, 0] / ops.Re
        vbar = np.concatenate([fu[M2 : M2 + 1], fv])
        out[mode.k - 1] = sla.lu_solve(mode.Q_lu, vbar - mode.T @ dub[mode.k - 1])
    return out


def amplitude_of(
    disc: Discretization,
    formulation: Formulation,
    U: NDArray[np.float64],
) -> float:
    """
    Compute the amplitude ``A = ||u - u_laminar|| / (2 L)`` of a state.

    The norm is the ``L2`` norm over one period ``[0, L] x [-1, 1]``, integrated exactly in
    the wall-normal direction.
    """
    spectral = spectral_operators(disc)
    zero = spectral.zero_mode(formulation)
    u, v = expand(spectral, zero, np.asarray(U, dtype=np.float64)[:, np.newaxis])
    u[0] -= spectral.laminar[:, np.newaxis]
    return amplitude_of_fields(disc, u[..., 0], v[..., 0])


def amplitude_of_fields(
    disc: Discretization,
    u: NDArray[np.complex128],
    v: NDArray[np.complex128],
    weights: NDArray[np.float64] | None = None,
) -> float:
    """
    Compute ``||(u, v)|| / (2 L)`` for interior values of modes ``0..N`` (zero at the walls).

    Args:
        disc: discretization of the fields.
        u: streamwise modes, shaped ``(N+1, M-1)``.
        v: wall-normal modes, shaped ``(N+1, M-1)``.
        weights: multiplicity of each mode in the streamwise sum (``1, 2, 2, ..`` by default).

    Returns:
        The normalized ``L2`` norm.

    """
    W = spectral_operators(disc).mass
    if weights is None:
        weights = np.full(u.shape[0], 2.0)
        weights[0] = 1.0
    energy = np.einsum('ki,ij,kj->k', u.conj(), W, u).real
    energy += np.einsum('ki,ij,kj->k', v.conj(), W, v).real
    total = disc.length * float(weights @ energy)
    return float(np.sqrt(max(total, 0.0)) / (2.0 * disc.length))


def zero_mode_profile(state: SpectralState) -> NDArray[np.float64]:
    """Get interior values of the streamwise-averaged velocity ``u_0``."""
    zero = spectral_operators(state.disc).zero_mode(state.formulation)
    return zero.nodal(state.u0)


def mean_pressure_gradient(state: SpectralState, Re: float) -> float:
    """
    Get the mean driving pressure gradient ``G = -dp/dx``.

    It is ``2/Re`` in the constant-pressure formulation and ``-[du_0/dy]/(2 Re)`` (taken
    between the lower and upper walls) in the constant-flux formulation, so laminar flow
    gives ``2/Re`` in both.
    """
    if state.formulation is Formulation.PRESSURE:
        return 2.0 / Re
    jump = spectral_operators(state.disc).wall_jump(zero_mode_profile(state))
    return -float(jump) / (2.0 * Re)


def parity_defect(state: SpectralState) -> float:
    """
    Measure the departure from the shift-reflect symmetry ``u_k(-y) = (-1)^k u_k(y)``.

    Returns:
        Max-norm of the antisymmetric part relative to the max-norm of the velocity.

    """
    spectral = spectral_operators(state.disc)
    zero = spectral.zero_mode(state.formulation)
    u, _ = expand(spectral, zero, state.data[:, np.newaxis])
    u = u[..., 0]
    sign = (-1.0) ** np.arange(state.disc.N + 1)[:, np.newaxis]
    defect = np.abs(u - sign * u[:, ::-1]).max()
    scale = max(float(np.abs(u).max()), np.finfo(np.float64).tiny)
    return float(defect / scale)


def residual_norm(ops: OperatorSet, U: NDArray[np.float64]) -> float:
    """Get the max-norm of :func:`rhs`."""
    return float(np.abs(rhs(ops, U)).max())


def convert_state(
    state: SpectralState,
    Re: float,
    c: float,
    direction: ConversionDirection,
) -> tuple[SpectralState, float, float, float]:
    """
    Rescale a state to the other formulation.

    Args:
        state: state in the source formulation.
        Re: Reynolds number of the source formulation.
        c: phase speed in the source units.
        direction: conversion direction, matching the formulation of ``state``.

    Raises:
        FormulationError: when ``direction`` does not match the formulation of ``state``.

    Returns:
        The converted state, Reynolds number, phase speed and the velocity ratio ``r``
        (target velocities are ``r`` times the source ones).

    """
    expected = {
        ConversionDirection.PRESSURE_TO_FLUX: Formulation.PRESSURE,
        ConversionDirection.FLUX_TO_PRESSURE: Formulation.FLUX,
    }[direction]
    if state.formulation is not expected:
        msg = f'Cannot convert a {state.formulation.value} state with {direction.value}.'
        raise FormulationError(msg)

    spectral = spectral_operators(state.disc)
    u0 = zero_mode_profile(state)
    if direction is ConversionDirection.PRESSURE_TO_FLUX:
        flux = float(spectral.flux(u0))
        if flux <= 0.0:
            msg = f'Flux must be positive to define a flux Reynolds number (got {flux}).'
            raise FormulationError(msg)
        target = Formulation.FLUX
        Re_new = 0.75 * flux * Re
    else:
        jump = float(spectral.wall_jump(u0))
        if jump >= 0.0:
            msg = f'Pressure gradient must drive the flow downstream (wall jump {jump}).'
            raise FormulationError(msg)
        target = Formulation.PRESSURE
        Re_new = -0.25 * jump * Re

    ratio = Re / Re_new
    layout = state_layout(state.disc, state.formulation)
    _, ub = layout.split(state.data)
    zero = spectral.zero_mode(target)
    x0 = zero.coordinates(ratio * u0)
    data = state_layout(state.disc, target).join(x0, ratio * ub)
    converted = SpectralState(disc=state.disc, formulation=target, data=data)
    return converted, Re_new, ratio * c, ratio


def convert_formulation(
    wave: TravellingWave,
    direction: ConversionDirection,
    *,
    tol: float = 1.0e-8,
) -> TravellingWave:
    """
    Convert a travelling wave between constant-pressure and constant-flux formulations.

    Args:
        wave: a converged travelling wave.
        direction: conversion direction, matching the formulation of the wave.
        tol: largest residual accepted for the input wave.

    Raises:
        FormulationError: when the wave is not an equilibrium or the direction mismatches.

    Returns:
        The same physical flow in the other formulation.

    """
    ops = build_operators(wave.disc, wave.Re, wave.c, formulation=wave.formulation)
    residual = residual_norm(ops, wave.state.data)
    if residual > tol:
        msg = f'Input is not an equilibrium (residual {residual:.3e} > {tol:.1e}).'
        raise FormulationError(msg)

    state, Re, c, _ = convert_state(wave.state, wave.Re, wave.c, direction)
    new_ops = build_operators(wave.disc, Re, c, formulation=state.formulation)
    logger.debug('Converted Re=%.6f to Re=%.6f (%s)', wave.Re, Re, direction.value)
    return TravellingWave(
        Re=Re,
        c=c,
        state=state,
        amplitude=amplitude_of(wave.disc, state.formulation, state.data),
        residual=residual_norm(new_ops, state.data),
    )
