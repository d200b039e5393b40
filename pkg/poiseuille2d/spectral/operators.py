from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import TYPE_CHECKING, Union

import numpy as np
import scipy.linalg as sla

from ..exceptions import ParameterError, SingularOperatorError
from ..models import Formulation
from .chebyshev import (
    derivative_matrix,
    gauss_inverse,
    gauss_transform,
    gram_matrix,
    lobatto_inverse,
    lobatto_transform,
    quadrature_weights,
)

if TYPE_CHECKING:
    from numpy.typing import NDArray
    from typing_extensions import Self, TypeAlias

    from .discretization import Discretization

#: Result of :func:`scipy.linalg.lu_factor`.
LUFactor: TypeAlias = 'tuple[NDArray[np.generic], NDArray[np.int32]]'
Block: TypeAlias = Union['NDArray[np.float64]', 'NDArray[np.complex128]']

logger = logging.getLogger(__package__)

#: Flux of the laminar profile ``1 - y^2`` across the channel.
LAMINAR_FLUX = 4.0 / 3.0

#: Conditioning threshold above which a block is declared singular.
_SINGULAR_RCOND = 1.0e-14


def reconstruct_lu(factor: LUFactor) -> NDArray[np.generic]:
    """
    Rebuild the matrix from a factorization returned by :func:`scipy.linalg.lu_factor`.

    Args:
        factor: packed ``(lu, piv)`` pair.

    Returns:
        The factorized matrix ``P L U``.

    """
    lu, piv = factor
    n = lu.shape[0]
    L = np.tril(lu, -1) + np.eye(n, dtype=lu.dtype)
    A = L @ np.triu(lu)
    for i in reversed(range(n)):
        j = int(piv[i])
        if j != i:
            A[[i, j]] = A[[j, i]]
    return A


def _factorize(matrix: NDArray[np.generic], what: str, mode: int) -> LUFactor:
    """Factorize a block, raising :exc:`SingularOperatorError` when it is singular."""
    rcond = 1.0 / np.linalg.cond(matrix, 1) if np.all(np.isfinite(matrix)) else 0.0
    if not rcond > _SINGULAR_RCOND:
        msg = f'Block {what} of mode {mode} is singular (rcond={rcond:.3e}).'
        raise SingularOperatorError(msg, mode)
    return sla.lu_factor(matrix, check_finite=False)


@dataclass(frozen=True, eq=False)
class ModeBlock:
    """
    Pressure elimination for a single Fourier mode ``k >= 1``.

    The reduced unknown of the mode is ``ub = (u_1 .. u_{M-2})``; the remaining
    velocity values ``vb = (u_{M-1}, v_1 .. v_{M-1})`` follow from continuity.
    """

    #: Fourier mode index.
    k: int

    #: Continuity map ``vb = T ub`` (``M x (M-2)``).
    T: NDArray[np.complex128]

    #: Pressure matrix of the last ``M`` equations (``M x M``).
    Q: NDArray[np.complex128]

    #: Factorization of :attr:`Q`.
    Q_lu: LUFactor

    #: Pressure elimination ``Qb Q^-1`` (``(M-2) x M``).
    P: NDArray[np.complex128]

    #: Matrix ``I - P T``.
    R: NDArray[np.complex128]

    #: Factorization of :attr:`R`.
    R_lu: LUFactor

    #: Interior streamwise velocity from ``ub`` (``(M-1) x (M-2)``).
    Ju: NDArray[np.complex128]

    #: Interior wall-normal velocity from ``ub`` (``(M-1) x (M-2)``).
    Jv: NDArray[np.complex128]

    #: Viscous operator acting on ``ub``, without the ``1/Re`` factor.
    diffusion: NDArray[np.complex128]

    def eliminate(
        self,
        fu: NDArray[np.complex128],
        fv: NDArray[np.complex128],
    ) -> NDArray[np.complex128]:
        """
        Project interior momentum forcing on the reduced unknowns of this mode.

        Args:
            fu: streamwise forcing on the interior nodes (``M-1`` rows, any columns).
            fv: wall-normal forcing on the interior nodes.

        Returns:
            ``(I - P T)^-1 (fu_b - P [fu_{M-1}; fv])``.

        """
        M2 = self.T.shape[1]
        vbar = np.concatenate([fu[M2 : M2 + 1], fv], axis=0)
        return sla.lu_solve(self.R_lu, fu[:M2] - self.P @ vbar, check_finite=False)


@dataclass(frozen=True, eq=False)
class ZeroModeBlock:
    """
    Reduced coordinates of the streamwise-averaged velocity ``u_0``.

    ``u_0 = basis @ x + offset`` where ``x`` holds the coordinates in an orthonormal basis
    of the zero-flux subspace, followed by the flux itself in the constant-pressure case.
    """

    #: Formulation handled by this block.
    formulation: Formulation

    #: Interior nodal values from reduced coordinates.
    basis: NDArray[np.float64]

    #: Nodal offset (the laminar flux carried by the constant-flux formulation).
    offset: NDArray[np.float64]

    #: Projection of nodal tendencies on reduced coordinates.
    projection: NDArray[np.float64]

    #: Viscous operator on reduced coordinates, without the ``1/Re`` factor.
    diffusion: NDArray[np.float64]

    #: Constant viscous forcing, without the ``1/Re`` factor.
    forcing: NDArray[np.float64]

    #: Profile of unit flux proportional to the laminar flow.
    unit_flux: NDArray[np.float64]

    #: Quadrature weights giving the flux of interior values.
    weights: NDArray[np.float64]

    def nodal(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        """Get interior values of ``u_0`` from reduced coordinates (first axis)."""
        offset = self.offset.reshape(self.offset.shape + (1,) * (x.ndim - 1))
        return self.basis @ x + offset

    def coordinates(self, u0: NDArray[np.float64]) -> NDArray[np.float64]:
        """Get reduced coordinates of interior values of ``u_0``."""
        flux = self.weights @ u0
        Z = self.basis[:, : self.unit_flux.size - 1]
        if self.formulation is Formulation.PRESSURE:
            return np.append(Z.T @ (u0 - flux * self.unit_flux), flux)
        return Z.T @ (u0 - self.offset)

    @property
    def size(self) -> int:
        """Number of reduced coordinates."""
        return self.basis.shape[1]


@dataclass(frozen=True, eq=False)
class SpectralOperators:
    """Matrices of the discretization which do not depend on Re, c or dt."""

    disc: Discretization

    #: Interior first derivative on the Lobatto grid (zero wall values assumed).
    D1: NDArray[np.float64]

    #: Interior second derivative on the Lobatto grid (zero wall values assumed).
    D2: NDArray[np.float64]

    #: Pressure on Gauss nodes to interior Lobatto nodes.
    E: NDArray[np.float64]

    #: Derivative of the pressure on Gauss nodes, at interior Lobatto nodes.
    dE: NDArray[np.float64]

    #: Interior velocity values to Gauss nodes.
    Iu: NDArray[np.float64]

    #: Derivative of interior velocity values, at Gauss nodes.
    Dv: NDArray[np.float64]

    #: Wall derivatives (upper wall, lower wall) of interior velocity values.
    wall_derivative: NDArray[np.float64]

    #: Clenshaw-Curtis weights on interior nodes.
    weights: NDArray[np.float64]

    #: Exact ``L2`` mass matrix of interior values with zero wall values.
    mass: NDArray[np.float64]

    #: Laminar profile ``1 - y^2`` on interior nodes.
    laminar: NDArray[np.float64]

    #: Per-mode elimination blocks for ``k = 1..N``.
    modes: tuple[ModeBlock, ...]

    _zero: dict[Formulation, ZeroModeBlock] = field(default_factory=dict, repr=False)

    def mode(self, k: int) -> ModeBlock:
        """Get the elimination block of mode ``k >= 1``."""
        return self.modes[k - 1]

    def zero_mode(self, formulation: Formulation) -> ZeroModeBlock:
        """Get (and cache) the zero-mode block of a formulation."""
        block = self._zero.get(formulation)
        if block is None:
            block = _build_zero_mode(self, formulation)
            self._zero[formulation] = block
        return block

    def flux(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        """Integrate interior values (with zero walls) across the channel."""
        return self.weights @ u

    def wall_jump(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        """Get ``du/dy(+1) - du/dy(-1)`` of interior values (with zero walls)."""
        return (self.wall_derivative[0] - self.wall_derivative[1]) @ u


def _build_mode(
    k: int,
    alpha: float,
    M: int,
    mats: dict[str, NDArray[np.float64]],
) -> ModeBlock:
    ika = 1j * k * alpha
    Iu, Dv, E, dE, D2 = mats['Iu'], mats['Dv'], mats['E'], mats['dE'], mats['D2']
    M2 = M - 2

    B = np.column_stack([ika * Iu[:, M2], Dv]).astype(np.complex128)
    B_lu = _factorize(B, 'continuity', k)
    T = sla.lu_solve(B_lu, -ika * Iu[:, :M2], check_finite=False)

    Q = np.vstack([ika * E[M2 : M2 + 1], dE]).astype(np.complex128)
    Q_lu = _factorize(Q, 'Q', k)
    Qbar = ika * E[:M2]
    # P Q = Qbar, solved through the transposed factorization.
    P = sla.lu_solve(Q_lu, Qbar.T, trans=1, check_finite=False).T

    R = np.eye(M2, dtype=np.complex128) - P @ T
    R_lu = _factorize(R, 'I - P T', k)

    Ju = np.vstack([np.eye(M2, dtype=np.complex128), T[:1]])
    Jv = T[1:]
    H = D2 - (k * alpha) ** 2 * np.eye(M - 1)
    Hu = H @ Ju
    Hv = H @ Jv
    vbar = np.vstack([Hu[M2:], Hv])
    diffusion = sla.lu_solve(R_lu, Hu[:M2] - P @ vbar, check_finite=False)

    return ModeBlock(
        k=k,
        T=T,
        Q=Q,
        Q_lu=Q_lu,
        P=P,
        R=R,
        R_lu=R_lu,
        Ju=Ju,
        Jv=Jv,
        diffusion=diffusion,
    )


def _build_zero_mode(ops: SpectralOperators, formulation: Formulation) -> ZeroModeBlock:
    w = ops.weights
    # Unit-flux profile: e'' = -3/2 and e'(+1) - e'(-1) = -3 hold exactly.
    e = 0.75 * ops.laminar
    Z = sla.null_space(w[np.newaxis, :])
    n = w.size
    ones = np.ones(n)
    D2Z = ops.D2 @ Z
    remove_flux = np.eye(n) - np.outer(e, w)
    tangent = Z.T @ remove_flux

    if formulation is Formulation.PRESSURE:
        basis = np.column_stack([Z, e])
        offset = np.zeros(n)
        projection = np.vstack([tangent, w])
        laplacian = np.column_stack([D2Z, -1.5 * ones])
        forcing = 2.0 * (projection @ ones)
    else:
        basis = Z
        offset = LAMINAR_FLUX * e
        projection = tangent
        # The mean pressure gradient -[u0']/2 keeps the flux constant.
        laplacian = D2Z - 0.5 * np.outer(ones, ops.wall_jump(Z))
        forcing = np.zeros(n - 1)

    return ZeroModeBlock(
        formulation=formulation,
        basis=basis,
        offset=offset,
        projection=projection,
        diffusion=projection @ laplacian,
        forcing=forcing,
        unit_flux=e,
        weights=w,
    )


@lru_cache(maxsize=8)
def spectral_operators(disc: Discretization) -> SpectralOperators:
    """
    Build (and cache) all Re-independent matrices of a discretization.

    Raises:
        SingularOperatorError: when the pressure elimination of some mode is singular.

    Returns:
        A read-only set of matrices shared by all consumers of this discretization.

    """
    M = disc.M
    C1 = lobatto_transform(M)
    C1i = lobatto_inverse(M)
    C2i = gauss_inverse(M)
    C2x = gauss_transform(M, extended=True)
    Dy = derivative_matrix(M)

    inner = C1i[:, 1:M]
    mats = {
        'D1': C1[1:M] @ Dy @ inner,
        'D2': C1[1:M] @ Dy @ Dy @ inner,
        'E': C1[1:M, :M] @ C2i,
        'dE': C1[1:M] @ Dy[:, :M] @ C2i,
        'Iu': C2x @ inner,
        'Dv': C2x @ Dy @ inner,
    }
    modes = tuple(_build_mode(k, disc.alpha, M, mats) for k in range(1, disc.N + 1))
    y = disc.velocity_nodes
    logger.debug('Built spectral operators for N=%d, M=%d, alpha=%g', disc.N, M, disc.alpha)
    return SpectralOperators(
        disc=disc,
        D1=mats['D1'],
        D2=mats['D2'],
        E=mats['E'],
        dE=mats['dE'],
        Iu=mats['Iu'],
        Dv=mats['Dv'],
        wall_derivative=C1[[0, M]] @ Dy @ inner,
        weights=quadrature_weights(M)[1:M].copy(),
        mass=inner.T @ gram_matrix(M) @ inner,
        laminar=1.0 - y * y,
        modes=modes,
    )


@dataclass(frozen=True, eq=False)
class OperatorSet:
    """
    Linear operators of the reduced system for given ``Re``, ``c`` and time step.

    Block ``0`` is real and acts on the zero-mode coordinates; block ``k >= 1`` is complex
    and acts on ``ub_k``. The streamwise advection by the frame speed is diagonal:
    ``i k alpha c``.
    """

    disc: Discretization
    formulation: Formulation
    Re: float
    c: float = 0.0
    dt: float | None = None

    def __post_init__(self) -> None:
        """Validate the physical parameters."""
        if not (np.isfinite(self.Re) and self.Re > 0.0):
            msg = f'Reynolds number must be positive (got Re={self.Re}).'
            raise ParameterError(msg)
        if not np.isfinite(self.c):
            msg = f'Phase speed must be finite (got c={self.c}).'
            raise ParameterError(msg)
        if self.dt is not None and not (np.isfinite(self.dt) and self.dt > 0.0):
            msg = f'Time step must be positive (got dt={self.dt}).'
            raise ParameterError(msg)

    @cached_property
    def spectral(self) -> SpectralOperators:
        """Re-independent matrices."""
        return spectral_operators(self.disc)

    @cached_property
    def zero(self) -> ZeroModeBlock:
        """Zero-mode block of the formulation."""
        return self.spectral.zero_mode(self.formulation)

    @cached_property
    def blocks(self) -> tuple[Block, ...]:
        """Linear operator blocks ``L_0 .. L_N``."""
        nu = 1.0 / self.Re
        blocks: list[Block] = [nu * self.zero.diffusion]
        for mode in self.spectral.modes:
            L = nu * mode.diffusion
            L[np.diag_indices_from(L)] += 1j * mode.k * self.disc.alpha * self.c
            blocks.append(L)
        return tuple(blocks)

    @cached_property
    def forcing(self) -> NDArray[np.float64]:
        """Constant forcing of the zero-mode coordinates."""
        return self.zero.forcing / self.Re

    @cached_property
    def cn_factors(self) -> tuple[LUFactor, ...]:
        """Factorizations of ``I - dt/2 L_k`` used by the Crank-Nicolson step."""
        if self.dt is None:
            msg = 'A time step is required to build Crank-Nicolson factors.'
            raise ParameterError(msg)
        half = 0.5 * self.dt
        factors = []
        for k, L in enumerate(self.blocks):
            A = np.eye(L.shape[0], dtype=L.dtype) - half * L
            factors.append(_factorize(A, 'I - dt L / 2', k))
        return tuple(factors)

    def with_parameters(
        self,
        *,
        Re: float | None = None,
        c: float | None = None,
        dt: float | None = None,
    ) -> Self:
        """Get a copy of these operators for other physical parameters."""
        changes: dict[str, float] = {}
        if Re is not None:
            changes['Re'] = float(Re)
        if c is not None:
            changes['c'] = float(c)
        if dt is not None:
            changes['dt'] = float(dt)
        return dataclasses.replace(self, **changes)


def build_operators(
    disc: Discretization,
    Re: float,
    c: float = 0.0,
    dt: float | None = None,
    formulation: Formulation = Formulation.PRESSURE,
) -> OperatorSet:
    """
    Build the linear operators of the reduced system.

    The Re-independent part is cached per discretization, so rebuilding for another
    Reynolds number or phase speed only scales precomputed blocks.

    Args:
        disc: discretization to build operators for.
        Re: Reynolds number.
        c: speed of the moving frame.
        dt: time step, needed for the Crank-Nicolson factors.
        formulation: how the mean flow is driven.

    Raises:
        ParameterError: when a physical parameter is out of range.
        SingularOperatorError: when a per-mode block is singular.

    Returns:
        The operator set.

    """
    ops = OperatorSet(disc=disc, formulation=formulation, Re=float(Re), c=float(c), dt=dt)
    # Fail early on singular blocks.
    ops.spectral  # noqa: B018
    return ops
