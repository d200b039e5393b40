"""Packing of the reduced unknowns into one real vector."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING

import numpy as np

from .exceptions import DegenerateStateError, ParameterError
from .models import Formulation
from .spectral import LAMINAR_FLUX

if TYPE_CHECKING:
    from numpy.typing import NDArray
    from typing_extensions import Self

    from .spectral import Discretization


@dataclass(frozen=True)
class StateLayout:
    """
    Positions of the reduced unknowns in the real state vector ``U``.

    ``U`` starts with the zero-mode coordinates, then holds for each ``k = 1..N`` the real
    parts of ``ub_k`` followed by their imaginary parts.
    """

    N: int
    M: int
    formulation: Formulation

    @property
    def zero_size(self) -> int:
        """Number of zero-mode coordinates."""
        return self.M - 1 if self.formulation is Formulation.PRESSURE else self.M - 2

    @property
    def mode_size(self) -> int:
        """Number of complex unknowns per mode ``k >= 1``."""
        return self.M - 2

    @property
    def size(self) -> int:
        """Total dimension ``K`` of the state vector."""
        return self.zero_size + 2 * self.N * self.mode_size

    def mode_start(self, k: int) -> int:
        """Index of ``Re ub_{k,1}``."""
        return self.zero_size + 2 * (k - 1) * self.mode_size

    @property
    def flux_index(self) -> int | None:
        """Index of the flux coordinate (constant-pressure formulation only)."""
        return self.M - 2 if self.formulation is Formulation.PRESSURE else None

    @property
    def section1(self) -> int:
        """Index of ``Re ub_{1,1}`` pinned by the first phase section."""
        return self.mode_start(1)

    @property
    def section2(self) -> int:
        """Index of ``Re ub_{N,M/2-1}`` pinned by the second phase section."""
        return self.mode_start(self.N) + self.M // 2 - 2

    def midchannel(self, k: int) -> int:
        """Index of ``Re ub_{k,M/2}``, the value on the channel centreline."""
        return self.mode_start(k) + self.M // 2 - 1

    def split(
        self,
        U: NDArray[np.float64],
    ) -> tuple[NDArray[np.float64], NDArray[np.complex128]]:
        """
        Split state vectors into zero-mode coordinates and complex mode unknowns.

        Args:
            U: states along the first axis, any trailing shape.

        Returns:
            Zero-mode coordinates and ``ub`` shaped ``(N, M-2, ...)``.

        """
        n0, m = self.zero_size, self.mode_size
        rest = U[n0:].reshape((self.N, 2, m) + U.shape[1:])
        return U[:n0], rest[:, 0] + 1j * rest[:, 1]

    def join(self, x0: NDArray[np.float64], ub: NDArray[np.complex128]) -> NDArray[np.float64]:
        """Pack zero-mode coordinates and mode unknowns back into state vectors."""
        tail = x0.shape[1:]
        rest = np.stack([ub.real, ub.imag], axis=1).reshape((-1,) + tail)
        return np.concatenate([x0, rest], axis=0)


@lru_cache(maxsize=32)
def state_layout(disc: Discretization, formulation: Formulation) -> StateLayout:
    """Get the layout of state vectors for a discretization and a formulation."""
    return StateLayout(N=disc.N, M=disc.M, formulation=formulation)


def laminar_vector(disc: Discretization, formulation: Formulation) -> NDArray[np.float64]:
    """
    Get the laminar state ``u = 1 - y^2``.

    Zero-mode coordinates are relative to the unit-flux profile, so the laminar flow only
    carries its flux ``4/3`` (constant pressure) or nothing at all (constant flux).
    """
    layout = state_layout(disc, formulation)
    U = np.zeros(layout.size)
    if layout.flux_index is not None:
        U[layout.flux_index] = LAMINAR_FLUX
    return U


def translate(
    disc: Discretization,
    U: NDArray[np.float64],
    shift: float,
) -> NDArray[np.float64]:
    """
    Shift a flow downstream, multiplying mode ``k`` by ``exp(-i k alpha shift)``.

    Args:
        disc: discretization of the state.
        U: state vector (either formulation).
        shift: streamwise distance.

    Returns:
        The shifted state.

    """
    n0 = U.size - 2 * disc.N * (disc.M - 2)
    layout = StateLayout(N=disc.N, M=disc.M, formulation=_formulation_of(disc, n0))
    x0, ub = layout.split(U)
    k = np.arange(1, disc.N + 1)[:, np.newaxis]
    return layout.join(x0.copy(), ub * np.exp(-1j * k * disc.alpha * shift))


def _formulation_of(disc: Discretization, zero_size: int) -> Formulation:
    if zero_size == disc.M - 1:
        return Formulation.PRESSURE
    if zero_size == disc.M - 2:
        return Formulation.FLUX
    msg = f'State size does not match N={disc.N}, M={disc.M}.'
    raise ParameterError(msg)


def align_to_section(
    disc: Discretization,
    U: NDArray[np.float64],
    s1: float = 0.0,
) -> tuple[NDArray[np.float64], float]:
    """
    Translate a state so that it lies on the first phase section ``Re ub_{1,1} = s1``.

    Of the two admissible shifts, the one leaving ``Im ub_{1,1} >= 0`` is selected.

    Raises:
        DegenerateStateError: when ``|ub_{1,1}|`` is too small to reach ``s1``.

    Returns:
        The translated state and the applied shift.

    """
    i1 = U.size - 2 * disc.N * (disc.M - 2)
    z = complex(U[i1], U[i1 + disc.M - 2])
    if abs(z) <= abs(s1) or abs(z) == 0.0:
        msg = f'Mode 1 is too weak to reach the section value {s1} (|z|={abs(z):.3e}).'
        raise DegenerateStateError(msg)
    phase = math.atan2(z.imag, z.real) - math.acos(s1 / abs(z))
    shift = phase / disc.alpha
    V = translate(disc, U, shift)
    V[i1] = s1
    return V, shift


@dataclass(frozen=True, eq=False)
class SpectralState:
    """A state vector bound to its discretization and formulation."""

    #: Discretization of the state.
    disc: Discretization

    #: Formulation the zero-mode coordinates refer to.
    formulation: Formulation

    #: Real state vector ``U``.
    data: NDArray[np.float64]

    def __post_init__(self) -> None:
        """Check the vector size against the layout."""
        data = np.asarray(self.data, dtype=np.float64)
        if data.shape != (self.layout.size,):
            msg = f'State has shape {data.shape}, expected ({self.layout.size},).'
            raise ParameterError(msg)
        object.__setattr__(self, 'data', data)

    @property
    def layout(self) -> StateLayout:
        """Layout of :attr:`data`."""
        return state_layout(self.disc, self.formulation)

    @property
    def u0(self) -> NDArray[np.float64]:
        """Zero-mode coordinates."""
        return self.data[: self.layout.zero_size]

    def uk(self, k: int) -> NDArray[np.complex128]:
        """Get ``ub_k`` for ``k = 1..N``."""
        if not 1 <= k <= self.disc.N:
            msg = f'Mode {k} is out of range 1..{self.disc.N}.'
            raise ParameterError(msg)
        start = self.layout.mode_start(k)
        m = self.layout.mode_size
        return self.data[start : start + m] + 1j * self.data[start + m : start + 2 * m]

    @classmethod
    def laminar(cls, disc: Discretization, formulation: Formulation) -> Self:
        """Build the laminar state."""
        return cls(disc=disc, formulation=formulation, data=laminar_vector(disc, formulation))

    def with_data(self, data: NDArray[np.float64]) -> Self:
        """Get a state with the same discretization and another vector."""
        return type(self)(disc=self.disc, formulation=self.formulation, data=data)

    def translate(self, shift: float) -> Self:
        """Get this state shifted downstream by ``shift``."""
        return self.with_data(translate(self.disc, self.data, shift))
