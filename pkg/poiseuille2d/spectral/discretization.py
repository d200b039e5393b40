from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from scipy import fft

from ..exceptions import ParameterError
from .chebyshev import gauss_nodes, lobatto_nodes

if TYPE_CHECKING:
    import numpy as np
    from numpy.typing import NDArray


@dataclass(frozen=True)
class Discretization:
    """
    Truncation parameters of the Fourier-Chebyshev discretization.

    Instances are hashable and are used as cache keys for the operator blocks.
    """

    #: Highest Fourier mode kept in the streamwise direction.
    N: int

    #: Chebyshev degree in the wall-normal direction (even, at least 6).
    M: int

    #: Fundamental streamwise wavenumber, the periodic length being ``2 pi / alpha``.
    alpha: float

    #: Zero the nonlinear term of modes above ``2N/3``.
    dealias: bool = False

    #: Number of physical points used for products (computed when left to zero).
    nx: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        """Validate the truncation and compute the padded physical grid size."""
        if self.N < 1:
            msg = f'At least one Fourier mode is required (got N={self.N}).'
            raise ParameterError(msg)
        if self.M < 6 or self.M % 2:
            msg = f'Chebyshev degree must be even and at least 6 (got M={self.M}).'
            raise ParameterError(msg)
        if not (math.isfinite(self.alpha) and self.alpha > 0.0):
            msg = f'Wavenumber must be a positive number (got alpha={self.alpha}).'
            raise ParameterError(msg)
        minimum = 3 * self.N + 1
        if self.nx < minimum:
            object.__setattr__(self, 'nx', fft.next_fast_len(minimum, real=True))

    @property
    def length(self) -> float:
        """Streamwise period ``L = 2 pi / alpha``."""
        return 2.0 * math.pi / self.alpha

    @property
    def velocity_nodes(self) -> NDArray[np.float64]:
        """Interior Gauss-Lobatto nodes ``y_1 .. y_{M-1}`` carrying the velocities."""
        return lobatto_nodes(self.M)[1 : self.M]

    @property
    def pressure_nodes(self) -> NDArray[np.float64]:
        """Gauss nodes carrying the pressure and the continuity equation."""
        return gauss_nodes(self.M)

    @property
    def dealias_cutoff(self) -> int:
        """Highest mode kept in the nonlinear term."""
        return (2 * self.N) // 3 if self.dealias else self.N


def build_discretization(
    N: int,
    M: int,
    alpha: float,
    *,
    dealias: bool = False,
) -> Discretization:
    """
    Build and validate a discretization.

    Args:
        N: highest Fourier mode.
        M: Chebyshev degree, even and at least 6.
        alpha: fundamental streamwise wavenumber.
        dealias: apply the two-thirds truncation to the nonlinear term.

    Raises:
        ParameterError: when any of the parameters is out of range.

    Returns:
        A new discretization object.

    """
    return Discretization(N=int(N), M=int(M), alpha=float(alpha), dealias=bool(dealias))
