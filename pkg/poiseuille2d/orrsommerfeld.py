"""
Linear stability of the laminar flow through the Orr-Sommerfeld equation.

The eigenvalue problem ``lambda B phi = A phi`` is discretized with second-order finite
differences on a uniform mesh, solved by shifted inverse iteration, and improved by
Richardson extrapolation over a ladder of halved mesh spacings.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import TYPE_CHECKING, ClassVar

import numpy as np
import scipy.linalg as sla
from scipy import optimize

from .exceptions import EigenvalueConvergenceError, ParameterError
from .models import CriticalPoint, Extrapolation, LinearMode, NeutralPoint

if TYPE_CHECKING:
    from numpy.typing import NDArray

logger = logging.getLogger(__package__)


def _band(
    diagonals: dict[int, NDArray[np.generic]],
    n: int,
    lower: int,
    upper: int,
) -> NDArray[np.complex128]:
    """Pack diagonals (keyed by offset ``j - i``) in the layout of :func:`solve_banded`."""
    ab = np.zeros((lower + upper + 1, n), dtype=np.complex128)
    for d, values in diagonals.items():
        if d >= 0:
            ab[upper - d, d:] = values
        else:
            ab[upper - d, : n + d] = values
    return ab


def _rows(values: NDArray[np.float64], d: int) -> NDArray[np.float64]:
    """Get the row factors matching the diagonal of offset ``d``."""
    n = values.size
    return values[: n - d] if d >= 0 else values[-d:]


def banded_matvec(
    ab: NDArray[np.generic],
    lower: int,
    upper: int,
    x: NDArray[np.generic],
) -> NDArray[np.complex128]:
    """Multiply a matrix in :func:`solve_banded` layout with a vector."""
    n = ab.shape[1]
    y = np.zeros(n, dtype=np.complex128)
    for d in range(-lower, upper + 1):
        if d >= 0:
            y[: n - d] += ab[upper - d, d:] * x[d:]
        else:
            y[-d:] += ab[upper - d, : n + d] * x[: n + d]
    return y


def _to_dense(ab: NDArray[np.generic], lower: int, upper: int) -> NDArray[np.complex128]:
    n = ab.shape[1]
    out = np.zeros((n, n), dtype=np.complex128)
    for d in range(-lower, upper + 1):
        if d >= 0:
            out[np.arange(n - d), np.arange(d, n)] = ab[upper - d, d:]
        else:
            out[np.arange(-d, n), np.arange(n + d)] = ab[upper - d, : n + d]
    return out


@dataclass(frozen=True, eq=False)
class OSMatrices:
    """Banded matrices of the discretized Orr-Sommerfeld problem ``lambda B phi = A phi``."""

    #: Bandwidths of :attr:`A` (pentadiagonal).
    A_BANDS: ClassVar[tuple[int, int]] = (2, 2)
    #: Bandwidths of :attr:`B` (tridiagonal).
    B_BANDS: ClassVar[tuple[int, int]] = (1, 1)

    alpha: float
    Re: float

    #: Interior nodes ``y_i = -1 + i h``.
    y: NDArray[np.float64]

    #: Banded storage of ``A``.
    A: NDArray[np.complex128]

    #: Banded storage of ``B``.
    B: NDArray[np.complex128]

    @property
    def n(self) -> int:
        """Number of interior nodes."""
        return self.y.size

    @property
    def h(self) -> float:
        """Mesh spacing."""
        return 2.0 / (self.n + 1)

    def shifted(self, sigma: complex) -> NDArray[np.complex128]:
        """Get ``A - sigma B`` in pentadiagonal banded storage."""
        ab = self.A.copy()
        ab[1:4] -= sigma * self.B
        return ab

    def dense(self) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
        """Get dense copies of ``A`` and ``B``."""
        return _to_dense(self.A, *self.A_BANDS), _to_dense(self.B, *self.B_BANDS)

    def residual(self, eigenvalue: complex, phi: NDArray[np.complex128]) -> float:
        """Get ``||A phi - lambda B phi|| / (||A|| ||phi||)`` in max-norms."""
        r = banded_matvec(self.A, 2, 2, phi) - eigenvalue * banded_matvec(self.B, 1, 1, phi)
        norm_A = float(np.abs(self.A).sum(axis=0).max())
        return float(np.abs(r).max() / (norm_A * np.abs(phi).max()))


def assemble_os(alpha: float, Re: float, n: int) -> OSMatrices:
    """
    Assemble the finite-difference Orr-Sommerfeld matrices for the laminar profile.

    ``B = D2 - alpha^2`` and
    ``A = (D4 - 2 alpha^2 D2 + alpha^4) / Re - i alpha U (D2 - alpha^2) + i alpha U''``
    with ``U = 1 - y^2``. Clamped walls are imposed through the ghost values
    ``phi_{-1} = phi_1``, which puts ``7`` on both corner diagonal entries of ``D4``.

    Args:
        alpha: streamwise wavenumber.
        Re: Reynolds number.
        n: number of interior nodes.

    Raises:
        ParameterError: for non-positive parameters or fewer than 16 nodes.

    Returns:
        The banded matrices.

    """
    if n < 16:
        msg = f'At least 16 interior nodes are required (got n={n}).'
        raise ParameterError(msg)
    if not (alpha > 0.0 and Re > 0.0):
        msg = f'Wavenumber and Reynolds number must be positive (got {alpha}, {Re}).'
        raise ParameterError(msg)

    h = 2.0 / (n + 1)
    y = -1.0 + h * np.arange(1, n + 1)
    U = 1.0 - y * y
    a2 = alpha * alpha
    h2 = h * h
    h4 = h2 * h2

    main4 = np.full(n, 6.0 / h4)
    main4[0] = main4[-1] = 7.0 / h4
    bih = {
        0: (main4 + 4.0 * a2 / h2 + a2 * a2) / Re,
        1: np.full(n - 1, (-4.0 / h4 - 2.0 * a2 / h2) / Re),
        -1: np.full(n - 1, (-4.0 / h4 - 2.0 * a2 / h2) / Re),
        2: np.full(n - 2, 1.0 / h4 / Re),
        -2: np.full(n - 2, 1.0 / h4 / Re),
    }
    lap = {
        0: np.full(n, -2.0 / h2 - a2),
        1: np.full(n - 1, 1.0 / h2),
        -1: np.full(n - 1, 1.0 / h2),
    }
    A_diags: dict[int, NDArray[np.generic]] = {}
    for d, values in bih.items():
        A_diags[d] = values.astype(np.complex128)
    for d, values in lap.items():
        A_diags[d] = A_diags[d] - 1j * alpha * _rows(U, d) * values
    # U'' = -2 for the laminar profile.
    A_diags[0] = A_diags[0] - 2j * alpha

    return OSMatrices(
        alpha=float(alpha),
        Re=float(Re),
        y=y,
        A=_band(A_diags, n, 2, 2),
        B=_band(lap, n, 1, 1),
    )


def dense_seed(alpha: float, Re: float, n: int = 200) -> complex:
    """
    Get the eigenvalue with the largest real part from a dense solve on a coarse mesh.

    Args:
        alpha: streamwise wavenumber.
        Re: Reynolds number.
        n: number of interior nodes of the coarse mesh.

    Returns:
        The leading eigenvalue, used as the initial shift of inverse iteration.

    """
    A, B = assemble_os(alpha, Re, n).dense()
    values = sla.eigvals(A, B)
    values = values[np.isfinite(values)]
    return complex(values[np.argmax(values.real)])


def leading_mode(
    alpha: float,
    Re: float,
    n: int,
    *,
    shift: complex | None = None,
    tol: float = 1.0e-12,
    max_iter: int = 200,
) -> LinearMode:
    """
    Compute the eigen-pair closest to ``shift`` by inverse iteration with adapted shifts.

    The shift is replaced by the current eigenvalue estimate at every iteration.

    Args:
        alpha: streamwise wavenumber.
        Re: Reynolds number.
        n: number of interior nodes.
        shift: initial shift, a dense coarse-mesh estimate by default.
        tol: tolerance on successive eigenvalue estimates.
        max_iter: iteration cap.

    Raises:
        EigenvalueConvergenceError: when the estimates did not settle within ``max_iter``.

    Returns:
        The converged mode.

    """
    mats = assemble_os(alpha, Re, n)
    sigma = dense_seed(alpha, Re) if shift is None else complex(shift)
    x = np.ones(n, dtype=np.complex128) / math.sqrt(n)
    lam = sigma
    delta_prev = math.inf

    for iteration in range(1, max_iter + 1):
        rhs = banded_matvec(mats.B, 1, 1, x)
        try:
            y = sla.solve_banded((2, 2), mats.shifted(sigma), rhs, check_finite=False)
        except np.linalg.LinAlgError:
            logger.debug('Shift hit the eigenvalue exactly after %d iterations', iteration)
            break
        mu = np.vdot(y, x) / np.vdot(y, y)
        lam_new = sigma + complex(mu)
        x = y / np.linalg.norm(y)
        delta = abs(lam_new - lam)
        lam = lam_new
        if delta <= tol * max(1.0, abs(lam)):
            break
        if delta < 1.0e-10 and delta >= delta_prev:
            logger.debug('Eigenvalue estimate stagnates at %.3e, accepting it', delta)
            break
        delta_prev = delta
        sigma = lam
    else:
        msg = f'Inverse iteration did not converge for alpha={alpha}, Re={Re}, n={n}.'
        raise EigenvalueConvergenceError(msg, best=lam, residual=delta_prev)

    phi = x / x[np.argmax(np.abs(x))]
    return LinearMode(
        eigenvalue=lam,
        eigenfunction=phi,
        n=n,
        iterations=iteration,
        residual=mats.residual(lam, phi),
        alpha=float(alpha),
    )


def extrapolate(
    spacings: Sequence[float],
    values: Sequence[complex],
    order: float = 2.0,
) -> Extrapolation:
    """
    Richardson-extrapolate values computed on a ladder of decreasing mesh spacings.

    Two levels remove the leading ``h^order`` error term; a third level also removes the
    ``h^(order+2)`` term and provides the observed order of convergence.

    Args:
        spacings: mesh spacings, decreasing.
        values: values computed with these spacings.
        order: order of the leading error term.

    Raises:
        ParameterError: with inconsistent inputs.

    Returns:
        The extrapolated value with its error estimate.

    """
    if len(spacings) != len(values) or not values:
        msg = 'Extrapolation needs as many spacings as values, and at least one.'
        raise ParameterError(msg)
    h = [float(s) for s in spacings]
    v = [complex(x) for x in values]
    if any(b >= a for a, b in zip(h, h[1:])):
        msg = f'Mesh spacings must decrease (got {h}).'
        raise ParameterError(msg)

    if len(v) == 1:
        return Extrapolation(value=v[0], error=math.nan, order=math.nan, consistent=True)

    def richardson(a: complex, b: complex, ratio: float, p: float) -> complex:
        return b + (b - a) / (ratio**p - 1.0)

    first = [
        richardson(v[i], v[i + 1], h[i] / h[i + 1], order) for i in range(len(v) - 1)
    ]
    if len(v) == 2:
        return Extrapolation(
            value=first[0],
            error=abs(first[0] - v[1]),
            order=math.nan,
            consistent=True,
        )

    value = richardson(first[-2], first[-1], h[-2] / h[-1], order + 2.0)
    d12 = abs(v[-3] - v[-2])
    d23 = abs(v[-2] - v[-1])
    if d12 == 0.0 and d23 == 0.0:
        observed = math.nan
    elif d23 == 0.0:
        observed = math.inf
    elif d12 == 0.0:
        observed = -math.inf
    else:
        observed = math.log(d12 / d23) / math.log(h[-3] / h[-2])

    consistent = d23 <= d12
    if not consistent:
        logger.warning('Non-monotone extrapolation ladder: differences %.3e, %.3e', d12, d23)
    return Extrapolation(
        value=value,
        error=abs(value - first[-1]),
        order=observed,
        consistent=consistent,
    )


def mesh_ladder(n: int, levels: int) -> list[int]:
    """Get node counts ``n, 2n+1, 4n+3, ..`` whose mesh spacings halve at each level."""
    ladder = [n]
    for _ in range(levels - 1):
        ladder.append(2 * ladder[-1] + 1)
    return ladder


def leading_eigenvalue(
    alpha: float,
    Re: float,
    n: int = 400,
    *,
    levels: int = 3,
    shift: complex | None = None,
) -> tuple[Extrapolation, list[LinearMode]]:
    """
    Compute the extrapolated leading eigenvalue of the laminar flow.

    Each level is seeded with the eigenvalue of the previous one.

    Args:
        alpha: streamwise wavenumber.
        Re: Reynolds number.
        n: number of interior nodes of the coarsest level.
        levels: number of mesh levels.
        shift: initial shift of the coarsest level.

    Returns:
        The extrapolation and the modes of every level.

    """
    modes: list[LinearMode] = []
    for size in mesh_ladder(n, levels):
        mode = leading_mode(alpha, Re, size, shift=shift)
        shift = mode.eigenvalue
        modes.append(mode)
    spacings = [2.0 / (m.n + 1) for m in modes]
    result = extrapolate(spacings, [m.eigenvalue for m in modes])
    logger.debug(
        'alpha=%g, Re=%g: lambda=%s (order %.2f)', alpha, Re, result.value, result.order
    )
    return result, modes


@dataclass
class _GrowthRate:
    """Growth rate of the leading mode, warm-started from the last evaluation."""

    alpha: float
    n: int
    levels: int
    shift: complex | None = None
    last: complex = 0j

    def __call__(self, Re: float) -> float:
        result, modes = leading_eigenvalue(
            self.alpha,
            Re,
            self.n,
            levels=self.levels,
            shift=self.shift,
        )
        self.shift = modes[0].eigenvalue
        self.last = result.value
        return result.value.real


def neutral_curve(
    alphas: Sequence[float],
    re_range: tuple[float, float] = (3000.0, 100000.0),
    n: int = 300,
    *,
    samples: int = 16,
    levels: int = 3,
    xtol: float = 1.0e-3,
) -> list[NeutralPoint]:
    """
    Locate the neutral Reynolds numbers of every wavenumber.

    The growth rate is sampled on a logarithmic grid of Reynolds numbers; every sign change
    is refined by Brent's method. A wavenumber without any sign change is reported with
    ``Re=None`` (stable on the whole range when the growth rate is negative).

    Args:
        alphas: wavenumbers to scan.
        re_range: range of Reynolds numbers.
        n: interior nodes of the coarsest mesh level.
        samples: number of sampled Reynolds numbers per wavenumber.
        levels: number of mesh levels in the extrapolation.
        xtol: absolute tolerance on the neutral Reynolds number.

    Returns:
        Neutral points, lower branch before upper branch for each wavenumber.

    """
    points: list[NeutralPoint] = []
    grid = np.geomspace(re_range[0], re_range[1], samples)
    for alpha in alphas:
        growth = _GrowthRate(alpha=float(alpha), n=n, levels=levels)
        rates = [growth(Re) for Re in grid]
        found = False
        for lo, hi, g_lo, g_hi in zip(grid, grid[1:], rates, rates[1:]):
            if g_lo == 0.0 or g_lo * g_hi >= 0.0:
                continue
            Re = optimize.brentq(growth, lo, hi, xtol=xtol)
            growth(Re)
            points.append(
                NeutralPoint(
                    alpha=float(alpha),
                    Re=float(Re),
                    frequency=growth.last.imag,
                    upper=g_lo > 0.0,
                )
            )
            found = True
        if not found:
            points.append(NeutralPoint(alpha=float(alpha), Re=None))
            logger.info('No neutral point for alpha=%g in Re range %s', alpha, re_range)
    return points


def lower_neutral_reynolds(
    alpha: float,
    re_bracket: tuple[float, float],
    n: int = 300,
    *,
    levels: int = 3,
    xtol: float = 1.0e-4,
) -> float | None:
    """Get the lower-branch neutral Reynolds number within a bracket, :obj:`None` if absent."""
    growth = _GrowthRate(alpha=float(alpha), n=n, levels=levels)
    lo, hi = re_bracket
    if not growth(lo) < 0.0 < growth(hi):
        return None
    return float(optimize.brentq(growth, lo, hi, xtol=xtol))


def critical_point(
    alpha_bounds: tuple[float, float] = (0.98, 1.06),
    re_bracket: tuple[float, float] = (5000.0, 8000.0),
    n: int = 300,
    *,
    levels: int = 3,
    xatol: float = 1.0e-5,
) -> CriticalPoint:
    """
    Find the nose of the neutral curve by minimizing the lower neutral Reynolds number.

    Args:
        alpha_bounds: wavenumber bounds of the search.
        re_bracket: Reynolds numbers bracketing the lower neutral branch.
        n: interior nodes of the coarsest mesh level.
        levels: number of mesh levels in the extrapolation.
        xatol: absolute tolerance on the critical wavenumber.

    Raises:
        ParameterError: when the bracket misses the neutral curve at the optimum.

    Returns:
        The critical point.

    """

    def objective(alpha: float) -> float:
        Re = lower_neutral_reynolds(alpha, re_bracket, n, levels=levels)
        return re_bracket[1] if Re is None else Re

    result = optimize.minimize_scalar(
        objective,
        bounds=alpha_bounds,
        method='bounded',
        options={'xatol': xatol},
    )
    alpha = float(result.x)
    Re = lower_neutral_reynolds(alpha, re_bracket, n, levels=levels)
    if Re is None:
        msg = f'Reynolds bracket {re_bracket} misses the neutral curve at alpha={alpha}.'
        raise ParameterError(msg)
    extrapolation, _ = leading_eigenvalue(alpha, Re, n, levels=levels)
    c = (1j * extrapolation.value / alpha).real
    logger.info('Critical point: Re=%.4f, alpha=%.6f, c=%.6f', Re, alpha, c)
    return CriticalPoint(Re=Re, alpha=alpha, c=c)
