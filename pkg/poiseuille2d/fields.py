"""Physical-space velocity, vorticity and streamfunction of spectral states."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np
from numpy.polynomial import chebyshev as cheb

from .exceptions import ParameterError
from .export import header_lines, read_header
from .reduced import expand
from .spectral import lobatto_inverse, lobatto_nodes, spectral_operators

if TYPE_CHECKING:
    from collections.abc import Mapping

    from numpy.typing import NDArray

    from .state import SpectralState

logger = logging.getLogger(__package__)

FIELD_COLUMNS = ('x', 'y', 'u', 'v', 'omega', 'psi')


@dataclass(frozen=True, eq=False)
class FieldSnapshot:
    """
    Fields sampled on a uniform streamwise grid times a Chebyshev wall-normal grid.

    Every field is shaped ``(ny, nx)``.
    """

    #: Streamwise coordinates over one period.
    x: NDArray[np.float64]

    #: Wall-normal coordinates, increasing from the lower wall.
    y: NDArray[np.float64]

    #: Streamwise velocity.
    u: NDArray[np.float64]

    #: Wall-normal velocity.
    v: NDArray[np.float64]

    #: Vorticity ``dv/dx - du/dy``.
    omega: NDArray[np.float64]

    #: Streamfunction ``psi = int_{-1}^{y} u dy``.
    psi: NDArray[np.float64]

    #: Time stamp of the state.
    t: float = 0.0

    @property
    def shape(self) -> tuple[int, int]:
        """Grid shape ``(ny, nx)``."""
        return (self.y.size, self.x.size)


def chebyshev_grid(ny: int) -> NDArray[np.float64]:
    """Get ``ny`` Gauss-Lobatto points ordered from ``y = -1`` to ``y = 1``."""
    if ny < 2:
        msg = f'At least two wall-normal points are required (got {ny}).'
        raise ParameterError(msg)
    return np.asarray(lobatto_nodes(ny - 1)[::-1])


def modal_coefficients(
    state: SpectralState,
) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """
    Get Chebyshev coefficients of every Fourier mode of the velocity.

    Returns:
        Coefficients of ``u_k`` and ``v_k``, shaped ``(M+1, N+1)``.

    """
    disc = state.disc
    spectral = spectral_operators(disc)
    zero = spectral.zero_mode(state.formulation)
    u, v = expand(spectral, zero, state.data[:, np.newaxis])
    full_u = np.zeros((disc.N + 1, disc.M + 1), dtype=np.complex128)
    full_v = np.zeros_like(full_u)
    full_u[:, 1 : disc.M] = u[..., 0]
    full_v[:, 1 : disc.M] = v[..., 0]
    Ci = lobatto_inverse(disc.M)
    return Ci @ full_u.T, Ci @ full_v.T


def _synthesize(
    modes: NDArray[np.complex128],
    alpha: float,
    x: NDArray[np.float64],
) -> NDArray[np.float64]:
    k = np.arange(modes.shape[0])
    weights = np.where(k == 0, 1.0, 2.0)
    phase = np.exp(1j * alpha * np.outer(k, x))
    return np.asarray(np.einsum('ky,kx->yx', modes * weights[:, np.newaxis], phase).real)


def field_snapshot(
    state: SpectralState,
    nx: int = 64,
    ny: int = 65,
    *,
    t: float = 0.0,
) -> FieldSnapshot:
    """
    Evaluate a state on a physical grid.

    Args:
        state: spectral state.
        nx: number of uniform streamwise points over one period.
        ny: number of Chebyshev points between the walls.
        t: time stamp recorded with the fields.

    Raises:
        ParameterError: for grids too small to sample anything.

    Returns:
        The fields with their grid.

    """
    if nx < 1:
        msg = f'At least one streamwise point is required (got {nx}).'
        raise ParameterError(msg)
    disc = state.disc
    y = chebyshev_grid(ny)
    x = disc.length * np.arange(nx) / nx
    cu, cv = modal_coefficients(state)

    u_k = cheb.chebval(y, cu)
    v_k = cheb.chebval(y, cv)
    dudy_k = cheb.chebval(y, cheb.chebder(cu, axis=0))
    psi_k = cheb.chebval(y, cheb.chebint(cu, lbnd=-1.0, axis=0))
    k = np.arange(disc.N + 1)[:, np.newaxis]
    omega_k = 1j * k * disc.alpha * v_k - dudy_k

    return FieldSnapshot(
        x=x,
        y=y,
        u=_synthesize(u_k, disc.alpha, x),
        v=_synthesize(v_k, disc.alpha, x),
        omega=_synthesize(omega_k, disc.alpha, x),
        psi=_synthesize(psi_k, disc.alpha, x),
        t=float(t),
    )


def write_snapshot(
    path: str | Path,
    snapshot: FieldSnapshot,
    parameters: Mapping[str, Any],
) -> Path:
    """
    Write a snapshot as text, one grid point per row in row-major ``(y, x)`` order.

    Returns:
        The path of the written file.

    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ny, nx = snapshot.shape
    X, Y = np.meshgrid(snapshot.x, snapshot.y)
    table = np.column_stack(
        [a.ravel() for a in (X, Y, snapshot.u, snapshot.v, snapshot.omega, snapshot.psi)]
    )
    params = {**parameters, 'nx': nx, 'ny': ny, 't': snapshot.t}
    lines = header_lines('field-snapshot', params, FIELD_COLUMNS)
    header = '\n'.join(line[2:] for line in lines)
    np.savetxt(path, table, fmt='%.17g', header=header, comments='# ')
    logger.info('Wrote %dx%d field snapshot to %s', ny, nx, path)
    return path


def read_snapshot(path: str | Path) -> FieldSnapshot:
    """
    Read a snapshot written by :func:`write_snapshot`.

    Raises:
        ParameterError: when the header misses the grid shape.

    """
    header = read_header(path)
    try:
        nx, ny = int(header['nx']), int(header['ny'])
    except (KeyError, ValueError) as exc:
        msg = f'{path} is not a field snapshot.'
        raise ParameterError(msg) from exc
    table = np.loadtxt(path, comments='#', ndmin=2)
    cols = [table[:, j].reshape(ny, nx) for j in range(len(FIELD_COLUMNS))]
    return FieldSnapshot(
        x=cols[0][0].copy(),
        y=cols[1][:, 0].copy(),
        u=cols[2],
        v=cols[3],
        omega=cols[4],
        psi=cols[5],
        t=float(header.get('t', 0.0)),
    )
