from __future__ import annotations

from functools import lru_cache
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from numpy.typing import NDArray


def lobatto_nodes(M: int) -> NDArray[np.float64]:
    """
    Get the Gauss-Lobatto nodes ``y_m = cos(pi m / M)`` for ``m = 0..M``.

    Nodes are ordered from the upper wall (``y = 1``) to the lower wall.
    """
    return np.cos(np.pi * np.arange(M + 1) / M)


def gauss_nodes(M: int) -> NDArray[np.float64]:
    """Get the Gauss nodes ``cos(pi (m + 1/2) / M)`` for ``m = 0..M-1``."""
    return np.cos(np.pi * (np.arange(M) + 0.5) / M)


@lru_cache(maxsize=32)
def lobatto_transform(M: int) -> NDArray[np.float64]:
    """
    Build the ``(M+1) x (M+1)`` matrix evaluating a Chebyshev series on the Lobatto grid.

    Element ``[m, j]`` is ``T_j(y_m) = cos(pi j m / M)``.
    """
    m = np.arange(M + 1)
    C1 = np.cos(np.pi * np.outer(m, m) / M)
    C1.flags.writeable = False
    return C1


@lru_cache(maxsize=32)
def lobatto_inverse(M: int) -> NDArray[np.float64]:
    """
    Build the inverse of :func:`lobatto_transform` from its closed form.

    Coefficients are ``a_j = 2 / (M cb_j) sum_m f_m cos(pi j m / M) / cb_m`` where
    ``cb_0 = cb_M = 2`` and ``cb = 1`` elsewhere.
    """
    cb = np.ones(M + 1)
    cb[0] = cb[M] = 2.0
    Ci = 2.0 / M * lobatto_transform(M) / np.outer(cb, cb)
    Ci.flags.writeable = False
    return Ci


@lru_cache(maxsize=32)
def gauss_transform(M: int, extended: bool = False) -> NDArray[np.float64]:
    """
    Build the matrix evaluating a Chebyshev series on the Gauss grid.

    Args:
        M: number of Gauss nodes.
        extended: add a zero column for ``T_M`` so the matrix accepts ``M+1`` coefficients.

    Returns:
        A ``M x M`` matrix, or ``M x (M+1)`` when extended.

    """
    m = np.arange(M) + 0.5
    j = np.arange(M)
    C2 = np.cos(np.pi * np.outer(m, j) / M)
    if extended:
        # T_M vanishes on every Gauss node.
        C2 = np.hstack([C2, np.zeros((M, 1))])
    C2.flags.writeable = False
    return C2


@lru_cache(maxsize=32)
def gauss_inverse(M: int) -> NDArray[np.float64]:
    """Build the inverse of the square :func:`gauss_transform` from its closed form."""
    c = np.ones(M)
    c[0] = 2.0
    Ci = 2.0 / M * gauss_transform(M).T / c[:, np.newaxis]
    Ci.flags.writeable = False
    return Ci


@lru_cache(maxsize=32)
def derivative_matrix(M: int) -> NDArray[np.float64]:
    """
    Build the coefficient-space derivative of a Chebyshev series up to degree ``M``.

    ``b_j = (2 / c_j) sum_{p > j, p + j odd} p a_p`` with ``c_0 = 2``, ``c_j = 1`` otherwise.
    """
    j = np.arange(M + 1)
    p = j[np.newaxis, :]
    q = j[:, np.newaxis]
    Dy = np.where((p > q) & ((p + q) % 2 == 1), 2.0 * p, 0.0)
    Dy[0] /= 2.0
    Dy.flags.writeable = False
    return Dy


def integrals(M: int) -> NDArray[np.float64]:
    """Get the exact integrals of ``T_j`` over ``[-1, 1]`` for ``j = 0..M``."""
    j = np.arange(M + 1, dtype=np.float64)
    out = np.zeros(M + 1)
    even = j % 2 == 0
    out[even] = 2.0 / (1.0 - j[even] ** 2)
    return out


def _product_integral(n: NDArray[np.int64]) -> NDArray[np.float64]:
    out = np.zeros(n.shape)
    even = n % 2 == 0
    out[even] = 2.0 / (1.0 - n[even].astype(np.float64) ** 2)
    return out


@lru_cache(maxsize=32)
def gram_matrix(M: int) -> NDArray[np.float64]:
    """Build the exact Gram matrix of ``int T_i T_j dy`` over ``[-1, 1]``."""
    i = np.arange(M + 1)
    s = i[:, np.newaxis] + i[np.newaxis, :]
    d = np.abs(i[:, np.newaxis] - i[np.newaxis, :])
    G = 0.5 * (_product_integral(s) + _product_integral(d))
    G.flags.writeable = False
    return G


@lru_cache(maxsize=32)
def quadrature_weights(M: int) -> NDArray[np.float64]:
    """
    Get Clenshaw-Curtis weights on the Lobatto grid.

    The quadrature is exact for polynomials up to degree ``M``.
    """
    w = integrals(M) @ lobatto_inverse(M)
    w.flags.writeable = False
    return w
