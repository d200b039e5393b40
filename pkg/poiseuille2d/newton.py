"""
Damped Newton iterations with Broyden updates of a QR-factorized Jacobian.

Jacobians are either provided by the caller or approximated by central finite
differences, with columns evaluated concurrently.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TYPE_CHECKING, TypeAlias

import numpy as np
import scipy.linalg as sla

from .exceptions import ConvergenceError, NewtonDivergenceError, ParameterError

if TYPE_CHECKING:
    from numpy.typing import NDArray

logger = logging.getLogger(__package__)

ResidualFn: TypeAlias = Callable[['NDArray[np.float64]'], 'NDArray[np.float64]']
JacobianFn: TypeAlias = Callable[['NDArray[np.float64]'], 'NDArray[np.float64]']

#: Relative finite-difference step.
FD_STEP = 1.0e-5

#: Ratio under which the triangular factor is considered singular.
SINGULAR_RCOND = 1.0e-14


class BroydenJacobian:
    """
    A Jacobian kept as ``Q R`` and updated in place with rank-one corrections.

    Each update ``J += (df - J dx) dx^T / (dx^T dx)`` only costs a QR update.
    """

    def __init__(self, matrix: NDArray[np.float64]) -> None:
        """
        Factorize the initial Jacobian.

        Args:
            matrix: square Jacobian.

        Raises:
            ParameterError: when the matrix is not square.

        """
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            msg = f'Jacobian must be a square matrix (got shape {matrix.shape}).'
            raise ParameterError(msg)
        self.Q, self.R = sla.qr(matrix)
        self.updates = 0

    @property
    def matrix(self) -> NDArray[np.float64]:
        """Current Jacobian approximation."""
        return np.asarray(self.Q @ self.R)

    @property
    def rcond(self) -> float:
        """Ratio between the smallest and largest diagonal entries of ``R``."""
        diag = np.abs(np.diag(self.R))
        top = float(diag.max())
        return float(diag.min()) / top if top > 0.0 else 0.0

    def solve(self, b: NDArray[np.float64]) -> NDArray[np.float64]:
        """
        Solve ``J x = b``.

        Raises:
            ConvergenceError: when the factor is numerically singular.

        """
        if self.rcond < SINGULAR_RCOND:
            msg = f'Jacobian is numerically singular (rcond={self.rcond:.2e}).'
            raise ConvergenceError(msg)
        return np.asarray(sla.solve_triangular(self.R, self.Q.T @ b, check_finite=False))

    def update(self, dx: NDArray[np.float64], df: NDArray[np.float64]) -> None:
        """Apply the secant correction for a step ``dx`` changing ``f`` by ``df``."""
        norm2 = float(dx @ dx)
        if norm2 == 0.0:
            return
        u = (df - self.Q @ (self.R @ dx)) / norm2
        self.Q, self.R = sla.qr_update(self.Q, self.R, u, dx, check_finite=False)
        self.updates += 1


def finite_difference_jacobian(
    f: ResidualFn,
    x: NDArray[np.float64],
    *,
    step: float = FD_STEP,
    richardson: bool = False,
    workers: int | None = None,
    columns: NDArray[np.intp] | None = None,
) -> NDArray[np.float64]:
    """
    Approximate a Jacobian by central differences.

    Each column only depends on its own perturbation, so the result does not depend on
    the number of workers.

    Args:
        f: residual function.
        x: linearization point.
        step: relative perturbation size.
        richardson: combine steps ``h`` and ``h/2`` to cancel the ``h^2`` error.
        workers: number of threads, serial evaluation for ``1``.
        columns: subset of columns to evaluate, all of them by default.

    Returns:
        The Jacobian, shaped ``(len(f(x)), len(columns))``.

    """
    x = np.asarray(x, dtype=np.float64)
    index = np.arange(x.size) if columns is None else np.asarray(columns)

    def central(j: int, h: float) -> NDArray[np.float64]:
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        return (np.asarray(f(xp)) - np.asarray(f(xm))) / (2.0 * h)

    def column(j: int) -> NDArray[np.float64]:
        h = step * max(1.0, abs(float(x[j])))
        d = central(j, h)
        if richardson:
            d = (4.0 * central(j, 0.5 * h) - d) / 3.0
        return d

    if workers == 1:
        cols = [column(int(j)) for j in index]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cols = list(pool.map(column, (int(j) for j in index)))
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class NewtonOptions:
    """Tuning of :func:`newton_solve`."""

    #: Convergence threshold on the max-norm of the residual.
    tol: float = 1.0e-10

    #: Iteration cap.
    max_iter: int = 30

    #: Number of step halvings tried when the residual grows.
    max_halvings: int = 4

    #: Number of consecutive iterations with a growing residual before giving up.
    max_growth: int = 3

    #: Use Broyden updates between Jacobian evaluations.
    broyden: bool = True

    #: Re-evaluate the Jacobian after this many Broyden updates.
    refresh_every: int = 10


@dataclass(frozen=True, eq=False)
class NewtonResult:
    """Outcome of :func:`newton_solve`."""

    x: NDArray[np.float64]  #: Solution.
    residual: float  #: Max-norm of the residual at the solution.
    iterations: int  #: Number of Newton steps.
    jacobian_evaluations: int  #: Number of Jacobian evaluations.
    jacobian: BroydenJacobian  #: Factorized Jacobian, up to date with the last step.


def _max_norm(v: NDArray[np.float64]) -> float:
    return float(np.abs(v).max()) if v.size else 0.0


def newton_solve(
    f: ResidualFn,
    x0: NDArray[np.float64],
    *,
    jacobian: JacobianFn | None = None,
    factor: BroydenJacobian | None = None,
    options: NewtonOptions | None = None,
) -> NewtonResult:
    """
    Solve ``f(x) = 0`` with damped Newton steps.

    A step that does not decrease the residual is halved up to
    :attr:`NewtonOptions.max_halvings` times; the last trial is accepted anyway and
    counts as a growth. The Jacobian is re-evaluated after a growth and every
    :attr:`NewtonOptions.refresh_every` Broyden updates.

    Args:
        f: residual function.
        x0: initial guess.
        jacobian: Jacobian function, finite differences of ``f`` by default.
        factor: a factorized Jacobian to start with instead of evaluating one.
        options: tuning of the iterations.

    Raises:
        NewtonDivergenceError: after too many growths or on non-finite residuals.
        ConvergenceError: when the iteration cap is reached.

    Returns:
        The solution with its final factorized Jacobian.

    """
    opts = options or NewtonOptions()
    jac: JacobianFn = jacobian or (lambda x: finite_difference_jacobian(f, x))

    x = np.array(x0, dtype=np.float64)
    fx = np.asarray(f(x), dtype=np.float64)
    norm = _max_norm(fx)
    if not math.isfinite(norm):
        msg = 'Residual is not finite at the initial guess.'
        raise NewtonDivergenceError(msg, best=x, residual=norm)

    evaluations = 0
    if factor is None:
        factor = BroydenJacobian(jac(x))
        evaluations += 1
    best_x, best_norm = x, norm
    growth = 0
    stale = 0

    for iteration in range(opts.max_iter + 1):
        logger.debug('Newton iteration %d: |f| = %.3e', iteration, norm)
        if norm <= opts.tol:
            return NewtonResult(
                x=x,
                residual=norm,
                iterations=iteration,
                jacobian_evaluations=evaluations,
                jacobian=factor,
            )
        if iteration == opts.max_iter:
            break

        dx = -factor.solve(fx)
        scale = 1.0
        for _ in range(opts.max_halvings + 1):
            x_new = x + scale * dx
            f_new = np.asarray(f(x_new), dtype=np.float64)
            norm_new = _max_norm(f_new)
            if math.isfinite(norm_new) and norm_new < norm:
                break
            scale *= 0.5
        if not math.isfinite(norm_new):
            msg = f'Residual became non-finite at iteration {iteration + 1}.'
            raise NewtonDivergenceError(msg, best=best_x, residual=best_norm)

        grew = norm_new >= norm
        if grew:
            growth += 1
            logger.debug('Residual grew to %.3e (%d/%d)', norm_new, growth, opts.max_growth)
            if growth >= opts.max_growth:
                msg = f'Residual grew {growth} times, last at {norm_new:.3e}.'
                raise NewtonDivergenceError(msg, best=best_x, residual=best_norm)
        else:
            growth = 0

        if opts.broyden and not grew and stale < opts.refresh_every:
            factor.update(x_new - x, f_new - fx)
            stale += 1
        else:
            factor = BroydenJacobian(jac(x_new))
            evaluations += 1
            stale = 0

        x, fx, norm = x_new, f_new, norm_new
        if norm < best_norm:
            best_x, best_norm = x, norm

    msg = f'Newton iterations did not converge (|f| = {norm:.3e} after {opts.max_iter}).'
    raise ConvergenceError(msg, best=best_x, residual=best_norm)
