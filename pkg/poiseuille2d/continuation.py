"""
Pseudo-arclength continuation of ``F(z) = 0`` where ``z = (p, x)`` starts with the parameter.

Arclength is measured in scaled coordinates ``w = scale * z``, so that parameters of very
different magnitudes contribute comparably to the step.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg as sla
from scipy import interpolate, optimize

from .exceptions import ConvergenceError, ParameterError
from .models import ResumeState
from .newton import (
    BroydenJacobian,
    NewtonOptions,
    finite_difference_jacobian,
    newton_solve,
)

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from .newton import JacobianFn, ResidualFn

logger = logging.getLogger(__package__)


@dataclass(frozen=True)
class ArclengthOptions:
    """Step-size control of :class:`PseudoArclength`."""

    #: Initial arclength step.
    ds: float = 1.0

    #: Smallest step before the curve is given up.
    ds_min: float = 1.0e-4

    #: Largest step.
    ds_max: float = 16.0

    #: The step doubles after a corrector needing at most this many iterations.
    fast_iterations: int = 3

    #: Re-evaluate the Jacobian every this many accepted steps.
    refresh_every: int = 25

    #: Number of accepted steps.
    max_steps: int = 100

    #: Consecutive rejections of accepted steps before the curve is given up.
    max_rejections: int = 8

    #: Corrector iterations.
    newton: NewtonOptions = field(default_factory=lambda: NewtonOptions(max_iter=8))

    def __post_init__(self) -> None:
        """Check the step bounds."""
        if not 0.0 < self.ds_min <= self.ds <= self.ds_max:
            msg = f'Steps must satisfy 0 < ds_min <= ds <= ds_max (got {self}).'
            raise ParameterError(msg)


@dataclass(frozen=True, eq=False)
class ArclengthStep:
    """An accepted continuation step."""

    z: NDArray[np.float64]  #: Solution ``(p, x)``.
    tangent: NDArray[np.float64]  #: Unit tangent in scaled coordinates.
    ds: float  #: Arclength step that produced the solution.
    iterations: int  #: Corrector iterations.
    index: int  #: Number of accepted steps so far.


@dataclass
class _Cursor:
    w: NDArray[np.float64]
    tangent: NDArray[np.float64]
    jacobian: NDArray[np.float64] | None
    ds: float
    age: int


class PseudoArclength:
    """
    Follow a solution curve by tangent predictors and orthogonal correctors.

    Iterating over the object yields accepted steps. A failing corrector halves the
    step; the iteration stops, marking the curve :attr:`truncated`, once the step falls
    under :attr:`ArclengthOptions.ds_min`. The Jacobian is carried between steps with
    Broyden updates and refreshed periodically.
    """

    def __init__(
        self,
        residual: ResidualFn,
        z0: NDArray[np.float64],
        scale: NDArray[np.float64],
        *,
        jacobian: JacobianFn | None = None,
        direction: float = 1.0,
        tangent: NDArray[np.float64] | None = None,
        options: ArclengthOptions | None = None,
        workers: int | None = None,
        recoverable: tuple[type[Exception], ...] = (ConvergenceError,),
        jacobian0: NDArray[np.float64] | None = None,
        age: int = 0,
    ) -> None:
        """
        Set the continuation up from a converged point.

        Args:
            residual: ``F(z)`` with one equation less than unknowns.
            z0: converged starting point.
            scale: per-component scaling of ``z``.
            jacobian: ``dF/dz``, finite differences of ``residual`` by default.
            direction: initial sign of the parameter change.
            tangent: initial tangent in scaled coordinates, computed by default.
            options: step-size control.
            workers: threads used by finite-difference Jacobians.
            recoverable: corrector errors answered by halving the step.
            jacobian0: scaled Jacobian carried over from an interrupted run.
            age: accepted steps since the carried Jacobian was evaluated.

        """
        self.options = options or ArclengthOptions()
        self.scale = np.asarray(scale, dtype=np.float64)
        self._residual = residual
        self._jacobian = jacobian
        self._workers = workers
        self._recoverable = recoverable
        self.truncated = False
        self.message = ''
        self.count = 0
        self.rejections = 0
        self._last_ds = self.options.ds

        w0 = self.scale * np.asarray(z0, dtype=np.float64)
        J = self.scaled_jacobian(w0) if jacobian0 is None else np.asarray(jacobian0)
        if tangent is None:
            seed = np.zeros_like(w0)
            seed[0] = 1.0
            tangent = self._tangent(J, seed)
            if tangent[0] * direction < 0.0:
                tangent = -tangent
        tangent = np.asarray(tangent, dtype=np.float64) / np.linalg.norm(tangent)
        self._cursor = _Cursor(w=w0, tangent=tangent, jacobian=J, ds=self.options.ds, age=age)
        self._previous: _Cursor | None = None

    def unscale(self, w: NDArray[np.float64]) -> NDArray[np.float64]:
        """Map scaled coordinates back to ``z``."""
        return w / self.scale

    def scaled_residual(self, w: NDArray[np.float64]) -> NDArray[np.float64]:
        """Evaluate ``F`` at scaled coordinates."""
        return np.asarray(self._residual(self.unscale(w)), dtype=np.float64)

    def scaled_jacobian(self, w: NDArray[np.float64]) -> NDArray[np.float64]:
        """Evaluate ``dF/dw``."""
        z = self.unscale(w)
        if self._jacobian is not None:
            J = np.asarray(self._jacobian(z), dtype=np.float64)
        else:
            J = finite_difference_jacobian(self._residual, z, workers=self._workers)
        return J / self.scale[np.newaxis, :]

    @staticmethod
    def _tangent(J: NDArray[np.float64], previous: NDArray[np.float64]) -> NDArray[np.float64]:
        rhs = np.zeros(J.shape[1])
        rhs[-1] = 1.0
        t = sla.solve(np.vstack([J, previous]), rhs)
        return np.asarray(t / np.linalg.norm(t))

    @property
    def z(self) -> NDArray[np.float64]:
        """Current point."""
        return self.unscale(self._cursor.w)

    @property
    def tangent(self) -> NDArray[np.float64]:
        """Current unit tangent in scaled coordinates."""
        return self._cursor.tangent

    @property
    def ds(self) -> float:
        """Next arclength step."""
        return self._cursor.ds

    def resume_state(self) -> ResumeState:
        """Get what is needed to compute the next step in another process."""
        cursor = self._cursor
        return ResumeState(ds=cursor.ds, age=cursor.age, jacobian=cursor.jacobian)

    def correct(
        self,
        w_base: NDArray[np.float64],
        tangent: NDArray[np.float64],
        ds: float,
        jacobian: NDArray[np.float64] | None = None,
    ) -> tuple[NDArray[np.float64], int, BroydenJacobian]:
        """
        Predict ``w_base + ds * tangent`` and correct on the hyperplane orthogonal to it.

        Args:
            w_base: scaled point the step starts from.
            tangent: unit tangent at ``w_base``.
            ds: arclength step.
            jacobian: Jacobian to start the corrector with, evaluated by default.

        Raises:
            ConvergenceError: when the corrector fails.

        Returns:
            The corrected scaled point, the iteration count and the bordered Jacobian.

        """
        w_pred = w_base + ds * tangent

        def bordered(w: NDArray[np.float64]) -> NDArray[np.float64]:
            return np.concatenate([self.scaled_residual(w), [tangent @ (w - w_pred)]])

        def bordered_jacobian(w: NDArray[np.float64]) -> NDArray[np.float64]:
            return np.vstack([self.scaled_jacobian(w), tangent])

        J = self.scaled_jacobian(w_pred) if jacobian is None else jacobian
        result = newton_solve(
            bordered,
            w_pred,
            jacobian=bordered_jacobian,
            factor=BroydenJacobian(np.vstack([J, tangent])),
            options=self.options.newton,
        )
        return result.x, result.iterations, result.jacobian

    def advance(self) -> ArclengthStep | None:
        """
        Perform one continuation step.

        Returns:
            The accepted step, or :obj:`None` when the step fell under its floor.

        """
        opts = self.options
        cursor = self._cursor
        if self._previous is not None:
            self.rejections = 0
        ds = cursor.ds
        jacobian = cursor.jacobian
        while True:
            try:
                w, iterations, factor = self.correct(cursor.w, cursor.tangent, ds, jacobian)
            except self._recoverable as exc:
                ds *= 0.5
                jacobian = None
                logger.debug('Corrector failed (%s), step halved to %.3e', exc, ds)
                if ds < opts.ds_min:
                    self.truncated = True
                    self.message = (
                        f'Step fell under {opts.ds_min:g} after {self.count} points: {exc}'
                    )
                    logger.warning('Continuation stopped: %s', self.message)
                    return None
                continue
            break

        age = cursor.age + 1
        if age >= opts.refresh_every:
            J = self.scaled_jacobian(w)
            age = 0
        else:
            J = factor.matrix[:-1]
        tangent = self._tangent(J, cursor.tangent)
        if tangent @ cursor.tangent < 0.0:
            tangent = -tangent

        next_ds = min(2.0 * ds, opts.ds_max) if iterations <= opts.fast_iterations else ds
        self._previous = cursor
        self._last_ds = ds
        self._cursor = _Cursor(w=w, tangent=tangent, jacobian=J, ds=next_ds, age=age)
        self.count += 1
        return ArclengthStep(
            z=self.unscale(w),
            tangent=tangent,
            ds=ds,
            iterations=iterations,
            index=self.count,
        )

    def reject_last(self, *, shrink: bool = True) -> bool:
        """
        Drop the last accepted step and go back to the previous point.

        Args:
            shrink: retry with a quarter of the rejected step instead of the same step.

        Raises:
            ParameterError: when there is no step to reject.

        Returns:
            Whether the step can be retried. When it cannot, because the retry would fall
            under the smallest step or too many steps were rejected in a row, the curve is
            marked as truncated.

        """
        if self._previous is None:
            msg = 'No accepted step to reject.'
            raise ParameterError(msg)
        opts = self.options
        previous = self._previous
        retry = 0.25 * self._last_ds if shrink else self._last_ds
        self._cursor = _Cursor(
            w=previous.w,
            tangent=previous.tangent,
            jacobian=previous.jacobian,
            ds=max(retry, opts.ds_min),
            age=previous.age,
        )
        self._previous = None
        self.count -= 1
        self.rejections += 1

        if retry < opts.ds_min:
            self.message = f'Rejected step cannot shrink under {opts.ds_min:g}'
        elif self.rejections > opts.max_rejections:
            self.message = f'{self.rejections} steps rejected in a row'
        else:
            return True
        self.truncated = True
        logger.warning('Continuation stopped after %d points: %s', self.count, self.message)
        return False

    def __iter__(self) -> Iterator[ArclengthStep]:
        """Yield accepted steps until the step cap is reached or the step underflows."""
        while self.count < self.options.max_steps:
            step = self.advance()
            if step is None:
                return
            yield step


def hermite_extremum(
    p0: float,
    p1: float,
    dp0: float,
    dp1: float,
    ds: float,
) -> tuple[float, float]:
    """
    Locate the turning point of the parameter between two curve points.

    The parameter is interpolated as a cubic Hermite polynomial of the arclength using the
    values and arclength derivatives at both ends.

    Args:
        p0: parameter at the first point.
        p1: parameter at the second point.
        dp0: ``dp/ds`` at the first point.
        dp1: ``dp/ds`` at the second point, of opposite sign.
        ds: arclength between the points.

    Raises:
        ParameterError: when the derivatives do not change sign.

    Returns:
        The fraction of ``ds`` at the turning point and the extremal parameter.

    """
    if dp0 * dp1 > 0.0:
        msg = f'No turning point between slopes {dp0} and {dp1}.'
        raise ParameterError(msg)
    spline = interpolate.CubicHermiteSpline([0.0, 1.0], [p0, p1], [dp0 * ds, dp1 * ds])
    sign = -1.0 if dp0 > 0.0 else 1.0
    result = optimize.minimize_scalar(
        lambda theta: sign * float(spline(theta)),
        bounds=(0.0, 1.0),
        method='bounded',
        options={'xatol': 1.0e-10},
    )
    theta = float(result.x)
    return theta, float(spline(theta))


def fold_candidates(
    steps: list[ArclengthStep],
) -> Iterator[tuple[ArclengthStep, ArclengthStep]]:
    """Yield consecutive steps whose tangents disagree on the sign of the parameter change."""
    for a, b in zip(steps, steps[1:]):
        if a.tangent[0] * b.tangent[0] < 0.0:
            yield a, b
