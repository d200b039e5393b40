"""Crank-Nicolson / Adams-Bashforth time stepping of the reduced system."""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Protocol

import numpy as np
import scipy.linalg as sla

from .exceptions import DivergenceError, ParameterError
from .reduced import amplitude_of, linear_part, nonlinear_part
from .state import state_layout

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import NDArray

    from .spectral import OperatorSet

logger = logging.getLogger(__package__)


@dataclass(frozen=True, eq=False)
class IntegratorState:
    """Everything needed to continue a time integration."""

    #: Current state vector.
    U: NDArray[np.float64]

    #: Time step.
    dt: float

    #: Current time.
    t: float = 0.0

    #: Number of steps performed so far.
    step_count: int = 0

    #: Nonlinear part at the previous step, :obj:`None` before the first step.
    nl_prev: NDArray[np.float64] | None = None


class Observer(Protocol):
    """Callback invoked after every accepted time step."""

    #: Records accumulated by the observer.
    records: list[Any]

    def observe(
        self,
        previous: IntegratorState,
        current: IntegratorState,
        ops: OperatorSet,
    ) -> None:
        """Look at the step from ``previous`` to ``current``."""


@dataclass
class AmplitudeObserver:
    """Record ``(t, amplitude)`` every :attr:`every` steps."""

    every: int = 1
    records: list[tuple[float, float]] = field(default_factory=list)

    def observe(
        self,
        previous: IntegratorState,
        current: IntegratorState,
        ops: OperatorSet,
    ) -> None:
        """Record the amplitude of the current state."""
        if current.step_count % self.every == 0:
            amplitude = amplitude_of(ops.disc, ops.formulation, current.U)
            self.records.append((current.t, amplitude))


@dataclass
class ModeObserver:
    """Record ``(t, ub_{k,m})`` for one mode ``k`` at the wall-normal node ``m``."""

    k: int = 1
    #: Interior node (1-based, defaults to the centreline ``M/2``).
    node: int | None = None
    every: int = 1
    records: list[tuple[float, complex]] = field(default_factory=list)

    def observe(
        self,
        previous: IntegratorState,
        current: IntegratorState,
        ops: OperatorSet,
    ) -> None:
        """Record the coefficient of the observed mode."""
        if current.step_count % self.every:
            return
        layout = state_layout(ops.disc, ops.formulation)
        node = self.node if self.node is not None else ops.disc.M // 2
        i = layout.mode_start(self.k) + node - 1
        value = complex(current.U[i], current.U[i + layout.mode_size])
        self.records.append((current.t, value))


@dataclass(frozen=True, eq=False)
class IntegrationResult:
    """Final state of :func:`integrate` with the records of its observers."""

    state: IntegratorState
    records: list[list[Any]]


def start(U: NDArray[np.float64], dt: float, t: float = 0.0) -> IntegratorState:
    """Build the initial state of a time integration."""
    return IntegratorState(U=np.array(U, dtype=np.float64), dt=float(dt), t=float(t))


def _solve_blocks(ops: OperatorSet, rhs: NDArray[np.float64]) -> NDArray[np.float64]:
    layout = state_layout(ops.disc, ops.formulation)
    x0, ub = layout.split(rhs)
    f0, *fk = ops.cn_factors
    x0 = sla.lu_solve(f0, x0, check_finite=False)
    ub = np.stack([sla.lu_solve(f, ub[i], check_finite=False) for i, f in enumerate(fk)])
    return layout.join(x0, ub)


def step(state: IntegratorState, ops: OperatorSet) -> IntegratorState:
    """
    Advance one time step.

    The linear part is treated with Crank-Nicolson and the nonlinear part with second-order
    Adams-Bashforth; the very first step uses the current nonlinear part twice.

    Args:
        state: current integrator state.
        ops: operators built with the same time step.

    Raises:
        DivergenceError: when the new state holds non-finite values.
        ParameterError: when the time steps of ``state`` and ``ops`` differ.

    Returns:
        The advanced state.

    """
    if ops.dt is None or not math.isclose(ops.dt, state.dt, rel_tol=1e-14):
        msg = f'Operators were built for dt={ops.dt}, state uses dt={state.dt}.'
        raise ParameterError(msg)

    U = state.U
    dt = state.dt
    nl = nonlinear_part(ops, U)
    nl_prev = nl if state.nl_prev is None else state.nl_prev
    explicit = U + 0.5 * dt * linear_part(ops, U) + 0.5 * dt * (3.0 * nl - nl_prev)
    U_new = _solve_blocks(ops, explicit)

    t_new = state.t + dt
    count = state.step_count + 1
    if not np.all(np.isfinite(U_new)):
        msg = f'Time integration diverged at t={t_new:.6g} (step {count}).'
        raise DivergenceError(msg, time=t_new, step=count)
    return IntegratorState(U=U_new, dt=dt, t=t_new, step_count=count, nl_prev=nl)


def integrate(
    state: IntegratorState,
    ops: OperatorSet,
    t_end: float,
    observers: Sequence[Observer] = (),
) -> IntegrationResult:
    """
    Advance with a fixed time step until ``t_end`` is reached.

    The number of steps is the smallest one reaching ``t_end``, so the final time may
    overshoot by less than one step.

    Args:
        state: initial integrator state.
        ops: operators built with the time step of ``state``.
        t_end: final time.
        observers: callbacks invoked after every step.

    Raises:
        DivergenceError: when the integration blows up.

    Returns:
        The final state and the records of every observer.

    """
    steps = max(0, math.ceil((t_end - state.t) / state.dt - 1e-9))
    logger.debug('Integrating %d steps from t=%.6g with dt=%g', steps, state.t, state.dt)
    for _ in range(steps):
        new = step(state, ops)
        for observer in observers:
            observer.observe(state, new, ops)
        state = new
    return IntegrationResult(state=state, records=[obs.records for obs in observers])


def restart(state: IntegratorState) -> IntegratorState:
    """Drop the stored nonlinear history, so the next step restarts the multistep scheme."""
    return dataclasses.replace(state, nl_prev=None)
