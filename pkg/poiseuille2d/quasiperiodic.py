"""
Modulated waves as fixed points of the return map on the first phase section.

The flow is integrated in the frame moving at speed ``c`` until it crosses
``Re ub_{1,1} = s1`` upwards for the ``n_c``-th time. A second section
``Re ub_{N,M/2-1} = s2`` fixes the time phase along the orbit.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg as sla
from scipy import interpolate, optimize

from . import integrator
from .continuation import ArclengthOptions, PseudoArclength
from .exceptions import (
    ConvergenceError,
    CrossingCountError,
    DegenerateStateError,
    HopfGuessError,
    ParameterError,
    SectionCrossingError,
    WindingConvergenceError,
)
from .models import (
    BifurcationEvent,
    ContinuationCurve,
    ContinuationPoint,
    EventKind,
    Formulation,
    ModulatedWave,
    StabilitySpectrum,
    TravellingWave,
)
from .newton import NewtonOptions, finite_difference_jacobian, newton_solve
from .reduced import amplitude_of, jacobian, rhs
from .spectral import build_operators
from .state import SpectralState, align_to_section, state_layout

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from .integrator import IntegratorState
    from .spectral import Discretization, OperatorSet

logger = logging.getLogger(__package__)

#: Slowest section function rate accepted as a transversal crossing.
MIN_CROSSING_SPEED = 1.0e-9

#: Return times are searched up to this multiple of the expected one.
TIME_CAP_FACTOR = 3.0

#: Multipliers with a modulus above ``1 + MULTIPLIER_LEVEL`` are unstable.
MULTIPLIER_LEVEL = 1.0e-8


@dataclass(frozen=True, eq=False)
class Crossing:
    """An upward crossing of the first phase section."""

    t: float  #: Crossing time.
    U: NDArray[np.float64]  #: Interpolated state at the crossing.
    speed: float  #: Rate of change of the section function.


@dataclass(frozen=True, eq=False)
class PoincareReturn:
    """Result of one evaluation of the return map."""

    U: NDArray[np.float64]  #: State at the ``n_c``-th crossing.
    t_c: float  #: Return time.
    crossings: list[float]  #: Times of every crossing up to the return.


def _check_map_inputs(ops: OperatorSet, n_c: int, tau_hint: float) -> None:
    if ops.dt is None:
        msg = 'The return map needs operators built with a time step.'
        raise ParameterError(msg)
    if n_c < 1:
        msg = f'Crossing count must be positive (got n_c={n_c}).'
        raise ParameterError(msg)
    if not tau_hint > 0.0:
        msg = f'Expected return time must be positive (got {tau_hint}).'
        raise ParameterError(msg)


def _refine_crossing(
    ops: OperatorSet,
    before: IntegratorState,
    after: IntegratorState,
    index: int,
    level: float,
    min_speed: float,
) -> Crossing | None:
    """Interpolate a step with cubic Hermite polynomials and locate the crossing in it."""
    slopes = np.stack([rhs(ops, before.U), rhs(ops, after.U)])
    spline = interpolate.CubicHermiteSpline(
        [before.t, after.t],
        np.stack([before.U, after.U]),
        slopes,
        axis=0,
    )

    def section(t: float) -> float:
        return float(spline(t)[index]) - level

    if section(after.t) == 0.0:
        t_c = after.t
    else:
        t_c = float(optimize.brentq(section, before.t, after.t, xtol=1.0e-14, rtol=1.0e-15))
    speed = float(spline.derivative()(t_c)[index])
    if speed <= min_speed:
        logger.debug('Tangential touch of the section at t=%.6f (rate %.2e)', t_c, speed)
        return None
    U = np.asarray(spline(t_c), dtype=np.float64)
    U[index] = level
    return Crossing(t=t_c, U=U, speed=speed)


def section_crossings(
    ops: OperatorSet,
    U: NDArray[np.float64],
    t_cap: float,
    *,
    s1: float = 0.0,
    min_speed: float = MIN_CROSSING_SPEED,
    observe: Callable[[IntegratorState], None] | None = None,
) -> Iterator[Crossing]:
    """
    Integrate from ``U`` and yield every upward transversal crossing of the first section.

    Args:
        ops: operators of the moving frame, with a time step.
        U: initial state, at time zero.
        t_cap: time at which the integration stops.
        s1: level of the first section.
        min_speed: slowest crossing rate accepted.
        observe: called with every integrator state.

    Raises:
        DivergenceError: when the integration blows up.

    """
    index = state_layout(ops.disc, ops.formulation).section1
    if ops.dt is None:
        msg = 'Section crossings need operators built with a time step.'
        raise ParameterError(msg)
    state = integrator.start(U, ops.dt)
    g_prev = state.U[index] - s1
    while state.t < t_cap:
        new = integrator.step(state, ops)
        if observe is not None:
            observe(new)
        g_new = new.U[index] - s1
        if g_prev < 0.0 <= g_new:
            crossing = _refine_crossing(ops, state, new, index, s1, min_speed)
            if crossing is not None:
                yield crossing
        state, g_prev = new, g_new


def poincare_map(
    ops: OperatorSet,
    U: NDArray[np.float64],
    n_c: int,
    tau_hint: float,
    *,
    s1: float = 0.0,
    cap_factor: float = TIME_CAP_FACTOR,
    observe: Callable[[IntegratorState], None] | None = None,
) -> PoincareReturn:
    """
    Apply the return map: integrate until the ``n_c``-th upward crossing of the section.

    Args:
        ops: operators of the frame moving at speed ``c``, with a time step.
        U: state on the first section.
        n_c: number of crossings making one return.
        tau_hint: expected return time.
        s1: level of the first section.
        cap_factor: integration stops at ``cap_factor * tau_hint``.
        observe: called with every integrator state.

    Raises:
        SectionCrossingError: with fewer than ``n_c`` crossings before the time cap.

    Returns:
        The state at the return with its time.

    """
    _check_map_inputs(ops, n_c, tau_hint)
    times: list[float] = []
    t_cap = cap_factor * tau_hint
    for crossing in section_crossings(ops, U, t_cap, s1=s1, observe=observe):
        times.append(crossing.t)
        if len(times) == n_c:
            return PoincareReturn(U=crossing.U, t_c=crossing.t, crossings=times)
    msg = f'Only {len(times)} of {n_c} section crossings before t={t_cap:.6g}.'
    raise SectionCrossingError(msg, crossings=len(times))


def bootstrap_crossing_count(
    ops: OperatorSet,
    U: NDArray[np.float64],
    tau_hint: float,
    *,
    max_crossings: int = 6,
    s1: float = 0.0,
) -> tuple[int, float]:
    """
    Pick the crossing count whose return lands closest to the initial state.

    Args:
        ops: operators of the moving frame, with a time step.
        U: state on the first section.
        tau_hint: time scale of the return; integration stops at three times it.
        max_crossings: number of crossings examined.
        s1: level of the first section.

    Raises:
        SectionCrossingError: when the section is never crossed.

    Returns:
        The crossing count and its return time.

    """
    _check_map_inputs(ops, max_crossings, tau_hint)
    best: tuple[float, int, float] | None = None
    count = 0
    t_cap = TIME_CAP_FACTOR * tau_hint
    for crossing in section_crossings(ops, U, t_cap, s1=s1):
        count += 1
        distance = float(np.abs(crossing.U - U).max())
        logger.debug('Crossing %d at t=%.6f: distance %.3e', count, crossing.t, distance)
        if best is None or distance < best[0]:
            best = (distance, count, crossing.t)
        if count == max_crossings:
            break
    if best is None:
        msg = f'No section crossing before t={t_cap:.6g}.'
        raise SectionCrossingError(msg, crossings=0)
    return best[1], best[2]


def adapt_crossing_count(
    tau_new: float,
    tau_old: float,
    n_c: int,
    eps: float | None = None,
) -> int:
    """
    Adjust the crossing count so that the return time stays continuous.

    With ``delta = tau_old / n_c`` the time between crossings, the count moves by one
    at a time toward ``tau_new / delta`` until ``|n delta - tau_new| < eps``.

    Args:
        tau_new: return time obtained at the new point.
        tau_old: return time at the previous point.
        n_c: current crossing count.
        eps: tolerance, ``0.2 delta`` by default.

    Raises:
        ParameterError: with a non-positive tolerance or return time.
        CrossingCountError: when no count satisfies the tolerance; the step in ``Re``
            should be reduced.

    Returns:
        The adapted crossing count.

    """
    if not (tau_old > 0.0 and n_c >= 1):
        msg = f'Invalid previous return (tau={tau_old}, n_c={n_c}).'
        raise ParameterError(msg)
    delta = tau_old / n_c
    tol = 0.2 * delta if eps is None else eps
    if not tol > 0.0:
        msg = f'Tolerance must be positive (got {tol}).'
        raise ParameterError(msg)

    n = n_c
    direction = 0
    while n >= 1:
        gap = tau_new - n * delta
        if abs(gap) < tol:
            if n != n_c:
                logger.info('Crossing count adapted from %d to %d', n_c, n)
            return n
        move = 1 if gap > 0.0 else -1
        if direction and move != direction:
            break
        direction = move
        n += move
    msg = f'No crossing count matches tau={tau_new:.6g} (previous {tau_old:.6g}, n_c={n_c}).'
    raise CrossingCountError(msg)


def estimate_c0(
    samples: Sequence[tuple[float, complex]],
    alpha: float,
    k: int = 1,
    *,
    winding: bool = False,
    rel_tol: float = 1.0e-4,
) -> float:
    """
    Estimate the speed of the frame from the phase winding of one Fourier coefficient.

    The phase of ``conj(ub_k)`` grows by ``2 pi`` each time the flow travels one
    wavelength of mode ``k``; its mean growth rate gives the frame speed. The estimate
    over the whole record is compared with the one over its first half.

    Args:
        samples: ``(t, ub_k)`` pairs in increasing time.
        alpha: fundamental wavenumber.
        k: Fourier mode of the samples.
        winding: count whole windings only.
        rel_tol: largest relative change between the two estimates.

    Raises:
        ParameterError: with fewer than three samples.
        WindingConvergenceError: when the estimate has not stabilized.

    Returns:
        The estimated speed.

    """
    if len(samples) < 3:
        msg = 'At least three samples are required to estimate a winding rate.'
        raise ParameterError(msg)
    t = np.array([s[0] for s in samples], dtype=np.float64)
    phase = np.unwrap(np.angle(np.conj(np.array([s[1] for s in samples]))))
    phase -= phase[0]
    if winding:
        phase = 2.0 * math.pi * np.floor(phase / (2.0 * math.pi))
    elapsed = t - t[0]

    def estimate(i: int) -> float:
        return float(phase[i] / (k * alpha * elapsed[i]))

    half = int(np.searchsorted(elapsed, 0.5 * elapsed[-1]))
    half = min(max(half, 1), len(t) - 1)
    full, partial = estimate(len(t) - 1), estimate(half)
    change = abs(full - partial) / max(abs(full), np.finfo(np.float64).tiny)
    if change > rel_tol:
        msg = f'Winding rate has not stabilized (relative change {change:.2e}).'
        raise WindingConvergenceError(msg, best=full, residual=change)
    return full


@dataclass
class ModulatedSystem:
    """
    The return-map equations ``P_c(U) - U = 0`` on ``z = (Re, c, U without s1, s2)``.

    The equation of the first section coordinate holds identically and is dropped.
    """

    disc: Discretization
    formulation: Formulation
    dt: float
    n_c: int
    tau_hint: float
    s1: float = 0.0
    s2: float = 0.0
    workers: int | None = None

    @property
    def pinned(self) -> tuple[int, int]:
        """Indices of the coordinates pinned by both sections."""
        layout = state_layout(self.disc, self.formulation)
        return layout.section1, layout.section2

    def pack(self, Re: float, c: float, U: NDArray[np.float64]) -> NDArray[np.float64]:
        """Pack a solution into continuation unknowns."""
        return np.concatenate([[Re, c], np.delete(U, self.pinned)])

    def unpack(self, z: NDArray[np.float64]) -> tuple[float, float, NDArray[np.float64]]:
        """Unpack continuation unknowns into ``(Re, c, U)``."""
        i1, i2 = self.pinned
        U = np.insert(np.asarray(z[2:], dtype=np.float64), i1, self.s1)
        U = np.insert(U, i2, self.s2)
        return float(z[0]), float(z[1]), U

    def operators(self, Re: float, c: float) -> OperatorSet:
        """Build the operators of the moving frame."""
        ops = build_operators(self.disc, Re, c, self.dt, self.formulation)
        ops.cn_factors  # noqa: B018
        return ops

    def returned(self, Re: float, c: float, U: NDArray[np.float64]) -> PoincareReturn:
        """Apply the return map."""
        return poincare_map(self.operators(Re, c), U, self.n_c, self.tau_hint, s1=self.s1)

    def residual(self, z: NDArray[np.float64]) -> NDArray[np.float64]:
        """Evaluate ``P_c(U) - U`` without the first section equation."""
        Re, c, U = self.unpack(z)
        back = self.returned(Re, c, U)
        return np.delete(back.U - U, self.pinned[0])

    def jacobian(self, z: NDArray[np.float64]) -> NDArray[np.float64]:
        """Approximate ``d residual / dz`` with concurrent central differences."""
        return finite_difference_jacobian(self.residual, z, workers=self.workers)

    def scale(self, scaling: tuple[float, float, float]) -> NDArray[np.float64]:
        """Get the per-component scaling of ``z``."""
        size = state_layout(self.disc, self.formulation).size
        out = np.full(size, float(scaling[2]))
        out[0], out[1] = scaling[0], scaling[1]
        return out


def _modulation(
    system: ModulatedSystem,
    Re: float,
    c: float,
    U: NDArray[np.float64],
) -> tuple[PoincareReturn, float]:
    """Apply the return map and measure the amplitude range along the orbit."""
    amplitudes: list[float] = []

    def observe(state: IntegratorState) -> None:
        amplitudes.append(amplitude_of(system.disc, system.formulation, state.U))

    ops = system.operators(Re, c)
    back = poincare_map(ops, U, system.n_c, system.tau_hint, s1=system.s1, observe=observe)
    spread = max(amplitudes) - min(amplitudes) if amplitudes else 0.0
    return back, spread


def make_modulated(
    system: ModulatedSystem,
    Re: float,
    c: float,
    U: NDArray[np.float64],
    *,
    min_modulation: float = 0.0,
) -> ModulatedWave:
    """
    Wrap a converged fixed point, re-evaluating its return.

    Raises:
        DegenerateStateError: when the amplitude hardly changes along the orbit, which
            means the iterate is a travelling wave.

    """
    back, spread = _modulation(system, Re, c, U)
    if spread < min_modulation:
        msg = f'Amplitude varies by {spread:.2e} along the orbit: this is a travelling wave.'
        raise DegenerateStateError(msg)
    return ModulatedWave(
        Re=Re,
        c=c,
        state=SpectralState(disc=system.disc, formulation=system.formulation, data=U),
        tau=back.t_c,
        n_c=system.n_c,
        amplitude=amplitude_of(system.disc, system.formulation, U),
        s1=system.s1,
        s2=system.s2,
        residual=float(np.abs(np.delete(back.U - U, system.pinned[0])).max()),
    )


def solve_modulated(
    disc: Discretization,
    Re: float,
    c: float,
    guess: SpectralState,
    n_c: int,
    tau_hint: float,
    *,
    dt: float,
    s1: float = 0.0,
    s2: float | None = None,
    tol: float = 1.0e-8,
    min_modulation: float = 1.0e-8,
    workers: int | None = None,
    newton: NewtonOptions | None = None,
) -> ModulatedWave:
    """
    Converge a fixed point of the return map at fixed Reynolds number.

    Args:
        disc: discretization.
        Re: Reynolds number.
        c: guess of the frame speed.
        guess: guess of the state, translated onto the first section.
        n_c: crossing count.
        tau_hint: expected return time.
        dt: time step.
        s1: level of the first section.
        s2: level of the second section, taken from the guess by default.
        tol: convergence threshold on the return residual.
        min_modulation: smallest amplitude range along a genuine modulated orbit.
        workers: threads evaluating Jacobian columns.
        newton: Newton settings overriding ``tol``.

    Raises:
        ConvergenceError: when Newton iterations fail.
        SectionCrossingError: when an iterate stops crossing the section.
        DegenerateStateError: when the fixed point is a travelling wave.

    Returns:
        The modulated wave.

    """
    U0, _ = align_to_section(disc, guess.data, s1)
    layout = state_layout(disc, guess.formulation)
    system = ModulatedSystem(
        disc=disc,
        formulation=guess.formulation,
        dt=dt,
        n_c=n_c,
        tau_hint=tau_hint,
        s1=s1,
        s2=float(U0[layout.section2]) if s2 is None else s2,
        workers=workers,
    )
    U0[layout.section2] = system.s2
    z0 = system.pack(Re, c, U0)

    def f(y: NDArray[np.float64]) -> NDArray[np.float64]:
        return system.residual(np.concatenate([[Re], y]))

    def jac(y: NDArray[np.float64]) -> NDArray[np.float64]:
        return system.jacobian(np.concatenate([[Re], y]))[:, 1:]

    options = newton or NewtonOptions(tol=tol, max_iter=20)
    result = newton_solve(f, z0[1:], jacobian=jac, options=options)
    _, c_new, U = system.unpack(np.concatenate([[Re], result.x]))
    wave = make_modulated(system, Re, c_new, U, min_modulation=min_modulation)
    logger.info(
        'Modulated wave at Re=%.4f: c=%.6f, tau=%.4f, n_c=%d (|f|=%.2e)',
        Re,
        wave.c,
        wave.tau,
        wave.n_c,
        wave.residual,
    )
    return wave


def refine_speed(
    ops: OperatorSet,
    U: NDArray[np.float64],
    n_c: int,
    tau_hint: float,
    *,
    width: float = 0.02,
    s1: float = 0.0,
    xatol: float = 1.0e-6,
) -> float:
    """
    Refine the frame speed by minimizing the return residual ``||P_c(U) - U||``.

    Speeds for which the section is not crossed often enough score infinitely badly.

    Args:
        ops: operators providing ``Re`` and the time step; their speed is the initial one.
        U: state on the first section.
        n_c: crossing count.
        tau_hint: expected return time.
        width: half-width of the searched speed interval.
        s1: level of the first section.
        xatol: tolerance on the speed.

    Returns:
        The refined speed.

    """

    def residual(c: float) -> float:
        try:
            back = poincare_map(ops.with_parameters(c=c), U, n_c, tau_hint, s1=s1)
        except SectionCrossingError:
            return math.inf
        return float(np.abs(back.U - U).max())

    result = optimize.minimize_scalar(
        residual,
        bounds=(ops.c - width, ops.c + width),
        method='bounded',
        options={'xatol': xatol},
    )
    logger.debug('Refined speed %.6f -> %.6f (residual %.3e)', ops.c, result.x, result.fun)
    return float(result.x)


@dataclass(frozen=True, eq=False)
class ModulatedGuess:
    """Starting point of a modulated-wave solve near a Hopf bifurcation."""

    Re: float  #: Reynolds number.
    c: float  #: Frame speed.
    state: SpectralState  #: Perturbed travelling wave.
    tau_hint: float  #: Period of the bifurcating oscillation.
    eigenvalue: complex  #: Unstable eigenvalue driving the oscillation.


def _unstable_pair(
    wave: TravellingWave,
) -> tuple[complex, NDArray[np.complex128]] | None:
    ops = build_operators(wave.disc, wave.Re, wave.c, formulation=wave.formulation)
    values, vectors = sla.eig(jacobian(ops, wave.state.data))
    mask = (values.real > 0.0) & (np.abs(values.imag) > 1.0e-8 * np.abs(values))
    if not mask.any():
        return None
    candidates = np.flatnonzero(mask)
    i = int(candidates[np.argmax(values.real[candidates])])
    return complex(values[i]), vectors[:, i]


def hopf_initial_guess(
    waves: Sequence[TravellingWave],
    r: float | None = None,
    *,
    dt: float | None = None,
    width: float = 0.02,
) -> ModulatedGuess:
    """
    Perturb a travelling wave within the plane of its unstable complex eigenvector.

    The first wave with an unstable complex pair is used. The perturbation keeps the
    state on the first section.

    Args:
        waves: travelling waves bracketing the Hopf point.
        r: perturbation size, ``1e-4`` times the state norm by default.
        dt: time step of the return map; when given, the speed of the guess is refined
            by minimizing the return residual over ``c +- width``.
        width: half-width of the searched speed interval.

    Raises:
        HopfGuessError: when no wave has an unstable complex pair.

    Returns:
        The guess, with the expected return time ``2 pi / |Im lambda|``.

    """
    for wave in waves:
        pair = _unstable_pair(wave)
        if pair is None:
            continue
        value, vector = pair
        i1 = state_layout(wave.disc, wave.formulation).section1
        a, b = vector.imag[i1], -vector.real[i1]
        if a == 0.0 and b == 0.0:
            v = vector.real
        else:
            v = a * vector.real + b * vector.imag
        v = v / np.linalg.norm(v)
        U = wave.state.data
        size = 1.0e-4 * float(np.linalg.norm(U)) if r is None else r
        perturbed = U + size * v
        perturbed[i1] = U[i1]
        tau = 2.0 * math.pi / abs(value.imag)
        c = wave.c
        if dt is not None:
            ops = build_operators(wave.disc, wave.Re, c, dt, wave.formulation)
            c = refine_speed(ops, perturbed, 1, tau, width=width, s1=float(U[i1]))
        logger.info(
            'Hopf guess at Re=%.4f: lambda=%s, tau=%.4f, c=%.6f', wave.Re, value, tau, c
        )
        return ModulatedGuess(
            Re=wave.Re,
            c=c,
            state=wave.state.with_data(perturbed),
            tau_hint=tau,
            eigenvalue=value,
        )
    msg = 'No travelling wave with an unstable complex pair of eigenvalues.'
    raise HopfGuessError(msg)


def stability_of_modulated(
    wave: ModulatedWave,
    *,
    dt: float,
    workers: int | None = None,
) -> StabilitySpectrum:
    """
    Compute the multipliers of the linearized return map on the first section.

    The multiplier closest to ``1`` belongs to the direction along the invariant curve
    and is set apart.

    Args:
        wave: converged modulated wave.
        dt: time step used to converge the wave.
        workers: threads evaluating Jacobian columns.

    Returns:
        Multipliers sorted by decreasing modulus.

    """
    system = ModulatedSystem(
        disc=wave.disc,
        formulation=wave.formulation,
        dt=dt,
        n_c=wave.n_c,
        tau_hint=wave.tau,
        s1=wave.s1,
        s2=wave.s2,
    )
    ops = system.operators(wave.Re, wave.c)
    i1 = system.pinned[0]
    U = wave.state.data

    def section_map(x: NDArray[np.float64]) -> NDArray[np.float64]:
        back = poincare_map(ops, np.insert(x, i1, wave.s1), wave.n_c, wave.tau, s1=wave.s1)
        return np.delete(back.U, i1)

    DP = finite_difference_jacobian(section_map, np.delete(U, i1), workers=workers)
    values = sla.eigvals(DP)
    trivial = int(np.argmin(np.abs(values - 1.0)))
    rest = np.delete(values, trivial)
    rest = rest[np.argsort(-np.abs(rest), kind='stable')]
    unstable = int(np.count_nonzero(np.abs(rest) > 1.0 + MULTIPLIER_LEVEL))
    logger.info(
        'Return map at Re=%.4f: spectral radius %.6f, %d unstable',
        wave.Re,
        float(np.abs(rest[0])) if rest.size else 0.0,
        unstable,
    )
    return StabilitySpectrum(
        eigenvalues=rest,
        trivial=complex(values[trivial]),
        unstable_count=unstable,
    )


def _neimark_sacker(
    a: ContinuationPoint,
    b: ContinuationPoint,
    index: int,
) -> BifurcationEvent | None:
    if a.spectrum is None or b.spectrum is None:
        return None
    if a.spectrum.unstable_count == b.spectrum.unstable_count:
        return None
    ra = float(np.abs(a.spectrum.leading))
    rb = float(np.abs(b.spectrum.leading))
    frac = (1.0 - ra) / (rb - ra) if rb != ra else 0.5
    frac = min(max(frac, 0.0), 1.0)
    leading = b.spectrum.leading if rb > ra else a.spectrum.leading
    kind = EventKind.NEIMARK_SACKER
    if abs(leading.imag) <= 1.0e-6:
        kind = EventKind.REAL_CROSSING
    Re = a.Re + frac * (b.Re - a.Re)
    logger.warning('%s near Re=%.4f located by interpolation only', kind.value, Re)
    return BifurcationEvent(
        kind=kind,
        Re=Re,
        c=a.c + frac * (b.c - a.c),
        amplitude=a.amplitude + frac * (b.amplitude - a.amplitude),
        index=index,
        eigenvalue=leading,
        tau=None if a.tau is None or b.tau is None else a.tau + frac * (b.tau - a.tau),
        approximate=True,
    )


def continue_modulated(
    start: ModulatedWave,
    re_range: tuple[float, float],
    *,
    dt: float,
    direction: float = 1.0,
    scaling: tuple[float, float, float] = (1.0e-3, 1.0, 1.0),
    eps_factor: float = 0.2,
    stability: bool = False,
    options: ArclengthOptions | None = None,
    workers: int | None = None,
) -> ContinuationCurve:
    """
    Follow a branch of modulated waves in the Reynolds number.

    After every step the new return time is checked against the previous one; when the
    crossing count must change, the step is redone with the adapted count.

    Args:
        start: converged modulated wave.
        re_range: the curve stops once it leaves this range.
        dt: time step.
        direction: initial sign of the change in ``Re``.
        scaling: scaling of ``(Re, c, U)`` in arclength coordinates.
        eps_factor: return-time tolerance as a fraction of the time between crossings.
        stability: compute multipliers and locate their crossings of the unit circle.
        options: step-size control, refreshing the Jacobian every 5 steps by default.
        workers: threads evaluating Jacobian columns.

    Returns:
        The branch, with return times and crossing counts on every point.

    """
    opts = options or ArclengthOptions(refresh_every=5)
    system = ModulatedSystem(
        disc=start.disc,
        formulation=start.formulation,
        dt=dt,
        n_c=start.n_c,
        tau_hint=start.tau,
        s1=start.s1,
        s2=start.s2,
        workers=workers,
    )
    tracker = PseudoArclength(
        system.residual,
        system.pack(start.Re, start.c, start.state.data),
        system.scale(scaling),
        jacobian=system.jacobian,
        direction=direction,
        options=opts,
        workers=workers,
        recoverable=(ConvergenceError, SectionCrossingError),
    )
    curve = ContinuationCurve(disc=start.disc, formulation=start.formulation, scaling=scaling)
    spectrum = start.multipliers
    if stability and spectrum is None:
        spectrum = stability_of_modulated(start, dt=dt, workers=workers)
    curve.points.append(
        ContinuationPoint(
            Re=start.Re,
            c=start.c,
            amplitude=start.amplitude,
            state=start.state,
            tangent=tracker.tangent,
            ds=0.0,
            iterations=0,
            tau=start.tau,
            n_c=start.n_c,
            spectrum=spectrum,
        )
    )

    lo, hi = re_range
    tau_old = start.tau
    while tracker.count < opts.max_steps:
        step = tracker.advance()
        if step is None:
            curve.truncated = True
            curve.message = tracker.message
            break
        Re, c, U = system.unpack(step.z)
        try:
            wave = make_modulated(system, Re, c, U)
            n_new = adapt_crossing_count(
                wave.tau,
                tau_old,
                system.n_c,
                eps_factor * tau_old / system.n_c,
            )
        except (CrossingCountError, SectionCrossingError) as exc:
            logger.warning('Rejecting step at Re=%.4f: %s', Re, exc)
            if not tracker.reject_last():
                curve.truncated = True
                curve.message = f'{tracker.message}: {exc}'
                break
            continue
        if n_new != system.n_c:
            tau_old = tau_old * n_new / system.n_c
            system.n_c = n_new
            system.tau_hint = tau_old
            if not tracker.reject_last(shrink=False):
                curve.truncated = True
                curve.message = f'{tracker.message} after changing the crossing count'
                break
            continue

        system.tau_hint = wave.tau
        tau_old = wave.tau
        if stability:
            wave = dataclasses.replace(
                wave, multipliers=stability_of_modulated(wave, dt=dt, workers=workers)
            )
        point = ContinuationPoint(
            Re=Re,
            c=c,
            amplitude=wave.amplitude,
            state=wave.state,
            tangent=step.tangent,
            ds=step.ds,
            iterations=step.iterations,
            tau=wave.tau,
            n_c=wave.n_c,
            spectrum=wave.multipliers,
        )
        index = len(curve.points)
        event = _neimark_sacker(curve.points[-1], point, index)
        if event is not None:
            curve.events.append(event)
        curve.points.append(point)
        logger.info(
            'Point %d: Re=%.4f, c=%.6f, tau=%.4f, n_c=%d',
            index,
            Re,
            c,
            wave.tau,
            wave.n_c,
        )
        if not lo <= Re <= hi:
            curve.message = f'Left the Reynolds range at Re={Re:.4f}.'
            break
    return curve


@dataclass(frozen=True, eq=False)
class TorusSection:
    """Two state coordinates sampled along a trajectory."""

    #: Coordinates recorded.
    indices: tuple[int, int]

    #: ``(t, x_i, x_j)`` at every sampled step.
    trajectory: NDArray[np.float64]

    #: ``(t, x_i, x_j)`` at the first-section crossings kept by the filter.
    section: NDArray[np.float64]


def record_torus_section(
    ops: OperatorSet,
    U: NDArray[np.float64],
    t_end: float,
    indices: tuple[int, int],
    *,
    s1: float = 0.0,
    s2: float | None = None,
    s2_tol: float = 1.0e-3,
    every: int = 1,
) -> TorusSection:
    """
    Sample two coordinates along a trajectory and at its first-section crossings.

    With ``s2`` set, only crossings lying within ``s2_tol`` of the second section are kept,
    which reveals an extra frequency when the section points fill a curve.

    Args:
        ops: operators of the moving frame, with a time step.
        U: initial state.
        t_end: integration time.
        indices: the two recorded coordinates.
        s1: level of the first section.
        s2: level of the second section filter.
        s2_tol: tolerance of the second section filter.
        every: sample the trajectory every this many steps.

    Returns:
        The recorded samples.

    """
    layout = state_layout(ops.disc, ops.formulation)
    i, j = indices
    for index in indices:
        if not 0 <= index < layout.size:
            msg = f'Coordinate {index} is out of range 0..{layout.size - 1}.'
            raise ParameterError(msg)
    trajectory: list[tuple[float, float, float]] = [(0.0, float(U[i]), float(U[j]))]
    count = [0]

    def observe(state: IntegratorState) -> None:
        count[0] += 1
        if count[0] % every == 0:
            trajectory.append((state.t, float(state.U[i]), float(state.U[j])))

    section: list[tuple[float, float, float]] = []
    for crossing in section_crossings(ops, U, t_end, s1=s1, observe=observe):
        if s2 is not None and abs(crossing.U[layout.section2] - s2) > s2_tol:
            continue
        section.append((crossing.t, float(crossing.U[i]), float(crossing.U[j])))
    return TorusSection(
        indices=(i, j),
        trajectory=np.array(trajectory, dtype=np.float64).reshape(-1, 3),
        section=np.array(section, dtype=np.float64).reshape(-1, 3),
    )
