"""
Travelling waves: steady solutions in a frame moving at the phase speed ``c``.

A wave solves ``rhs(Re, c, U) = 0`` with ``U`` pinned on the first phase section
``Re ub_{1,1} = s1``. The pinned coordinate is removed from the unknowns and replaced by
``c``, which keeps the system square.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg as sla
from scipy import optimize

from . import integrator
from .continuation import ArclengthOptions, PseudoArclength, hermite_extremum
from .exceptions import (
    ConvergenceError,
    DegenerateStateError,
    LaminarDecayError,
    ParameterError,
)
from .models import (
    BifurcationEvent,
    ContinuationCurve,
    ContinuationPoint,
    ConversionDirection,
    CurveMinimum,
    EventKind,
    Formulation,
    StabilitySpectrum,
    TravellingWave,
)
from .newton import FD_STEP, NewtonOptions, finite_difference_jacobian, newton_solve
from .reduced import (
    amplitude_of,
    convert_formulation,
    jacobian,
    laminar_mode,
    residual_norm,
    rhs,
    translation_part,
    viscous_part,
)
from .spectral import build_operators
from .state import SpectralState, align_to_section, laminar_vector, state_layout

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from .models import ResumeState
    from .spectral import Discretization, OperatorSet
    from .state import StateLayout

logger = logging.getLogger(__package__)

#: Scaling of ``(Re, c, U)`` in arclength coordinates.
DEFAULT_SCALING = (1.0e-3, 1.0, 1.0)

#: Modes ``k >= 1`` all below this level make the phase speed unidentifiable.
DEGENERATE_LEVEL = 1.0e-13

#: Eigenvalues with a real part above this are unstable.
UNSTABLE_LEVEL = 1.0e-10

#: Target of the secant refinement of eigenvalue crossings.
CROSSING_TOL = 1.0e-8


@dataclass(frozen=True)
class WaveSolverOptions:
    """How travelling-wave systems are solved."""

    #: Newton iteration settings.
    newton: NewtonOptions = field(default_factory=NewtonOptions)

    #: Use the assembled Jacobian instead of finite differences.
    analytic_jacobian: bool = False

    #: Relative finite-difference step.
    fd_step: float = FD_STEP

    #: Apply one Richardson level to finite differences.
    richardson: bool = True

    #: Threads evaluating finite-difference columns.
    workers: int | None = None


@dataclass(frozen=True, eq=False)
class WaveSystem:
    """
    The travelling-wave equations on the packed unknowns ``z = (Re, c, U without s1)``.

    Both the residual and its ``K x (K+1)`` Jacobian are provided.
    """

    disc: Discretization
    formulation: Formulation
    s1: float = 0.0
    options: WaveSolverOptions = field(default_factory=WaveSolverOptions)

    @cached_property
    def layout(self) -> StateLayout:
        """Layout of the state vectors."""
        return state_layout(self.disc, self.formulation)

    @property
    def pinned(self) -> int:
        """Index of the coordinate pinned by the first section."""
        return self.layout.section1

    def pack(self, Re: float, c: float, U: NDArray[np.float64]) -> NDArray[np.float64]:
        """Pack a solution into continuation unknowns."""
        return np.concatenate([[Re, c], np.delete(U, self.pinned)])

    def unpack(self, z: NDArray[np.float64]) -> tuple[float, float, NDArray[np.float64]]:
        """Unpack continuation unknowns into ``(Re, c, U)``."""
        U = np.insert(np.asarray(z[2:], dtype=np.float64), self.pinned, self.s1)
        return float(z[0]), float(z[1]), U

    def scale(self, scaling: tuple[float, float, float]) -> NDArray[np.float64]:
        """Get the per-component scaling of ``z``."""
        out = np.full(self.layout.size + 1, float(scaling[2]))
        out[0], out[1] = scaling[0], scaling[1]
        return out

    def operators(self, Re: float, c: float) -> OperatorSet:
        """Build the operators of the moving frame."""
        return build_operators(self.disc, Re, c, formulation=self.formulation)

    def check(self, U: NDArray[np.float64]) -> None:
        """
        Reject streamwise-independent states.

        Raises:
            DegenerateStateError: when every mode ``k >= 1`` vanishes.

        """
        tail = U[self.layout.zero_size :]
        if float(np.abs(tail).max()) < DEGENERATE_LEVEL:
            msg = 'State is independent of x, its phase speed is undefined.'
            raise DegenerateStateError(msg)

    def residual(self, z: NDArray[np.float64]) -> NDArray[np.float64]:
        """Evaluate the travelling-wave equations."""
        Re, c, U = self.unpack(z)
        self.check(U)
        return rhs(self.operators(Re, c), U)

    def jacobian(self, z: NDArray[np.float64]) -> NDArray[np.float64]:
        """Evaluate ``d residual / dz``."""
        if not self.options.analytic_jacobian:
            return finite_difference_jacobian(
                self.residual,
                z,
                step=self.options.fd_step,
                richardson=self.options.richardson,
                workers=self.options.workers,
            )
        Re, c, U = self.unpack(z)
        ops = self.operators(Re, c)
        J = np.delete(jacobian(ops, U), self.pinned, axis=1)
        dRe = -viscous_part(ops, U) / Re
        dc = translation_part(ops, U)
        return np.column_stack([dRe, dc, J])


def _state_vector(guess: SpectralState | NDArray[np.float64]) -> NDArray[np.float64]:
    if isinstance(guess, SpectralState):
        return guess.data
    return np.asarray(guess, dtype=np.float64)


def _formulation_of_guess(
    guess: SpectralState | NDArray[np.float64],
    formulation: Formulation | None,
) -> Formulation:
    if isinstance(guess, SpectralState):
        if formulation is not None and formulation is not guess.formulation:
            msg = f'Guess is a {guess.formulation.value} state, not {formulation.value}.'
            raise ParameterError(msg)
        return guess.formulation
    return formulation or Formulation.PRESSURE


def make_wave(
    system: WaveSystem,
    Re: float,
    c: float,
    U: NDArray[np.float64],
    *,
    spectrum: StabilitySpectrum | None = None,
) -> TravellingWave:
    """Wrap a converged solution of ``system``."""
    ops = system.operators(Re, c)
    return TravellingWave(
        Re=Re,
        c=c,
        state=SpectralState(disc=system.disc, formulation=system.formulation, data=U),
        amplitude=amplitude_of(system.disc, system.formulation, U),
        residual=residual_norm(ops, U),
        spectrum=spectrum,
    )


def solve_wave(
    disc: Discretization,
    Re: float,
    c: float,
    guess: SpectralState | NDArray[np.float64],
    *,
    formulation: Formulation | None = None,
    s1: float = 0.0,
    options: WaveSolverOptions | None = None,
) -> TravellingWave:
    """
    Converge a travelling wave at fixed Reynolds number.

    The guess is first translated onto the phase section.

    Args:
        disc: discretization.
        Re: Reynolds number.
        c: guess of the phase speed.
        guess: guess of the state.
        formulation: formulation of an array guess, constant pressure by default.
        s1: level of the first phase section.
        options: solver settings.

    Raises:
        DegenerateStateError: when the guess or an iterate is independent of ``x``.
        ConvergenceError: when Newton iterations fail, with the best iterate attached.

    Returns:
        The converged wave.

    """
    system = WaveSystem(
        disc=disc,
        formulation=_formulation_of_guess(guess, formulation),
        s1=s1,
        options=options or WaveSolverOptions(),
    )
    U0 = _state_vector(guess)
    system.check(U0)
    U0, _ = align_to_section(disc, U0, s1)
    z0 = system.pack(Re, c, U0)

    def f(y: NDArray[np.float64]) -> NDArray[np.float64]:
        return system.residual(np.concatenate([[Re], y]))

    def jac(y: NDArray[np.float64]) -> NDArray[np.float64]:
        return system.jacobian(np.concatenate([[Re], y]))[:, 1:]

    result = newton_solve(f, z0[1:], jacobian=jac, options=system.options.newton)
    _, c_new, U = system.unpack(np.concatenate([[Re], result.x]))
    logger.info(
        'Wave converged at Re=%.4f: c=%.6f after %d iterations (|f|=%.2e)',
        Re,
        c_new,
        result.iterations,
        result.residual,
    )
    return make_wave(system, Re, c_new, U)


def stability_spectrum(
    wave: TravellingWave,
    *,
    threshold: float = UNSTABLE_LEVEL,
) -> StabilitySpectrum:
    """
    Compute the eigenvalues of the Jacobian of a travelling wave.

    The eigenvalue of smallest modulus belongs to the streamwise translation and is set
    apart from the stability count.

    Args:
        wave: converged wave.
        threshold: real part above which an eigenvalue is unstable.

    Returns:
        The spectrum, sorted by decreasing real part.

    """
    ops = build_operators(wave.disc, wave.Re, wave.c, formulation=wave.formulation)
    values = sla.eigvals(jacobian(ops, wave.state.data))
    trivial = int(np.argmin(np.abs(values)))
    rest = np.delete(values, trivial)
    rest = rest[np.argsort(-rest.real, kind='stable')]
    unstable = int(np.count_nonzero(rest.real > threshold))
    logger.debug(
        'Spectrum at Re=%.4f: %d unstable, zero mode %.2e',
        wave.Re,
        unstable,
        abs(values[trivial]),
    )
    return StabilitySpectrum(
        eigenvalues=rest,
        trivial=complex(values[trivial]),
        unstable_count=unstable,
    )


def with_spectrum(wave: TravellingWave) -> TravellingWave:
    """Get the wave with its stability spectrum attached."""
    return dataclasses.replace(wave, spectrum=stability_spectrum(wave))


def _nearest(values: NDArray[np.complex128], target: complex) -> complex:
    return complex(values[int(np.argmin(np.abs(values - target)))])


@dataclass
class _EventLocator:
    """Locate and refine the events between two consecutive curve points."""

    system: WaveSystem
    scale: NDArray[np.float64]
    options: ArclengthOptions

    def _tracker(self, point: ContinuationPoint) -> PseudoArclength:
        z = self.system.pack(point.Re, point.c, point.state.data)
        return PseudoArclength(
            self.system.residual,
            z,
            self.scale,
            jacobian=self.system.jacobian,
            tangent=point.tangent,
            options=self.options,
        )

    def _corrected(
        self,
        tracker: PseudoArclength,
        point: ContinuationPoint,
        ds: float,
    ) -> TravellingWave:
        w = self.scale * self.system.pack(point.Re, point.c, point.state.data)
        w_new, _, _ = tracker.correct(w, point.tangent, ds)
        Re, c, U = self.system.unpack(tracker.unscale(w_new))
        return make_wave(self.system, Re, c, U)

    def fold(
        self,
        a: ContinuationPoint,
        b: ContinuationPoint,
        index: int,
    ) -> BifurcationEvent:
        """Refine the turning point in ``Re`` between ``a`` and ``b``."""
        slope_a = a.tangent[0] / self.scale[0]
        slope_b = b.tangent[0] / self.scale[0]
        theta, Re = hermite_extremum(a.Re, b.Re, slope_a, slope_b, b.ds)
        try:
            wave = self._corrected(self._tracker(a), a, theta * b.ds)
        except ConvergenceError as exc:
            logger.warning('Fold refinement failed (%s), interpolating', exc)
            return BifurcationEvent(
                kind=EventKind.SADDLE_NODE,
                Re=Re,
                c=a.c + theta * (b.c - a.c),
                amplitude=a.amplitude + theta * (b.amplitude - a.amplitude),
                index=index,
                approximate=True,
            )
        logger.info('Turning point at Re=%.4f, c=%.6f', wave.Re, wave.c)
        return BifurcationEvent(
            kind=EventKind.SADDLE_NODE,
            Re=wave.Re,
            c=wave.c,
            amplitude=wave.amplitude,
            index=index,
        )

    def crossing(
        self,
        a: ContinuationPoint,
        b: ContinuationPoint,
        index: int,
        *,
        fold: bool,
    ) -> BifurcationEvent | None:
        """Refine the eigenvalue crossing between ``a`` and ``b`` by secant iterations."""
        if a.spectrum is None or b.spectrum is None:
            return None
        if a.spectrum.unstable_count == b.spectrum.unstable_count:
            return None
        if b.spectrum.unstable_count > a.spectrum.unstable_count:
            target = b.spectrum.leading
            start = _nearest(a.spectrum.eigenvalues, target)
        else:
            start = a.spectrum.leading
            target = _nearest(b.spectrum.eigenvalues, start)
        kind = EventKind.HOPF
        if abs(target.imag) <= 1.0e-6 * max(1.0, abs(target)):
            if fold:
                return None
            kind = EventKind.REAL_CROSSING

        theta0, g0, theta1, g1 = 0.0, start.real, 1.0, target.real
        tracked = target
        wave: TravellingWave | None = None
        approximate = True
        try:
            tracker = self._tracker(a)
            for _ in range(8):
                if g1 == g0:
                    break
                theta = theta1 - g1 * (theta1 - theta0) / (g1 - g0)
                theta = min(max(theta, 1.0e-3), 1.0 - 1.0e-3)
                wave = self._corrected(tracker, a, theta * b.ds)
                tracked = _nearest(stability_spectrum(wave).eigenvalues, tracked)
                theta0, g0, theta1, g1 = theta1, g1, theta, tracked.real
                logger.debug('Crossing refinement: theta=%.6f, Re(lambda)=%.3e', theta, g1)
                if abs(g1) <= CROSSING_TOL:
                    approximate = False
                    break
        except ConvergenceError as exc:
            logger.warning('Crossing refinement failed: %s', exc)
            wave = None

        if wave is None:
            frac = start.real / (start.real - target.real)
            Re = a.Re + frac * (b.Re - a.Re)
            c = a.c + frac * (b.c - a.c)
            amplitude = a.amplitude + frac * (b.amplitude - a.amplitude)
        else:
            Re, c, amplitude = wave.Re, wave.c, wave.amplitude
        if approximate:
            logger.warning('Event %s near Re=%.4f is only approximate', kind.value, Re)
        tau = 2.0 * math.pi / abs(tracked.imag) if kind is EventKind.HOPF else None
        logger.info('%s at Re=%.4f, c=%.6f (tau=%s)', kind.value, Re, c, tau)
        return BifurcationEvent(
            kind=kind,
            Re=Re,
            c=c,
            amplitude=amplitude,
            index=index,
            eigenvalue=tracked,
            tau=tau,
            approximate=approximate,
        )

    def between(
        self,
        a: ContinuationPoint,
        b: ContinuationPoint,
        index: int,
    ) -> list[BifurcationEvent]:
        """Locate every event between two consecutive points."""
        events = []
        fold = a.tangent[0] * b.tangent[0] < 0.0
        if fold:
            events.append(self.fold(a, b, index))
        crossing = self.crossing(a, b, index, fold=fold)
        if crossing is not None:
            events.append(crossing)
        return events


def locate_events(
    curve: ContinuationCurve,
    *,
    s1: float = 0.0,
    options: ArclengthOptions | None = None,
    solver: WaveSolverOptions | None = None,
) -> list[BifurcationEvent]:
    """
    Locate the bifurcations along a computed curve of travelling waves.

    Turning points come from sign changes of ``dRe/ds``; Hopf points and real crossings
    from changes in the number of unstable eigenvalues, when spectra are available.

    Returns:
        Events in curve order.

    """
    system = WaveSystem(curve.disc, curve.formulation, s1, solver or WaveSolverOptions())
    locator = _EventLocator(
        system=system,
        scale=system.scale(curve.scaling),
        options=options or ArclengthOptions(),
    )
    events: list[BifurcationEvent] = []
    for i in range(1, len(curve.points)):
        events.extend(locator.between(curve.points[i - 1], curve.points[i], i))
    return events


def continue_curve(
    start: TravellingWave,
    re_range: tuple[float, float],
    *,
    direction: float = 1.0,
    s1: float = 0.0,
    scaling: tuple[float, float, float] = DEFAULT_SCALING,
    spectra: bool = True,
    min_amplitude: float = 1.0e-6,
    options: ArclengthOptions | None = None,
    solver: WaveSolverOptions | None = None,
    tangent: NDArray[np.float64] | None = None,
    resume: ResumeState | None = None,
) -> ContinuationCurve:
    """
    Follow a branch of travelling waves in the Reynolds number.

    Args:
        start: converged wave.
        re_range: the curve stops once it leaves this range.
        direction: initial sign of the change in ``Re``.
        s1: level of the first phase section.
        scaling: scaling of ``(Re, c, U)`` in arclength coordinates.
        spectra: compute stability spectra and locate eigenvalue crossings.
        min_amplitude: the curve stops when it reaches the laminar flow.
        options: step-size control.
        solver: settings of the wave equations.
        tangent: initial tangent in scaled coordinates, computed by default.
        resume: tracker state of an interrupted curve ending at ``start``.

    Returns:
        The curve, truncated with diagnostics when the corrector gave up.

    """
    system = WaveSystem(start.disc, start.formulation, s1, solver or WaveSolverOptions())
    opts = options or ArclengthOptions()
    if resume is not None:
        opts = dataclasses.replace(opts, ds=min(max(resume.ds, opts.ds_min), opts.ds_max))
    scale = system.scale(scaling)
    tracker = PseudoArclength(
        system.residual,
        system.pack(start.Re, start.c, start.state.data),
        scale,
        jacobian=system.jacobian,
        direction=direction,
        tangent=tangent,
        options=opts,
        workers=system.options.workers,
        jacobian0=None if resume is None else resume.jacobian,
        age=0 if resume is None else resume.age,
    )
    locator = _EventLocator(system=system, scale=scale, options=opts)
    curve = ContinuationCurve(disc=start.disc, formulation=start.formulation, scaling=scaling)
    first = start if start.spectrum is not None or not spectra else with_spectrum(start)
    curve.points.append(
        ContinuationPoint(
            Re=first.Re,
            c=first.c,
            amplitude=first.amplitude,
            state=first.state,
            tangent=tracker.tangent,
            ds=0.0,
            iterations=0,
            spectrum=first.spectrum,
        )
    )

    lo, hi = re_range
    try:
        for step in tracker:
            Re, c, U = system.unpack(step.z)
            wave = make_wave(system, Re, c, U)
            if spectra:
                wave = with_spectrum(wave)
            point = ContinuationPoint(
                Re=Re,
                c=c,
                amplitude=wave.amplitude,
                state=wave.state,
                tangent=step.tangent,
                ds=step.ds,
                iterations=step.iterations,
                spectrum=wave.spectrum,
            )
            index = len(curve.points)
            curve.events.extend(locator.between(curve.points[-1], point, index))
            curve.points.append(point)
            logger.info('Point %d: Re=%.4f, c=%.6f, A=%.6e', index, Re, c, wave.amplitude)
            if not lo <= Re <= hi:
                curve.message = f'Left the Reynolds range at Re={Re:.4f}.'
                break
            if wave.amplitude < min_amplitude:
                curve.message = f'Reached the laminar flow at Re={Re:.4f}.'
                break
    except DegenerateStateError as exc:
        curve.message = f'Reached the laminar flow: {exc}'
    if tracker.truncated:
        curve.truncated = True
        curve.message = tracker.message
    curve.resume = tracker.resume_state()
    return curve


def resume_curve(
    curve: ContinuationCurve,
    re_range: tuple[float, float],
    *,
    s1: float = 0.0,
    spectra: bool = True,
    min_amplitude: float = 1.0e-6,
    options: ArclengthOptions | None = None,
    solver: WaveSolverOptions | None = None,
) -> ContinuationCurve:
    """
    Continue an interrupted curve from its last point.

    The last tangent, step and carried Jacobian are reused so that the next points match
    those of an uninterrupted run.

    Raises:
        ParameterError: for an empty curve.

    Returns:
        A new curve holding the points of both runs.

    """
    if not curve.points:
        msg = 'Curve has no points to resume from.'
        raise ParameterError(msg)
    last = curve.points[-1]
    start = TravellingWave(
        Re=last.Re,
        c=last.c,
        state=last.state,
        amplitude=last.amplitude,
        spectrum=last.spectrum,
    )
    tail = continue_curve(
        start,
        re_range,
        s1=s1,
        scaling=curve.scaling,
        spectra=spectra,
        min_amplitude=min_amplitude,
        options=options,
        solver=solver,
        tangent=last.tangent,
        resume=curve.resume,
    )
    offset = len(curve.points) - 1
    return ContinuationCurve(
        disc=curve.disc,
        formulation=curve.formulation,
        scaling=curve.scaling,
        points=curve.points + tail.points[1:],
        events=curve.events
        + [dataclasses.replace(e, index=e.index + offset) for e in tail.events],
        truncated=tail.truncated,
        message=tail.message,
        resume=tail.resume,
    )


def fold_minimum(curve: ContinuationCurve) -> CurveMinimum:
    """
    Get the lowest Reynolds number reached by a curve.

    Refined turning points are preferred over plain curve points.

    Raises:
        ParameterError: for an empty curve.

    """
    if not curve.points:
        msg = 'Curve has no points.'
        raise ParameterError(msg)
    i = int(np.argmin(curve.reynolds))
    best = CurveMinimum(
        Re=curve.points[i].Re,
        c=curve.points[i].c,
        amplitude=curve.points[i].amplitude,
        alpha=curve.disc.alpha,
        refined=False,
    )
    for event in curve.events_of(EventKind.SADDLE_NODE):
        if event.Re <= best.Re:
            best = CurveMinimum(
                Re=event.Re,
                c=event.c,
                amplitude=event.amplitude,
                alpha=curve.disc.alpha,
                refined=not event.approximate,
            )
    return best


def retarget_alpha(
    wave: TravellingWave,
    alpha: float,
    *,
    solver: WaveSolverOptions | None = None,
) -> TravellingWave:
    """
    Re-solve a wave for another fundamental wavenumber.

    The unknowns hold nodal values per Fourier mode, so the state is reused unchanged.
    """
    disc = dataclasses.replace(wave.disc, alpha=float(alpha))
    state = SpectralState(disc=disc, formulation=wave.formulation, data=wave.state.data)
    return solve_wave(disc, wave.Re, wave.c, state, options=solver)


def minimum_over_alpha(
    wave: TravellingWave,
    alpha_bounds: tuple[float, float],
    re_range: tuple[float, float],
    *,
    direction: float = -1.0,
    xatol: float = 1.0e-4,
    options: ArclengthOptions | None = None,
    solver: WaveSolverOptions | None = None,
) -> CurveMinimum:
    """
    Find the wavenumber whose curve reaches the lowest Reynolds number.

    Each evaluation retargets the last converged wave, follows its curve toward lower
    Reynolds numbers and takes its minimum.

    Returns:
        The minimum of the best curve.

    """
    cache: dict[float, CurveMinimum] = {}
    seed = [wave]

    def objective(alpha: float) -> float:
        start = retarget_alpha(seed[0], alpha, solver=solver)
        seed[0] = start
        curve = continue_curve(
            start,
            re_range,
            direction=direction,
            spectra=False,
            options=options,
            solver=solver,
        )
        cache[alpha] = fold_minimum(curve)
        logger.info('alpha=%.6f: min Re=%.4f', alpha, cache[alpha].Re)
        return cache[alpha].Re

    result = optimize.minimize_scalar(
        objective,
        bounds=alpha_bounds,
        method='bounded',
        options={'xatol': xatol},
    )
    alpha = float(result.x)
    if alpha not in cache:
        objective(alpha)
    return cache[alpha]


def convert_curve(
    curve: ContinuationCurve,
    direction: ConversionDirection,
    *,
    tol: float = 1.0e-8,
) -> list[TravellingWave]:
    """Convert every point of a curve to the other formulation."""
    out = []
    for point in curve.points:
        wave = TravellingWave(
            Re=point.Re,
            c=point.c,
            state=point.state,
            amplitude=point.amplitude,
        )
        out.append(convert_formulation(wave, direction, tol=tol))
    return out


@dataclass(frozen=True, eq=False)
class WaveGuess:
    """A travelling-wave guess obtained by time integration."""

    Re: float  #: Reynolds number of the simulation.
    c: float  #: Phase speed estimated from the drift of mode 1.
    state: SpectralState  #: Final state of the simulation.
    t: float  #: Final time.

    #: Sampled ``(t, amplitude)`` history.
    amplitudes: list[tuple[float, float]]


def phase_speed(
    samples: Sequence[tuple[float, complex]],
    alpha: float,
    k: int = 1,
) -> float:
    """
    Estimate the speed of a wave from the phase drift of one of its modes.

    Mode ``k`` of a wave moving at speed ``c`` rotates as ``exp(-i k alpha c t)``.

    Raises:
        ParameterError: with fewer than two samples.

    """
    if len(samples) < 2:
        msg = 'At least two samples are required to estimate a phase drift.'
        raise ParameterError(msg)
    t = np.array([s[0] for s in samples])
    phase = np.unwrap(np.angle(np.array([s[1] for s in samples])))
    slope = np.polyfit(t, phase, 1)[0]
    return float(-slope / (k * alpha))


def perturbed_laminar(
    disc: Discretization,
    Re: float,
    formulation: Formulation,
    amplitude: float,
) -> NDArray[np.float64]:
    """Get the laminar state plus the leading eigenmode of mode 1, scaled to ``amplitude``."""
    ops = build_operators(disc, Re, formulation=formulation)
    _, vec = laminar_mode(ops, 1)
    layout = state_layout(disc, formulation)
    x0, ub = layout.split(laminar_vector(disc, formulation))
    ub = ub.copy()
    ub[0] = amplitude * vec
    return layout.join(x0, ub)


def bootstrap_wave(
    disc: Discretization,
    Re: float,
    *,
    formulation: Formulation = Formulation.PRESSURE,
    dt: float = 0.02,
    perturbation: float = 1.0e-2,
    window: float = 50.0,
    t_max: float = 20000.0,
    steady_tol: float = 1.0e-4,
    decay_ratio: float = 0.1,
) -> WaveGuess:
    """
    Integrate a perturbed laminar flow until it settles on a travelling wave.

    The amplitude is compared between consecutive windows; once it settles, the phase
    speed is estimated from the drift of mode 1 on the centreline over the last window.

    Args:
        disc: discretization.
        Re: Reynolds number.
        formulation: formulation of the simulation.
        dt: time step.
        perturbation: initial size of the eigenmode perturbation.
        window: time between amplitude comparisons.
        t_max: time cap.
        steady_tol: relative amplitude change considered steady.
        decay_ratio: decay below this fraction of the initial amplitude means no wave.

    Raises:
        LaminarDecayError: when the perturbation decays.
        ConvergenceError: when the amplitude has not settled by ``t_max``.

    Returns:
        The guess for :func:`solve_wave`.

    """
    ops = build_operators(disc, Re, dt=dt, formulation=formulation)
    state = integrator.start(perturbed_laminar(disc, Re, formulation, perturbation), dt)
    initial = amplitude_of(disc, formulation, state.U)
    previous = initial
    history: list[tuple[float, float]] = [(0.0, initial)]

    while state.t < t_max:
        drift = integrator.ModeObserver(k=1)
        amplitudes = integrator.AmplitudeObserver(every=max(1, int(round(1.0 / dt))))
        result = integrator.integrate(state, ops, state.t + window, [drift, amplitudes])
        state = result.state
        history.extend(amplitudes.records)
        current = amplitude_of(disc, formulation, state.U)
        logger.debug('Bootstrap t=%.1f: A=%.6e', state.t, current)
        if current < decay_ratio * initial and current < previous:
            msg = f'Perturbation decayed to A={current:.3e} at t={state.t:.1f}, Re={Re}.'
            raise LaminarDecayError(msg)
        if abs(current - previous) <= steady_tol * current:
            c = phase_speed(drift.records, disc.alpha)
            logger.info('Bootstrap settled at t=%.1f: A=%.6e, c=%.6f', state.t, current, c)
            return WaveGuess(
                Re=Re,
                c=c,
                state=SpectralState(disc=disc, formulation=formulation, data=state.U),
                t=state.t,
                amplitudes=history,
            )
        previous = current

    msg = f'Amplitude did not settle before t={t_max}.'
    raise ConvergenceError(msg, best=state.U)
