from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from .spectral import Discretization
    from .state import SpectralState


class Formulation(Enum):
    """How the mean flow is driven along the channel."""

    #: The volume flux is held at the laminar value ``Q = 4/3``.
    FLUX = 'flux'
    #: The mean pressure gradient is held at the laminar value ``-2/Re``.
    PRESSURE = 'pressure'


class ConversionDirection(Enum):
    """Direction of a conversion between the two formulations."""

    PRESSURE_TO_FLUX = 'pressure-to-flux'
    FLUX_TO_PRESSURE = 'flux-to-pressure'


class StabilityKind(Enum):
    """Linear stability classification of an equilibrium or a fixed point."""

    STABLE = 'stable'  #: No eigenvalue (or multiplier) in the unstable region.
    UNSTABLE = 'unstable'  #: At least one unstable eigenvalue (or multiplier).


class EventKind(Enum):
    """Kinds of bifurcations detected along a continuation curve."""

    SADDLE_NODE = 'saddle-node'  #: Turning point with respect to Re.
    HOPF = 'hopf'  #: Complex pair crossing the imaginary axis.
    REAL_CROSSING = 'real-crossing'  #: Real eigenvalue crossing zero away from a fold.
    NEIMARK_SACKER = 'neimark-sacker'  #: Complex multipliers crossing the unit circle.


@dataclass(frozen=True, eq=False)
class StabilitySpectrum:
    """
    Eigenvalues of a linearization, with the trivial symmetry eigenvalue set apart.

    For travelling waves the trivial eigenvalue is the zero eigenvalue of the
    streamwise translation; for return maps it is the multiplier ``1`` along the
    invariant curve.
    """

    #: Remaining eigenvalues (or multipliers), sorted by decreasing real part (or modulus).
    eigenvalues: NDArray[np.complex128]

    #: Eigenvalue identified with the continuous symmetry.
    trivial: complex

    #: Number of unstable eigenvalues (or multipliers).
    unstable_count: int

    @property
    def kind(self) -> StabilityKind:
        """Tell whether the object is stable or not."""
        return StabilityKind.UNSTABLE if self.unstable_count else StabilityKind.STABLE

    @property
    def leading(self) -> complex:
        """Leading non-trivial eigenvalue."""
        return complex(self.eigenvalues[0])


@dataclass(frozen=True, eq=False)
class TravellingWave:
    """A steady solution in the frame moving at speed :attr:`c`."""

    #: Reynolds number of the formulation held by :attr:`state`.
    Re: float

    #: Phase speed of the wave.
    c: float

    #: Spectral state, lying on the phase section.
    state: SpectralState

    #: Amplitude of the deviation from the laminar flow.
    amplitude: float

    #: Max-norm of the residual at convergence.
    residual: float = 0.0

    #: Stability spectrum, when computed.
    spectrum: StabilitySpectrum | None = None

    @property
    def disc(self) -> Discretization:
        """Discretization of the underlying state."""
        return self.state.disc

    @property
    def formulation(self) -> Formulation:
        """Formulation of the underlying state."""
        return self.state.formulation


@dataclass(frozen=True, eq=False)
class ModulatedWave:
    """A fixed point of the return map of the flow seen from the frame moving at :attr:`c`."""

    #: Reynolds number of the formulation held by :attr:`state`.
    Re: float

    #: Speed of the frame in which the flow is time-periodic.
    c: float

    #: Spectral state lying on both phase sections.
    state: SpectralState

    #: Return time of the map.
    tau: float

    #: Number of section crossings making one return.
    n_c: int

    #: Amplitude of the deviation from the laminar flow at the section point.
    amplitude: float

    #: Value pinned on the first section.
    s1: float = 0.0

    #: Value pinned on the second section.
    s2: float = 0.0

    #: Max-norm of the residual at convergence.
    residual: float = 0.0

    #: Multipliers of the linearized return map, when computed.
    multipliers: StabilitySpectrum | None = None

    @property
    def disc(self) -> Discretization:
        """Discretization of the underlying state."""
        return self.state.disc

    @property
    def formulation(self) -> Formulation:
        """Formulation of the underlying state."""
        return self.state.formulation


@dataclass(frozen=True)
class BifurcationEvent:
    """A bifurcation located along a continuation curve."""

    #: Kind of bifurcation.
    kind: EventKind

    #: Reynolds number of the event.
    Re: float

    #: Phase speed at the event.
    c: float

    #: Amplitude at the event.
    amplitude: float

    #: Index of the curve point right after the event.
    index: int

    #: Critical eigenvalue (or multiplier), when relevant.
    eigenvalue: complex | None = None

    #: Period of the bifurcating oscillation ``2 pi / |Im lambda|``, when relevant.
    tau: float | None = None

    #: Whether local refinement failed and the location is interpolated.
    approximate: bool = False


@dataclass(frozen=True, eq=False)
class ContinuationPoint:
    """An accepted point of a continuation curve."""

    Re: float  #: Reynolds number.
    c: float  #: Phase speed (or frame speed).
    amplitude: float  #: Amplitude of the solution.
    state: SpectralState  #: Solution state.
    tangent: NDArray[np.float64]  #: Unit tangent in scaled coordinates.
    ds: float  #: Arclength step that produced this point.
    iterations: int  #: Corrector iterations.

    #: Return time, for modulated waves.
    tau: float | None = None

    #: Crossing count, for modulated waves.
    n_c: int | None = None

    #: Stability spectrum, when computed.
    spectrum: StabilitySpectrum | None = None


@dataclass(frozen=True, eq=False)
class ResumeState:
    """Tracker state needed to continue a curve exactly where it stopped."""

    ds: float  #: Next arclength step.
    age: int  #: Accepted steps since the Jacobian was last evaluated.
    jacobian: NDArray[np.float64] | None = None  #: Carried Jacobian in scaled coordinates.


@dataclass(eq=False)
class ContinuationCurve:
    """A branch of solutions computed by pseudo-arclength continuation."""

    #: Discretization shared by all points.
    disc: Discretization

    #: Formulation shared by all points.
    formulation: Formulation

    #: Scaling applied to ``(Re, c, U)`` to build arclength coordinates.
    scaling: tuple[float, float, float] = (1.0e-3, 1.0, 1.0)

    #: Accepted points, in continuation order.
    points: list[ContinuationPoint] = field(default_factory=list)

    #: Detected bifurcations.
    events: list[BifurcationEvent] = field(default_factory=list)

    #: Whether the curve stopped early because the step fell under its floor.
    truncated: bool = False

    #: Diagnostics explaining an early stop.
    message: str = ''

    #: State of the continuation when it stopped, used to resume it.
    resume: ResumeState | None = None

    @property
    def reynolds(self) -> NDArray[np.float64]:
        """Reynolds numbers of all points."""
        return np.array([p.Re for p in self.points])

    @property
    def speeds(self) -> NDArray[np.float64]:
        """Phase speeds of all points."""
        return np.array([p.c for p in self.points])

    @property
    def amplitudes(self) -> NDArray[np.float64]:
        """Amplitudes of all points."""
        return np.array([p.amplitude for p in self.points])

    def events_of(self, kinds: EventKind | Sequence[EventKind]) -> list[BifurcationEvent]:
        """Get detected events of the provided kinds."""
        if isinstance(kinds, EventKind):
            kinds = (kinds,)
        return [event for event in self.events if event.kind in kinds]


@dataclass(frozen=True)
class Extrapolation:
    """Result of a Richardson extrapolation over a ladder of grid spacings."""

    value: complex  #: Extrapolated value.
    error: float  #: Estimate of the remaining error.
    order: float  #: Observed convergence order (``nan`` when undefined).
    consistent: bool  #: Whether successive differences decrease monotonically.


@dataclass(frozen=True, eq=False)
class LinearMode:
    """Leading eigen-pair of the Orr-Sommerfeld problem."""

    #: Eigenvalue ``lambda = -i alpha c`` (growth rate is its real part).
    eigenvalue: complex

    #: Eigenfunction on the interior nodes, normalized to a unit max-norm.
    eigenfunction: NDArray[np.complex128]

    #: Number of interior grid points.
    n: int

    #: Number of inverse iterations performed.
    iterations: int

    #: Scaled residual of the generalized eigenproblem.
    residual: float

    #: Streamwise wavenumber of the mode.
    alpha: float = 1.0

    @property
    def phase_speed(self) -> complex:
        """Complex phase speed ``c = i lambda / alpha``."""
        return 1j * complex(self.eigenvalue) / self.alpha


@dataclass(frozen=True)
class NeutralPoint:
    """A point of the neutral stability curve of the laminar flow."""

    #: Wavenumber.
    alpha: float

    #: Neutral Reynolds number, :obj:`None` when the flow is stable on the whole range.
    Re: float | None

    #: Imaginary part of the eigenvalue at the neutral point.
    frequency: float | None = None

    #: Whether this point belongs to the upper branch of the neutral curve.
    upper: bool = False


@dataclass(frozen=True)
class CriticalPoint:
    """Nose of the neutral curve: lowest Reynolds number of linear instability."""

    Re: float  #: Critical Reynolds number.
    alpha: float  #: Critical wavenumber.
    c: float  #: Real part of the phase speed at the critical point.


@dataclass(frozen=True)
class CurveMinimum:
    """Lowest Reynolds number reached by a continuation curve."""

    Re: float  #: Minimum Reynolds number.
    c: float  #: Phase speed at the minimum.
    amplitude: float  #: Amplitude at the minimum.
    alpha: float  #: Wavenumber of the curve.

    #: Whether the minimum is a refined turning point rather than a curve point.
    refined: bool = True
