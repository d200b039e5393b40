"""
:mod:`poiseuille2d.exceptions` defines the following hierarchy of exceptions.

* :exc:`BasePoiseuilleError`
    * :exc:`PoiseuilleError`
        * :exc:`ParameterError`
            * :exc:`ConfigError`
        * :exc:`SingularOperatorError`
        * :exc:`DivergenceError`
        * :exc:`ConvergenceError`
            * :exc:`NewtonDivergenceError`
            * :exc:`EigenvalueConvergenceError`
            * :exc:`WindingConvergenceError`
        * :exc:`DegenerateStateError`
        * :exc:`LaminarDecayError`
        * :exc:`SectionCrossingError`
        * :exc:`CrossingCountError`
        * :exc:`HopfGuessError`
        * :exc:`FormulationError`
        * :exc:`CheckpointError`
            * :exc:`CheckpointVersionError`
            * :exc:`CheckpointCorruptedError`
"""

from __future__ import annotations

from typing import Any


class BasePoiseuilleError(BaseException):
    """Base error for all exceptions originating from this library."""


class PoiseuilleError(Exception, BasePoiseuilleError):
    """Base error for all things that users would like to catch."""


class ParameterError(ValueError, PoiseuilleError):
    """Raised when provided parameters cannot describe a valid problem."""


class ConfigError(ParameterError):
    """Raised when a run configuration fails validation."""


class SingularOperatorError(PoiseuilleError):
    """Raised when a per-mode block of the pressure elimination is singular."""

    def __init__(self, message: str, mode: int) -> None:
        """
        Create a new singular operator error.

        Args:
            message: human readable description.
            mode: Fourier mode index of the offending block.

        """
        super().__init__(message)
        self.mode = mode


class DivergenceError(PoiseuilleError):
    """Raised when time stepping produced non-finite values."""

    def __init__(self, message: str, time: float, step: int) -> None:
        """
        Create a new divergence error.

        Args:
            message: human readable description.
            time: simulation time reached when the blow-up was detected.
            step: step counter at the time of detection.

        """
        super().__init__(message)
        self.time = time
        self.step = step


class ConvergenceError(PoiseuilleError):
    """
    Raised when an iterative method did not reach its tolerance.

    The best iterate found so far is kept in :attr:`best` so callers can retry
    with another step size or another initial guess.
    """

    def __init__(self, message: str, best: Any = None, residual: float | None = None) -> None:
        """
        Create a new convergence error.

        Args:
            message: human readable description.
            best: best iterate reached before giving up.
            residual: residual norm of the best iterate.

        """
        super().__init__(message)
        self.best = best
        self.residual = residual


class NewtonDivergenceError(ConvergenceError):
    """Raised when Newton residuals kept growing for several iterations."""


class EigenvalueConvergenceError(ConvergenceError):
    """Raised when inverse iteration failed to converge on an eigenvalue."""


class WindingConvergenceError(ConvergenceError):
    """Raised when a phase-winding speed estimate did not stabilize."""


class DegenerateStateError(PoiseuilleError):
    """
    Raised when a state has no streamwise dependence.

    Such a state (typically the laminar flow) leaves the phase speed unidentified.
    """


class LaminarDecayError(PoiseuilleError):
    """Raised when a bootstrap trajectory decayed back to the laminar flow."""


class SectionCrossingError(PoiseuilleError):
    """Raised when the expected number of section crossings was not reached in time."""

    def __init__(self, message: str, crossings: int) -> None:
        """
        Create a new section crossing error.

        Args:
            message: human readable description.
            crossings: number of crossings found before the time cap.

        """
        super().__init__(message)
        self.crossings = crossings


class CrossingCountError(PoiseuilleError):
    """
    Raised when no crossing count keeps the return time continuous.

    Callers are expected to reduce the continuation step when catching this.
    """


class HopfGuessError(PoiseuilleError):
    """Raised when no unstable complex eigen-pair is available to build a guess."""


class FormulationError(PoiseuilleError):
    """Raised when a state cannot be converted between flow formulations."""


class CheckpointError(PoiseuilleError):
    """Base error for everything related to checkpoint files."""


class CheckpointVersionError(CheckpointError):
    """Raised when a checkpoint was written with an unsupported layout version."""


class CheckpointCorruptedError(CheckpointError):
    """Raised when a checkpoint is truncated or fails its integrity checks."""
