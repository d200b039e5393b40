from __future__ import annotations

from .checkpoint import SimulationCheckpoint, load_checkpoint, save_checkpoint
from .config import RunConfig, RunMode, load_config
from .exceptions import (
    BasePoiseuilleError,
    CheckpointCorruptedError,
    CheckpointError,
    CheckpointVersionError,
    ConfigError,
    ConvergenceError,
    CrossingCountError,
    DegenerateStateError,
    DivergenceError,
    EigenvalueConvergenceError,
    FormulationError,
    HopfGuessError,
    LaminarDecayError,
    NewtonDivergenceError,
    ParameterError,
    PoiseuilleError,
    SectionCrossingError,
    SingularOperatorError,
    WindingConvergenceError,
)
from .fields import FieldSnapshot, field_snapshot
from .models import (
    BifurcationEvent,
    ContinuationCurve,
    ContinuationPoint,
    ConversionDirection,
    CriticalPoint,
    CurveMinimum,
    EventKind,
    Extrapolation,
    Formulation,
    LinearMode,
    ModulatedWave,
    NeutralPoint,
    ResumeState,
    StabilityKind,
    StabilitySpectrum,
    TravellingWave,
)
from .spectral import Discretization, build_discretization, build_operators
from .state import SpectralState
from .version import version

__version__ = version
__all__ = [
    'BasePoiseuilleError',
    'BifurcationEvent',
    'CheckpointCorruptedError',
    'CheckpointError',
    'CheckpointVersionError',
    'ConfigError',
    'ContinuationCurve',
    'ContinuationPoint',
    'ConvergenceError',
    'ConversionDirection',
    'CriticalPoint',
    'CrossingCountError',
    'CurveMinimum',
    'DegenerateStateError',
    'Discretization',
    'DivergenceError',
    'EigenvalueConvergenceError',
    'EventKind',
    'Extrapolation',
    'FieldSnapshot',
    'Formulation',
    'FormulationError',
    'HopfGuessError',
    'LaminarDecayError',
    'LinearMode',
    'ModulatedWave',
    'NeutralPoint',
    'NewtonDivergenceError',
    'ParameterError',
    'PoiseuilleError',
    'ResumeState',
    'RunConfig',
    'RunMode',
    'SectionCrossingError',
    'SimulationCheckpoint',
    'SingularOperatorError',
    'SpectralState',
    'StabilityKind',
    'StabilitySpectrum',
    'TravellingWave',
    'WindingConvergenceError',
    'build_discretization',
    'build_operators',
    'field_snapshot',
    'load_checkpoint',
    'load_config',
    'save_checkpoint',
    'version',
]
