"""
Binary checkpoints of states, waves and continuation curves.

A checkpoint is a frame made of a magic string, a layout version, the record kind, the
length of the payload, the payload itself and a CRC32 of the payload. Numbers are stored
as little-endian IEEE doubles so that everything read back is bit-identical.
"""

from __future__ import annotations

import logging
import os
import zlib
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import TYPE_CHECKING, Any, TypeAlias, TypeVar

import numpy as np
from construct import (
    Adapter,
    Array,
    Bytes,
    Checksum,
    ConstructError,
    Flag,
    Float64l,
    GreedyBytes,
    If,
    Int8ul,
    Int16ul,
    Int32ul,
    Int64ul,
    PascalString,
    Prefixed,
    PrefixedArray,
    Rebuild,
    Struct,
    Terminated,
    VarInt,
    len_,
)

from .exceptions import (
    CheckpointCorruptedError,
    CheckpointError,
    CheckpointVersionError,
    ParameterError,
)
from .integrator import IntegratorState
from .models import (
    BifurcationEvent,
    ContinuationCurve,
    ContinuationPoint,
    EventKind,
    Formulation,
    ModulatedWave,
    ResumeState,
    StabilitySpectrum,
    TravellingWave,
)
from .spectral import Discretization
from .state import SpectralState

if TYPE_CHECKING:
    from construct import Construct, Container

logger = logging.getLogger(__package__)

CHECKPOINT_MAGIC = b'P2DC'
CHECKPOINT_VERSION = 1

_T = TypeVar('_T')


class RecordKind(IntEnum):
    """Kinds of records held by a checkpoint."""

    STATE = 1  #: A :class:`.SpectralState`.
    SIMULATION = 2  #: A :class:`SimulationCheckpoint`.
    WAVE = 3  #: A :class:`.TravellingWave`.
    MODULATED = 4  #: A :class:`.ModulatedWave`.
    CURVE = 5  #: A :class:`.ContinuationCurve`.


_FORMULATION_CODES = {Formulation.FLUX: 0, Formulation.PRESSURE: 1}
_EVENT_CODES = {
    EventKind.SADDLE_NODE: 0,
    EventKind.HOPF: 1,
    EventKind.REAL_CROSSING: 2,
    EventKind.NEIMARK_SACKER: 3,
}


def _lookup(codes: dict[_T, int], value: int, what: str) -> _T:
    for key, code in codes.items():
        if code == value:
            return key
    msg = f'Unknown {what} code {value}.'
    raise CheckpointCorruptedError(msg)


@dataclass(frozen=True, eq=False)
class SimulationCheckpoint:
    """A time integration with the parameters it runs at."""

    state: IntegratorState  #: Integrator state, including the previous nonlinear term.
    disc: Discretization  #: Discretization of the state vector.
    formulation: Formulation  #: Formulation of the state vector.
    Re: float  #: Reynolds number.
    c: float = 0.0  #: Speed of the reference frame.


Checkpointable: TypeAlias = (
    SpectralState | SimulationCheckpoint | TravellingWave | ModulatedWave | ContinuationCurve
)


class ArrayAdapter(Adapter):  # type: ignore[type-arg]
    """Carry real or complex arrays as little-endian double blocks."""

    def _decode(self, obj: Container, context: Any, path: str) -> np.ndarray[Any, Any]:
        dtype = '<c16' if obj.complex else '<f8'
        try:
            values = np.frombuffer(obj.data, dtype=dtype).reshape(tuple(obj.shape))
        except ValueError as exc:
            msg = f'Array block does not match shape {list(obj.shape)}.'
            raise CheckpointCorruptedError(msg) from exc
        return values.astype(np.complex128 if obj.complex else np.float64)

    def _encode(self, obj: Any, context: Any, path: str) -> dict[str, Any]:
        values = np.asarray(obj)
        is_complex = bool(np.iscomplexobj(values))
        dtype = '<c16' if is_complex else '<f8'
        return {
            'complex': is_complex,
            'shape': list(values.shape),
            'data': np.ascontiguousarray(values, dtype=dtype).tobytes(),
        }


class OptionalAdapter(Adapter):  # type: ignore[type-arg]
    """Map :obj:`None` to an absent value."""

    def _decode(self, obj: Container, context: Any, path: str) -> Any:
        return obj.value if obj.present else None

    def _encode(self, obj: Any, context: Any, path: str) -> dict[str, Any]:
        return {'present': obj is not None, 'value': obj}


class ComplexAdapter(Adapter):  # type: ignore[type-arg]
    """Store a complex number as its real and imaginary parts."""

    def _decode(self, obj: list[float], context: Any, path: str) -> complex:
        return complex(obj[0], obj[1])

    def _encode(self, obj: complex, context: Any, path: str) -> list[float]:
        z = complex(obj)
        return [z.real, z.imag]


def maybe(subcon: Construct) -> Construct:  # type: ignore[type-arg]
    """Make a field optional."""
    return OptionalAdapter(
        Struct(
            'present' / Flag,
            'value' / If(lambda this: this.present, subcon),
        )
    )


ArrayBlock = ArrayAdapter(
    Struct(
        'complex' / Flag,
        'ndim' / Rebuild(Int8ul, len_(lambda this: this.shape)),
        'shape' / Array(lambda this: this.ndim, Int64ul),
        'data' / Prefixed(Int64ul, GreedyBytes),
    )
)
Complex = ComplexAdapter(Array(2, Float64l))
Text = PascalString(VarInt, 'utf8')


class DiscretizationAdapter(Adapter):  # type: ignore[type-arg]
    """Build :class:`.Discretization` objects."""

    def _decode(self, obj: Container, context: Any, path: str) -> Discretization:
        try:
            return Discretization(
                N=obj.N, M=obj.M, alpha=obj.alpha, dealias=obj.dealias, nx=obj.nx
            )
        except ParameterError as exc:
            msg = f'Invalid discretization: {exc}'
            raise CheckpointCorruptedError(msg) from exc

    def _encode(self, obj: Discretization, context: Any, path: str) -> dict[str, Any]:
        return {
            'N': obj.N,
            'M': obj.M,
            'alpha': obj.alpha,
            'dealias': obj.dealias,
            'nx': obj.nx,
        }


DiscretizationRecord = DiscretizationAdapter(
    Struct(
        'N' / Int32ul,
        'M' / Int32ul,
        'alpha' / Float64l,
        'dealias' / Flag,
        'nx' / Int32ul,
    )
)


def _state(
    disc: Discretization,
    formulation: int,
    data: np.ndarray[Any, Any],
) -> SpectralState:
    try:
        return SpectralState(
            disc=disc,
            formulation=_lookup(_FORMULATION_CODES, formulation, 'formulation'),
            data=data,
        )
    except ParameterError as exc:
        msg = f'Invalid state: {exc}'
        raise CheckpointCorruptedError(msg) from exc


class StateAdapter(Adapter):  # type: ignore[type-arg]
    """Build :class:`.SpectralState` objects."""

    def _decode(self, obj: Container, context: Any, path: str) -> SpectralState:
        return _state(obj.disc, obj.formulation, obj.data)

    def _encode(self, obj: SpectralState, context: Any, path: str) -> dict[str, Any]:
        return {
            'disc': obj.disc,
            'formulation': _FORMULATION_CODES[obj.formulation],
            'data': obj.data,
        }


StateRecord = StateAdapter(
    Struct(
        'disc' / DiscretizationRecord,
        'formulation' / Int8ul,
        'data' / ArrayBlock,
    )
)


class SpectrumAdapter(Adapter):  # type: ignore[type-arg]
    """Build :class:`.StabilitySpectrum` objects."""

    def _decode(self, obj: Container, context: Any, path: str) -> StabilitySpectrum:
        return StabilitySpectrum(
            eigenvalues=np.asarray(obj.eigenvalues, dtype=np.complex128),
            trivial=obj.trivial,
            unstable_count=obj.unstable_count,
        )

    def _encode(self, obj: StabilitySpectrum, context: Any, path: str) -> dict[str, Any]:
        return {
            'eigenvalues': np.asarray(obj.eigenvalues, dtype=np.complex128),
            'trivial': obj.trivial,
            'unstable_count': obj.unstable_count,
        }


SpectrumRecord = SpectrumAdapter(
    Struct(
        'eigenvalues' / ArrayBlock,
        'trivial' / Complex,
        'unstable_count' / Int32ul,
    )
)


class SimulationAdapter(Adapter):  # type: ignore[type-arg]
    """Build :class:`SimulationCheckpoint` objects."""

    def _decode(self, obj: Container, context: Any, path: str) -> SimulationCheckpoint:
        state = _state(obj.disc, obj.formulation, obj.U)
        return SimulationCheckpoint(
            state=IntegratorState(
                U=state.data,
                dt=obj.dt,
                t=obj.t,
                step_count=obj.step_count,
                nl_prev=obj.nl_prev,
            ),
            disc=state.disc,
            formulation=state.formulation,
            Re=obj.Re,
            c=obj.c,
        )

    def _encode(self, obj: SimulationCheckpoint, context: Any, path: str) -> dict[str, Any]:
        return {
            'disc': obj.disc,
            'formulation': _FORMULATION_CODES[obj.formulation],
            'Re': obj.Re,
            'c': obj.c,
            'dt': obj.state.dt,
            't': obj.state.t,
            'step_count': obj.state.step_count,
            'U': obj.state.U,
            'nl_prev': obj.state.nl_prev,
        }


SimulationRecord = SimulationAdapter(
    Struct(
        'disc' / DiscretizationRecord,
        'formulation' / Int8ul,
        'Re' / Float64l,
        'c' / Float64l,
        'dt' / Float64l,
        't' / Float64l,
        'step_count' / Int64ul,
        'U' / ArrayBlock,
        'nl_prev' / maybe(ArrayBlock),
    )
)


class WaveAdapter(Adapter):  # type: ignore[type-arg]
    """Build :class:`.TravellingWave` objects."""

    def _decode(self, obj: Container, context: Any, path: str) -> TravellingWave:
        return TravellingWave(
            Re=obj.Re,
            c=obj.c,
            state=obj.state,
            amplitude=obj.amplitude,
            residual=obj.residual,
            spectrum=obj.spectrum,
        )

    def _encode(self, obj: TravellingWave, context: Any, path: str) -> dict[str, Any]:
        return {
            'Re': obj.Re,
            'c': obj.c,
            'amplitude': obj.amplitude,
            'residual': obj.residual,
            'state': obj.state,
            'spectrum': obj.spectrum,
        }


WaveRecord = WaveAdapter(
    Struct(
        'Re' / Float64l,
        'c' / Float64l,
        'amplitude' / Float64l,
        'residual' / Float64l,
        'state' / StateRecord,
        'spectrum' / maybe(SpectrumRecord),
    )
)


class ModulatedAdapter(Adapter):  # type: ignore[type-arg]
    """Build :class:`.ModulatedWave` objects."""

    def _decode(self, obj: Container, context: Any, path: str) -> ModulatedWave:
        return ModulatedWave(
            Re=obj.Re,
            c=obj.c,
            state=obj.state,
            tau=obj.tau,
            n_c=obj.n_c,
            amplitude=obj.amplitude,
            s1=obj.s1,
            s2=obj.s2,
            residual=obj.residual,
            multipliers=obj.multipliers,
        )

    def _encode(self, obj: ModulatedWave, context: Any, path: str) -> dict[str, Any]:
        return {
            'Re': obj.Re,
            'c': obj.c,
            'tau': obj.tau,
            'n_c': obj.n_c,
            'amplitude': obj.amplitude,
            's1': obj.s1,
            's2': obj.s2,
            'residual': obj.residual,
            'state': obj.state,
            'multipliers': obj.multipliers,
        }


ModulatedRecord = ModulatedAdapter(
    Struct(
        'Re' / Float64l,
        'c' / Float64l,
        'tau' / Float64l,
        'n_c' / Int32ul,
        'amplitude' / Float64l,
        's1' / Float64l,
        's2' / Float64l,
        'residual' / Float64l,
        'state' / StateRecord,
        'multipliers' / maybe(SpectrumRecord),
    )
)


class EventAdapter(Adapter):  # type: ignore[type-arg]
    """Build :class:`.BifurcationEvent` objects."""

    def _decode(self, obj: Container, context: Any, path: str) -> BifurcationEvent:
        return BifurcationEvent(
            kind=_lookup(_EVENT_CODES, obj.kind, 'event'),
            Re=obj.Re,
            c=obj.c,
            amplitude=obj.amplitude,
            index=obj.index,
            eigenvalue=obj.eigenvalue,
            tau=obj.tau,
            approximate=obj.approximate,
        )

    def _encode(self, obj: BifurcationEvent, context: Any, path: str) -> dict[str, Any]:
        return {
            'kind': _EVENT_CODES[obj.kind],
            'Re': obj.Re,
            'c': obj.c,
            'amplitude': obj.amplitude,
            'index': obj.index,
            'eigenvalue': obj.eigenvalue,
            'tau': obj.tau,
            'approximate': obj.approximate,
        }


EventRecord = EventAdapter(
    Struct(
        'kind' / Int8ul,
        'Re' / Float64l,
        'c' / Float64l,
        'amplitude' / Float64l,
        'index' / Int32ul,
        'eigenvalue' / maybe(Complex),
        'tau' / maybe(Float64l),
        'approximate' / Flag,
    )
)

PointRecord = Struct(
    'Re' / Float64l,
    'c' / Float64l,
    'amplitude' / Float64l,
    'data' / ArrayBlock,
    'tangent' / ArrayBlock,
    'ds' / Float64l,
    'iterations' / Int32ul,
    'tau' / maybe(Float64l),
    'n_c' / maybe(Int32ul),
    'spectrum' / maybe(SpectrumRecord),
)


class ResumeAdapter(Adapter):  # type: ignore[type-arg]
    """Build :class:`.ResumeState` objects."""

    def _decode(self, obj: Container, context: Any, path: str) -> ResumeState:
        return ResumeState(ds=obj.ds, age=obj.age, jacobian=obj.jacobian)

    def _encode(self, obj: ResumeState, context: Any, path: str) -> dict[str, Any]:
        return {'ds': obj.ds, 'age': obj.age, 'jacobian': obj.jacobian}


ResumeRecord = ResumeAdapter(
    Struct(
        'ds' / Float64l,
        'age' / Int32ul,
        'jacobian' / maybe(ArrayBlock),
    )
)


class CurveAdapter(Adapter):  # type: ignore[type-arg]
    """Build :class:`.ContinuationCurve` objects."""

    def _decode(self, obj: Container, context: Any, path: str) -> ContinuationCurve:
        points = [
            ContinuationPoint(
                Re=p.Re,
                c=p.c,
                amplitude=p.amplitude,
                state=_state(obj.disc, obj.formulation, p.data),
                tangent=p.tangent,
                ds=p.ds,
                iterations=p.iterations,
                tau=p.tau,
                n_c=p.n_c,
                spectrum=p.spectrum,
            )
            for p in obj.points
        ]
        return ContinuationCurve(
            disc=obj.disc,
            formulation=_lookup(_FORMULATION_CODES, obj.formulation, 'formulation'),
            scaling=(obj.scaling[0], obj.scaling[1], obj.scaling[2]),
            points=points,
            events=list(obj.events),
            truncated=obj.truncated,
            message=obj.message,
            resume=obj.resume,
        )

    def _encode(self, obj: ContinuationCurve, context: Any, path: str) -> dict[str, Any]:
        return {
            'disc': obj.disc,
            'formulation': _FORMULATION_CODES[obj.formulation],
            'scaling': list(obj.scaling),
            'truncated': obj.truncated,
            'message': obj.message,
            'points': [
                {
                    'Re': p.Re,
                    'c': p.c,
                    'amplitude': p.amplitude,
                    'data': p.state.data,
                    'tangent': p.tangent,
                    'ds': p.ds,
                    'iterations': p.iterations,
                    'tau': p.tau,
                    'n_c': p.n_c,
                    'spectrum': p.spectrum,
                }
                for p in obj.points
            ],
            'events': obj.events,
            'resume': obj.resume,
        }


CurveRecord = CurveAdapter(
    Struct(
        'disc' / DiscretizationRecord,
        'formulation' / Int8ul,
        'scaling' / Array(3, Float64l),
        'truncated' / Flag,
        'message' / Text,
        'points' / PrefixedArray(Int32ul, PointRecord),
        'events' / PrefixedArray(Int32ul, EventRecord),
        'resume' / maybe(ResumeRecord),
    )
)

RECORDS: dict[RecordKind, tuple[type[Any], Construct]] = {  # type: ignore[type-arg]
    RecordKind.STATE: (SpectralState, StateRecord),
    RecordKind.SIMULATION: (SimulationCheckpoint, SimulationRecord),
    RecordKind.WAVE: (TravellingWave, WaveRecord),
    RecordKind.MODULATED: (ModulatedWave, ModulatedRecord),
    RecordKind.CURVE: (ContinuationCurve, CurveRecord),
}

CheckpointFrame = Struct(
    'magic' / Bytes(len(CHECKPOINT_MAGIC)),
    'version' / Int16ul,
    'kind' / Int8ul,
    'length' / Rebuild(Int64ul, len_(lambda this: this.payload)),
    'payload' / Bytes(lambda this: this.length),
    'crc' / Checksum(Int32ul, zlib.crc32, lambda this: this.payload),
    Terminated,
)


def record_kind(obj: Any) -> RecordKind:
    """
    Get the kind of record storing an object.

    Raises:
        CheckpointError: for objects that cannot be stored.

    """
    for kind, (cls, _) in RECORDS.items():
        if isinstance(obj, cls):
            return kind
    msg = f'Cannot checkpoint objects of type {type(obj).__name__}.'
    raise CheckpointError(msg)


def encode(obj: Checkpointable) -> bytes:
    """Serialize an object into a checkpoint frame."""
    kind = record_kind(obj)
    payload = RECORDS[kind][1].build(obj)
    return bytes(
        CheckpointFrame.build(
            {
                'magic': CHECKPOINT_MAGIC,
                'version': CHECKPOINT_VERSION,
                'kind': int(kind),
                'payload': payload,
            }
        )
    )


def decode(data: bytes) -> Checkpointable:
    """
    Deserialize a checkpoint frame.

    Raises:
        CheckpointVersionError: when the frame was written with another layout version.
        CheckpointCorruptedError: on a bad magic, a truncation or a checksum mismatch.

    Returns:
        The stored object.

    """
    try:
        frame = CheckpointFrame.parse(data)
    except ConstructError as exc:
        msg = f'Checkpoint frame is corrupted: {exc}'
        raise CheckpointCorruptedError(msg) from exc
    if frame.magic != CHECKPOINT_MAGIC:
        msg = f'Not a checkpoint (magic {frame.magic!r}).'
        raise CheckpointCorruptedError(msg)
    if frame.version != CHECKPOINT_VERSION:
        msg = f'Checkpoint version {frame.version} is not supported ({CHECKPOINT_VERSION}).'
        raise CheckpointVersionError(msg)
    try:
        kind = RecordKind(frame.kind)
    except ValueError as exc:
        msg = f'Unknown record kind {frame.kind}.'
        raise CheckpointCorruptedError(msg) from exc
    try:
        return RECORDS[kind][1].parse(frame.payload)  # type: ignore[no-any-return]
    except ConstructError as exc:
        msg = f'Checkpoint payload is corrupted: {exc}'
        raise CheckpointCorruptedError(msg) from exc


def save_checkpoint(path: str | Path, obj: Checkpointable) -> Path:
    """
    Write a checkpoint, replacing the target only once the frame is fully written.

    Returns:
        The path of the written file.

    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = encode(obj)
    tmp = path.with_name(path.name + '.tmp')
    tmp.write_bytes(data)
    os.replace(tmp, path)
    logger.info('Wrote %s checkpoint (%d bytes) to %s', record_kind(obj).name, len(data), path)
    return path


def load_checkpoint(path: str | Path, expected: type[_T] | None = None) -> _T:
    """
    Read a checkpoint.

    Args:
        path: checkpoint file.
        expected: type of the stored object, not checked by default.

    Raises:
        CheckpointError: when the stored object is not of the expected type.
        CheckpointVersionError: when the file was written with another layout version.
        CheckpointCorruptedError: when the file is damaged.

    Returns:
        The stored object.

    """
    obj = decode(Path(path).read_bytes())
    if expected is not None and not isinstance(obj, expected):
        msg = f'{path} holds a {type(obj).__name__}, expected {expected.__name__}.'
        raise CheckpointError(msg)
    return obj  # type: ignore[return-value]
