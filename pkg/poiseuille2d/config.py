"""
Run configuration.

Configurations are read from flat ``key = value`` files, where ``#`` starts a comment and
dashes and underscores are interchangeable in keys, then overridden by explicit values
(typically command-line flags).
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Any

import dacite

from .exceptions import ConfigError
from .export import format_value
from .models import Formulation

if TYPE_CHECKING:
    from collections.abc import Mapping

logger = logging.getLogger(__package__)


class RunMode(Enum):
    """Pipelines the command-line driver can run."""

    ORR_SOMMERFELD = 'orr-sommerfeld'  #: Eigenvalues and neutral curve of the laminar flow.
    SIMULATE = 'simulate'  #: Time integration.
    WAVE_CONTINUE = 'wave-continue'  #: Travelling-wave continuation in Re.
    STABILITY = 'stability'  #: Spectrum of a wave, or multipliers of a modulated wave.
    QP_CONTINUE = 'qp-continue'  #: Modulated-wave continuation in Re.
    FIELD_EXPORT = 'field-export'  #: Physical fields of a checkpointed state.


_TRUE = frozenset({'1', 'true', 'yes', 'on'})
_FALSE = frozenset({'0', 'false', 'no', 'off'})


def _to_bool(value: Any) -> bool:
    if isinstance(value, str):
        text = value.strip().lower()
        if text in _TRUE:
            return True
        if text in _FALSE:
            return False
        msg = f'Not a boolean: {value!r}'
        raise ValueError(msg)
    return bool(value)


def _to_int(value: Any) -> int:
    if isinstance(value, str):
        return int(value.strip())
    if isinstance(value, float) and not value.is_integer():
        msg = f'Not an integer: {value!r}'
        raise ValueError(msg)
    return int(value)


_dacite_config = dacite.Config(
    cast=[Enum, Path],
    strict=True,
    type_hooks={
        bool: _to_bool,
        float: lambda value: float(value.strip()) if isinstance(value, str) else float(value),
        int: _to_int,
    },
)


@dataclass(frozen=True)
class RunConfig:
    """Parameters of a run, validated as a whole before any computation starts."""

    #: Pipeline to run.
    mode: RunMode

    #: Reynolds number of the starting point or of the single evaluation.
    re: float | None = None

    #: Lower bound of the Reynolds range of continuations and neutral-curve searches.
    re_min: float | None = None

    #: Upper bound of the Reynolds range.
    re_max: float | None = None

    #: Fundamental streamwise wavenumber.
    alpha: float = 1.0

    #: First wavenumber of a neutral-curve sweep.
    alpha_min: float | None = None

    #: Last wavenumber of a neutral-curve sweep.
    alpha_max: float | None = None

    #: Number of wavenumbers of a neutral-curve sweep.
    alpha_count: int = 9

    #: Highest Fourier mode.
    n: int = 4

    #: Chebyshev degree.
    m: int = 32

    #: Zero the nonlinear term above two thirds of the modes.
    dealias: bool = False

    #: Time step.
    dt: float = 0.02

    #: How the flow is driven.
    formulation: Formulation = Formulation.PRESSURE

    #: Phase (or frame) speed guess, estimated by simulation when missing.
    c: float | None = None

    #: Newton tolerance of travelling waves.
    tol_newton: float = 1.0e-10

    #: Newton tolerance of modulated waves.
    tol_qp: float = 1.0e-8

    #: Level of the first phase section.
    s1: float = 0.0

    #: Level of the second phase section, taken from the starting state when missing.
    s2: float | None = None

    #: Threads evaluating Jacobian columns.
    workers: int | None = None

    #: Checkpoint to start from.
    checkpoint: Path | None = None

    #: Directory receiving every output.
    out_dir: Path = field(default_factory=lambda: Path('.'))

    #: Initial direction of continuations in Re (``1`` or ``-1``).
    direction: int = 1

    #: Initial arclength step.
    ds: float = 1.0

    #: Largest arclength step.
    ds_max: float = 16.0

    #: Number of continuation steps.
    max_steps: int = 100

    #: Final time of simulations.
    t_end: float = 1000.0

    #: Size of the laminar perturbation starting simulations.
    perturbation: float = 1.0e-2

    #: Interior points of the coarsest Orr-Sommerfeld grid.
    os_points: int = 300

    #: Grid levels of the Orr-Sommerfeld extrapolation.
    os_levels: int = 3

    #: Compute spectra along wave continuations.
    spectra: bool = True

    #: Compute multipliers along modulated-wave continuations.
    stability: bool = False

    #: Streamwise points of exported fields.
    nx: int = 64

    #: Wall-normal points of exported fields.
    ny: int = 65

    #: Snapshots exported over one return of a modulated wave.
    snapshots: int = 1

    #: Time steps between recorded samples.
    every: int = 10

    #: First coordinate recorded on torus sections.
    torus_i: int | None = None

    #: Second coordinate recorded on torus sections.
    torus_j: int | None = None

    #: Section crossings per return of modulated waves.
    n_c: int | None = None

    #: Return-time guess of modulated waves.
    tau: float | None = None

    def validate(self) -> None:
        """
        Check every parameter before anything is computed.

        Raises:
            ConfigError: listing every invalid parameter.

        """
        errors = [*self._range_errors(), *self._mode_errors()]
        if errors:
            msg = 'Invalid configuration: ' + '; '.join(errors)
            raise ConfigError(msg)

    def _range_errors(self) -> list[str]:
        errors = []
        if self.n < 1:
            errors.append(f'n must be at least 1 (got {self.n})')
        if self.m < 6 or self.m % 2:
            errors.append(f'm must be even and at least 6 (got {self.m})')
        positive = {
            'alpha': self.alpha,
            'dt': self.dt,
            'tol_newton': self.tol_newton,
            'tol_qp': self.tol_qp,
            'ds': self.ds,
            'ds_max': self.ds_max,
            't_end': self.t_end,
            'perturbation': self.perturbation,
            're': self.re,
            're_min': self.re_min,
            're_max': self.re_max,
            'alpha_min': self.alpha_min,
            'alpha_max': self.alpha_max,
            'tau': self.tau,
        }
        errors.extend(
            f'{key} must be positive (got {value})'
            for key, value in positive.items()
            if value is not None and not value > 0.0
        )
        at_least_one = {
            'workers': self.workers,
            'max_steps': self.max_steps,
            'alpha_count': self.alpha_count,
            'os_levels': self.os_levels,
            'nx': self.nx,
            'snapshots': self.snapshots,
            'every': self.every,
            'n_c': self.n_c,
        }
        errors.extend(
            f'{key} must be at least 1 (got {value})'
            for key, value in at_least_one.items()
            if value is not None and value < 1
        )
        if self.ny < 2:
            errors.append(f'ny must be at least 2 (got {self.ny})')
        if self.os_points < 16:
            errors.append(f'os_points must be at least 16 (got {self.os_points})')
        if self.ds > self.ds_max:
            errors.append(f'ds ({self.ds}) exceeds ds_max ({self.ds_max})')
        if self.direction not in (-1, 1):
            errors.append(f'direction must be 1 or -1 (got {self.direction})')
        if self.re_min is not None and self.re_max is not None and self.re_min >= self.re_max:
            errors.append(f're_min ({self.re_min}) must be below re_max ({self.re_max})')
        if (
            self.alpha_min is not None
            and self.alpha_max is not None
            and self.alpha_min > self.alpha_max
        ):
            errors.append(f'alpha_min ({self.alpha_min}) exceeds alpha_max ({self.alpha_max})')
        if (self.torus_i is None) != (self.torus_j is None):
            errors.append('torus_i and torus_j must be given together')
        return errors

    def _mode_errors(self) -> list[str]:
        errors = []
        has_range = self.re_min is not None and self.re_max is not None
        has_start = self.re is not None or self.checkpoint is not None
        if self.mode is RunMode.ORR_SOMMERFELD and self.re is None and not has_range:
            errors.append('orr-sommerfeld needs re, or re_min and re_max')
        if self.mode in (RunMode.SIMULATE, RunMode.STABILITY) and not has_start:
            errors.append(f'{self.mode.value} needs re or a checkpoint')
        if self.mode is RunMode.WAVE_CONTINUE:
            if not has_range:
                errors.append('wave-continue needs re_min and re_max')
            if not has_start:
                errors.append('wave-continue needs re or a checkpoint')
        if self.mode is RunMode.QP_CONTINUE:
            if not has_range:
                errors.append('qp-continue needs re_min and re_max')
            if self.checkpoint is None:
                errors.append('qp-continue needs a checkpoint')
        if self.mode is RunMode.FIELD_EXPORT and self.checkpoint is None:
            errors.append('field-export needs a checkpoint')
        if self.checkpoint is not None and not self.checkpoint.is_file():
            errors.append(f'checkpoint {self.checkpoint} does not exist')
        return errors

    @property
    def re_range(self) -> tuple[float, float]:
        """Reynolds range of continuations."""
        if self.re_min is None or self.re_max is None:
            msg = 'Reynolds range is not configured.'
            raise ConfigError(msg)
        return (self.re_min, self.re_max)

    def parameters(self) -> dict[str, str]:
        """Get every parameter formatted for output headers."""
        return {f.name: format_value(getattr(self, f.name)) for f in dataclasses.fields(self)}


def normalize_key(key: str) -> str:
    """Map a configuration key to its field name."""
    return key.strip().lower().replace('-', '_')


def parse_config_text(text: str) -> dict[str, str]:
    """
    Parse ``key = value`` lines.

    Raises:
        ConfigError: on lines without ``=`` or on repeated keys.

    """
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        if not sep:
            msg = f'Line {lineno}: expected "key = value", got {raw.strip()!r}.'
            raise ConfigError(msg)
        name = normalize_key(key)
        if name in out:
            msg = f'Line {lineno}: key {name!r} is set twice.'
            raise ConfigError(msg)
        out[name] = value.strip()
    return out


def build_config(data: Mapping[str, Any]) -> RunConfig:
    """
    Build and validate a configuration from raw values.

    Empty strings and :obj:`None` leave parameters at their defaults.

    Raises:
        ConfigError: on unknown keys, unparsable values or invalid parameters.

    """
    cleaned = {
        normalize_key(key): value
        for key, value in data.items()
        if value is not None and value != ''
    }
    try:
        config = dacite.from_dict(data_class=RunConfig, data=cleaned, config=_dacite_config)
    except (dacite.DaciteError, ValueError, TypeError) as exc:
        msg = f'Invalid configuration: {exc}'
        raise ConfigError(msg) from exc
    config.validate()
    logger.debug('Configuration: %s', config)
    return config


def load_config(
    path: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> RunConfig:
    """
    Read a configuration file and apply overrides on top of it.

    Args:
        path: ``key = value`` file, optional.
        overrides: values taking precedence over the file.

    Raises:
        ConfigError: when the file cannot be read or the result is invalid.

    Returns:
        The validated configuration.

    """
    data: dict[str, Any] = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding='utf-8')
        except OSError as exc:
            msg = f'Cannot read configuration {path}: {exc}'
            raise ConfigError(msg) from exc
        data.update(parse_config_text(text))
    for key, value in (overrides or {}).items():
        if value is not None:
            data[normalize_key(key)] = value
    return build_config(data)
