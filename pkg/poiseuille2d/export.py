"""
Self-describing CSV tables.

Every file starts with ``#`` lines holding the table schema and its version, the package
version and the parameters of the run, followed by a CSV header and the rows.
"""

from __future__ import annotations

import csv
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from .version import version

if TYPE_CHECKING:
    from .models import (
        BifurcationEvent,
        ContinuationCurve,
        NeutralPoint,
        StabilitySpectrum,
    )
    from .quasiperiodic import TorusSection

logger = logging.getLogger(__package__)

#: Version of the column layouts, bumped whenever a column changes.
SCHEMA_VERSION = 1

NEUTRAL_COLUMNS = ('alpha', 'Re', 'frequency', 'upper')
WAVE_COLUMNS = (
    'index',
    'Re',
    'c',
    'amplitude',
    'ds',
    'iterations',
    'unstable',
    'leading_real',
    'leading_imag',
    'events',
)
MODULATED_COLUMNS = (
    'index',
    'Re',
    'c',
    'tau',
    'n_c',
    'amplitude',
    'ds',
    'iterations',
    'unstable',
    'radius',
    'events',
)
SPECTRUM_COLUMNS = ('index', 'real', 'imag', 'modulus')
EVENT_COLUMNS = (
    'kind',
    'index',
    'Re',
    'c',
    'amplitude',
    'eigen_real',
    'eigen_imag',
    'tau',
    'approximate',
)
HISTORY_COLUMNS = ('t', 'amplitude')
TORUS_COLUMNS = ('set', 't', 'x_i', 'x_j')


def format_value(value: Any) -> str:
    """Format a value for headers and cells, with floats written exactly."""
    if value is None:
        return ''
    if isinstance(value, bool | np.bool_):
        return 'true' if value else 'false'
    if isinstance(value, float | np.floating):
        return repr(float(value))
    if hasattr(value, 'value') and not isinstance(value, str | int):
        return str(value.value)
    return str(value)


def header_lines(
    schema: str,
    parameters: Mapping[str, Any],
    columns: Sequence[str] = (),
) -> list[str]:
    """
    Build the ``#`` header of an output file.

    Args:
        schema: name of the table layout.
        parameters: parameters of the run, written sorted by name.
        columns: column names, recorded for readers skipping the CSV header.

    Returns:
        Header lines without line terminators.

    """
    lines = [
        f'# schema: {schema}/{SCHEMA_VERSION}',
        f'# version: {version}',
    ]
    lines.extend(f'# {key}: {format_value(parameters[key])}' for key in sorted(parameters))
    if columns:
        lines.append(f'# columns: {",".join(columns)}')
    return lines


def read_header(path: str | Path) -> dict[str, str]:
    """Read the ``key: value`` pairs of the header of an output file."""
    out = {}
    with Path(path).open(encoding='utf-8') as fh:
        for line in fh:
            if not line.startswith('#'):
                break
            key, _, value = line[1:].strip().partition(':')
            out[key.strip()] = value.strip()
    return out


def read_table(path: str | Path) -> list[dict[str, str]]:
    """Read the rows of a CSV table written by this module."""
    with Path(path).open(encoding='utf-8', newline='') as fh:
        lines = [line for line in fh if not line.startswith('#')]
    return list(csv.DictReader(lines))


def write_table(
    path: str | Path,
    schema: str,
    parameters: Mapping[str, Any],
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
) -> Path:
    """
    Write a table with its header.

    Returns:
        The path of the written file.

    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8', newline='') as fh:
        for line in header_lines(schema, parameters, columns):
            fh.write(line + '\n')
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(columns)
        count = 0
        for row in rows:
            writer.writerow([format_value(v) for v in row])
            count += 1
    logger.info('Wrote %d rows to %s', count, path)
    return path


def write_neutral_curve(
    path: str | Path,
    points: Sequence[NeutralPoint],
    parameters: Mapping[str, Any],
) -> Path:
    """Write points of the neutral curve, one row per wavenumber and branch."""
    rows = ((p.alpha, p.Re, p.frequency, p.upper) for p in points)
    return write_table(path, 'neutral-curve', parameters, NEUTRAL_COLUMNS, rows)


def _event_labels(events: Sequence[BifurcationEvent]) -> dict[int, str]:
    labels: dict[int, list[str]] = {}
    for event in events:
        labels.setdefault(event.index, []).append(event.kind.value)
    return {index: '+'.join(kinds) for index, kinds in labels.items()}


def write_wave_curve(
    path: str | Path,
    curve: ContinuationCurve,
    parameters: Mapping[str, Any],
) -> Path:
    """Write a travelling-wave curve with the stability of every point."""
    labels = _event_labels(curve.events)

    def rows() -> Iterable[Sequence[Any]]:
        for i, p in enumerate(curve.points):
            leading = p.spectrum.leading if p.spectrum is not None else None
            yield (
                i,
                p.Re,
                p.c,
                p.amplitude,
                p.ds,
                p.iterations,
                None if p.spectrum is None else p.spectrum.unstable_count,
                None if leading is None else leading.real,
                None if leading is None else leading.imag,
                labels.get(i, ''),
            )

    params = {**parameters, 'truncated': curve.truncated, 'scaling': curve.scaling}
    return write_table(path, 'wave-curve', params, WAVE_COLUMNS, rows())


def write_modulated_branch(
    path: str | Path,
    curve: ContinuationCurve,
    parameters: Mapping[str, Any],
) -> Path:
    """Write a branch of modulated waves with return times and multiplier radii."""
    labels = _event_labels(curve.events)

    def rows() -> Iterable[Sequence[Any]]:
        for i, p in enumerate(curve.points):
            spectrum = p.spectrum
            radius = abs(spectrum.leading) if spectrum is not None else None
            yield (
                i,
                p.Re,
                p.c,
                p.tau,
                p.n_c,
                p.amplitude,
                p.ds,
                p.iterations,
                None if spectrum is None else spectrum.unstable_count,
                radius,
                labels.get(i, ''),
            )

    params = {**parameters, 'truncated': curve.truncated, 'scaling': curve.scaling}
    return write_table(path, 'modulated-branch', params, MODULATED_COLUMNS, rows())


def write_spectrum(
    path: str | Path,
    spectrum: StabilitySpectrum,
    parameters: Mapping[str, Any],
) -> Path:
    """Write eigenvalues (or multipliers) in their stored order."""
    rows = (
        (i, float(z.real), float(z.imag), float(abs(z)))
        for i, z in enumerate(np.asarray(spectrum.eigenvalues))
    )
    params = {
        **parameters,
        'trivial': spectrum.trivial,
        'unstable_count': spectrum.unstable_count,
    }
    return write_table(path, 'spectrum', params, SPECTRUM_COLUMNS, rows)


def write_events(
    path: str | Path,
    events: Sequence[BifurcationEvent],
    parameters: Mapping[str, Any],
) -> Path:
    """Write bifurcations located along a curve."""
    rows = (
        (
            e.kind.value,
            e.index,
            e.Re,
            e.c,
            e.amplitude,
            None if e.eigenvalue is None else e.eigenvalue.real,
            None if e.eigenvalue is None else e.eigenvalue.imag,
            e.tau,
            e.approximate,
        )
        for e in events
    )
    return write_table(path, 'events', parameters, EVENT_COLUMNS, rows)


def write_energy_history(
    path: str | Path,
    samples: Sequence[tuple[float, float]],
    parameters: Mapping[str, Any],
) -> Path:
    """Write a sampled ``(t, amplitude)`` history."""
    return write_table(path, 'energy-history', parameters, HISTORY_COLUMNS, samples)


def write_torus_section(
    path: str | Path,
    section: TorusSection,
    parameters: Mapping[str, Any],
) -> Path:
    """
    Write trajectory samples and section points of two state coordinates.

    Rows of the ``trajectory`` set come first, then those of the ``section`` set.
    """

    def rows() -> Iterable[Sequence[Any]]:
        for name, block in (('trajectory', section.trajectory), ('section', section.section)):
            for t, xi, xj in np.asarray(block).reshape(-1, 3):
                yield (name, float(t), float(xi), float(xj))

    params = {**parameters, 'i': section.indices[0], 'j': section.indices[1]}
    return write_table(path, 'torus-section', params, TORUS_COLUMNS, rows())


def parse_float(cell: str) -> float:
    """Parse a numeric cell, empty cells giving ``nan``."""
    return float(cell) if cell else math.nan
