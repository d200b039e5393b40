"""
Command-line driver.

Exit codes are ``0`` on success, ``2`` for invalid configurations, ``3`` when a time
integration diverged, ``4`` when an iterative method did not converge and ``1`` for any
other library error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from enum import IntEnum
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from . import integrator
from .checkpoint import SimulationCheckpoint, load_checkpoint, save_checkpoint
from .config import RunConfig, RunMode, load_config
from .continuation import ArclengthOptions
from .exceptions import (
    ConfigError,
    ConvergenceError,
    CrossingCountError,
    DivergenceError,
    LaminarDecayError,
    ParameterError,
    PoiseuilleError,
    SectionCrossingError,
)
from .export import (
    write_energy_history,
    write_events,
    write_modulated_branch,
    write_neutral_curve,
    write_spectrum,
    write_table,
    write_torus_section,
    write_wave_curve,
)
from .fields import field_snapshot, write_snapshot
from .models import (
    ContinuationCurve,
    EventKind,
    Formulation,
    ModulatedWave,
    StabilitySpectrum,
    TravellingWave,
)
from .newton import NewtonOptions
from .orrsommerfeld import critical_point, leading_eigenvalue, neutral_curve
from .quasiperiodic import (
    bootstrap_crossing_count,
    continue_modulated,
    hopf_initial_guess,
    record_torus_section,
    solve_modulated,
    stability_of_modulated,
)
from .spectral import build_discretization, build_operators
from .state import SpectralState
from .version import version
from .waves import (
    WaveSolverOptions,
    bootstrap_wave,
    continue_curve,
    fold_minimum,
    perturbed_laminar,
    resume_curve,
    solve_wave,
    stability_spectrum,
    with_spectrum,
)

if TYPE_CHECKING:
    from .spectral import Discretization

logger = logging.getLogger(__package__)


class ExitCode(IntEnum):
    """Process exit statuses."""

    SUCCESS = 0  #: Everything went fine.
    FAILURE = 1  #: Any other library error.
    INVALID = 2  #: The configuration did not validate.
    DIVERGED = 3  #: A time integration blew up.
    NOT_CONVERGED = 4  #: An iterative method gave up.


def exit_code_of(exc: BaseException) -> ExitCode:
    """Map a library error to its exit status."""
    if isinstance(exc, ParameterError):
        return ExitCode.INVALID
    if isinstance(exc, DivergenceError):
        return ExitCode.DIVERGED
    if isinstance(
        exc,
        ConvergenceError | SectionCrossingError | CrossingCountError | LaminarDecayError,
    ):
        return ExitCode.NOT_CONVERGED
    return ExitCode.FAILURE


def _discretization(config: RunConfig) -> Discretization:
    return build_discretization(config.n, config.m, config.alpha, dealias=config.dealias)


def _checkpoint(config: RunConfig) -> Any:
    return None if config.checkpoint is None else load_checkpoint(config.checkpoint)


def _solver(config: RunConfig) -> WaveSolverOptions:
    return WaveSolverOptions(
        newton=NewtonOptions(tol=config.tol_newton),
        workers=config.workers,
    )


def _arclength(config: RunConfig, **kwargs: Any) -> ArclengthOptions:
    return ArclengthOptions(
        ds=config.ds,
        ds_max=config.ds_max,
        max_steps=config.max_steps,
        **kwargs,
    )


def _state_of(obj: Any) -> tuple[SpectralState, float | None, float | None]:
    """Get the state held by a checkpointed object with its Re and speed, when known."""
    if isinstance(obj, SpectralState):
        return obj, None, None
    if isinstance(obj, SimulationCheckpoint):
        state = SpectralState(disc=obj.disc, formulation=obj.formulation, data=obj.state.U)
        return state, obj.Re, None
    if isinstance(obj, TravellingWave | ModulatedWave):
        return obj.state, obj.Re, obj.c
    if isinstance(obj, ContinuationCurve) and obj.points:
        last = obj.points[-1]
        return last.state, last.Re, last.c
    msg = f'Checkpoint holds no usable state ({type(obj).__name__}).'
    raise ConfigError(msg)


def _starting_wave(config: RunConfig, obj: Any) -> TravellingWave:
    """Converge the travelling wave a run starts from."""
    if isinstance(obj, TravellingWave):
        return obj
    solver = _solver(config)
    if obj is not None:
        state, Re, c = _state_of(obj)
        Re = config.re if config.re is not None else Re
        c = config.c if config.c is not None else c
        if Re is None or c is None:
            msg = 'Starting from a bare state requires re and c.'
            raise ConfigError(msg)
        return solve_wave(state.disc, Re, c, state, s1=config.s1, options=solver)

    disc = _discretization(config)
    if config.re is None:
        msg = 'A Reynolds number is required to bootstrap a wave.'
        raise ConfigError(msg)
    guess = bootstrap_wave(
        disc,
        config.re,
        formulation=config.formulation,
        dt=config.dt,
        perturbation=config.perturbation,
        t_max=config.t_end,
    )
    c = config.c if config.c is not None else guess.c
    logger.info('Bootstrapped wave guess at t=%.1f with c=%.6f', guess.t, c)
    return solve_wave(disc, guess.Re, c, guess.state, s1=config.s1, options=solver)


def run_orr_sommerfeld(config: RunConfig, params: dict[str, str]) -> list[Path]:
    """Compute a leading eigenvalue, or a neutral curve with its nose."""
    out = config.out_dir
    written = []
    if config.re is not None:
        value, modes = leading_eigenvalue(
            config.alpha, config.re, config.os_points, levels=config.os_levels
        )
        rows = [(m.n, m.eigenvalue.real, m.eigenvalue.imag, m.iterations) for m in modes]
        rows.append(('extrapolated', value.value.real, value.value.imag, None))
        written.append(
            write_table(
                out / 'eigenvalue.csv',
                'leading-eigenvalue',
                {**params, 'error': value.error, 'order': value.order},
                ('n', 'real', 'imag', 'iterations'),
                rows,
            )
        )
        logger.info('Leading eigenvalue: %s (error %.2e)', value.value, value.error)
    if config.re_min is not None and config.re_max is not None:
        lo = config.alpha_min if config.alpha_min is not None else config.alpha
        hi = config.alpha_max if config.alpha_max is not None else config.alpha
        alphas = np.linspace(lo, hi, config.alpha_count if hi > lo else 1)
        points = neutral_curve(
            [float(a) for a in alphas],
            config.re_range,
            config.os_points,
            levels=config.os_levels,
        )
        written.append(write_neutral_curve(out / 'neutral_curve.csv', points, params))
        if hi > lo:
            nose = critical_point(
                (lo, hi),
                config.re_range,
                config.os_points,
                levels=config.os_levels,
            )
            written.append(
                write_table(
                    out / 'critical_point.csv',
                    'critical-point',
                    params,
                    ('Re', 'alpha', 'c'),
                    [(nose.Re, nose.alpha, nose.c)],
                )
            )
    return written


def run_simulate(config: RunConfig, params: dict[str, str]) -> list[Path]:
    """Integrate in time from a checkpoint or from a perturbed laminar flow."""
    out = config.out_dir
    obj = _checkpoint(config)
    if isinstance(obj, SimulationCheckpoint):
        disc, formulation, Re = obj.disc, obj.formulation, obj.Re
        state = obj.state
        if config.re is not None and config.re != Re:
            Re = config.re
            state = integrator.restart(state)
        if state.dt != config.dt:
            state = integrator.start(state.U, config.dt, state.t)
    elif obj is not None:
        spectral, known_re, _ = _state_of(obj)
        disc, formulation = spectral.disc, spectral.formulation
        Re = config.re if config.re is not None else known_re
        if Re is None:
            msg = 'A Reynolds number is required to simulate a bare state.'
            raise ConfigError(msg)
        state = integrator.start(spectral.data, config.dt)
    else:
        disc, formulation = _discretization(config), config.formulation
        Re = float(config.re)  # type: ignore[arg-type]
        U = perturbed_laminar(disc, Re, formulation, config.perturbation)
        state = integrator.start(U, config.dt)

    ops = build_operators(disc, Re, dt=config.dt, formulation=formulation)
    t_end = state.t + config.t_end
    if config.torus_i is not None and config.torus_j is not None:
        section = record_torus_section(
            ops,
            state.U,
            config.t_end,
            (config.torus_i, config.torus_j),
            s1=config.s1,
            s2=config.s2,
            every=config.every,
        )
        return [write_torus_section(out / 'torus_section.csv', section, params)]

    observer = integrator.AmplitudeObserver(every=config.every)
    result = integrator.integrate(state, ops, t_end, [observer])
    final = SimulationCheckpoint(state=result.state, disc=disc, formulation=formulation, Re=Re)
    return [
        write_energy_history(out / 'energy_history.csv', observer.records, params),
        save_checkpoint(out / 'simulation.ckpt', final),
    ]


def _curve_outputs(
    out: Path,
    name: str,
    curve: ContinuationCurve,
    params: dict[str, str],
    writer: Callable[[Path, ContinuationCurve, dict[str, str]], Path],
) -> list[Path]:
    return [
        writer(out / f'{name}.csv', curve, params),
        write_events(out / f'{name}_events.csv', curve.events, params),
        save_checkpoint(out / f'{name}.ckpt', curve),
    ]


def run_wave_continue(config: RunConfig, params: dict[str, str]) -> list[Path]:
    """Follow a travelling-wave branch over the configured Reynolds range."""
    obj = _checkpoint(config)
    options = _arclength(config)
    solver = _solver(config)
    if isinstance(obj, ContinuationCurve):
        curve = resume_curve(
            obj,
            config.re_range,
            s1=config.s1,
            spectra=config.spectra,
            options=options,
            solver=solver,
        )
    else:
        start = _starting_wave(config, obj)
        save_checkpoint(config.out_dir / 'wave.ckpt', start)
        curve = continue_curve(
            start,
            config.re_range,
            direction=config.direction,
            s1=config.s1,
            spectra=config.spectra,
            options=options,
            solver=solver,
        )
    if curve.points:
        lowest = fold_minimum(curve)
        logger.info('Lowest Reynolds number: %.4f (c=%.6f)', lowest.Re, lowest.c)
    for event in curve.events:
        logger.info('%s at Re=%.4f, c=%.6f', event.kind.value, event.Re, event.c)
    return _curve_outputs(config.out_dir, 'wave_curve', curve, params, write_wave_curve)


def run_stability(config: RunConfig, params: dict[str, str]) -> list[Path]:
    """Compute the spectrum of a wave or the multipliers of a modulated wave."""
    obj = _checkpoint(config)
    spectrum: StabilitySpectrum
    if isinstance(obj, ModulatedWave):
        spectrum = stability_of_modulated(obj, dt=config.dt, workers=config.workers)
        name = 'multipliers.csv'
    else:
        wave = _starting_wave(config, obj)
        spectrum = wave.spectrum or stability_spectrum(wave)
        name = 'spectrum.csv'
        params = {**params, 'Re': str(wave.Re), 'c': str(wave.c)}
    logger.info('%d unstable, leading %s', spectrum.unstable_count, spectrum.leading)
    return [write_spectrum(config.out_dir / name, spectrum, params)]


def _hopf_waves(curve: ContinuationCurve) -> list[TravellingWave]:
    events = curve.events_of(EventKind.HOPF)
    if not events:
        msg = 'The checkpointed curve has no Hopf bifurcation.'
        raise ConfigError(msg)
    index = events[0].index
    return [
        TravellingWave(
            Re=p.Re,
            c=p.c,
            state=p.state,
            amplitude=p.amplitude,
            spectrum=p.spectrum,
        )
        for p in curve.points[max(index - 1, 0) : index + 1]
    ]


def _starting_modulated(config: RunConfig, obj: Any) -> ModulatedWave:
    if isinstance(obj, ModulatedWave):
        return obj
    if isinstance(obj, ContinuationCurve):
        waves = [w if w.spectrum is not None else with_spectrum(w) for w in _hopf_waves(obj)]
    elif isinstance(obj, TravellingWave):
        waves = [with_spectrum(obj)]
    else:
        msg = 'qp-continue starts from a modulated wave, a wave or a wave curve.'
        raise ConfigError(msg)
    guess = hopf_initial_guess(waves, dt=config.dt)
    disc = guess.state.disc
    tau = config.tau if config.tau is not None else guess.tau_hint
    n_c = config.n_c
    if n_c is None:
        ops = build_operators(
            disc, guess.Re, c=guess.c, dt=config.dt, formulation=guess.state.formulation
        )
        n_c, tau = bootstrap_crossing_count(ops, guess.state.data, tau, s1=config.s1)
    return solve_modulated(
        disc,
        guess.Re,
        guess.c,
        guess.state,
        n_c,
        tau,
        dt=config.dt,
        s1=config.s1,
        s2=config.s2,
        tol=config.tol_qp,
        workers=config.workers,
    )


def run_qp_continue(config: RunConfig, params: dict[str, str]) -> list[Path]:
    """Follow a modulated-wave branch over the configured Reynolds range."""
    start = _starting_modulated(config, _checkpoint(config))
    save_checkpoint(config.out_dir / 'modulated.ckpt', start)
    curve = continue_modulated(
        start,
        config.re_range,
        dt=config.dt,
        direction=config.direction,
        stability=config.stability,
        options=_arclength(config, refresh_every=5),
        workers=config.workers,
    )
    return _curve_outputs(
        config.out_dir, 'modulated_branch', curve, params, write_modulated_branch
    )


def run_field_export(config: RunConfig, params: dict[str, str]) -> list[Path]:
    """Export physical fields of a checkpointed state."""
    obj = _checkpoint(config)
    state, _, _ = _state_of(obj)
    out = config.out_dir
    if not isinstance(obj, ModulatedWave) or config.snapshots == 1:
        snapshot = field_snapshot(state, config.nx, config.ny)
        return [write_snapshot(out / 'field.dat', snapshot, params)]

    ops = build_operators(
        state.disc, obj.Re, c=obj.c, dt=config.dt, formulation=state.formulation
    )
    current = integrator.start(state.data, config.dt)
    written = []
    for j in range(config.snapshots):
        t = j * obj.tau / config.snapshots
        current = integrator.integrate(current, ops, t).state
        snapshot = field_snapshot(state.with_data(current.U), config.nx, config.ny, t=t)
        written.append(write_snapshot(out / f'field_{j:02d}.dat', snapshot, params))
    return written


PIPELINES: dict[RunMode, Callable[[RunConfig, dict[str, str]], list[Path]]] = {
    RunMode.ORR_SOMMERFELD: run_orr_sommerfeld,
    RunMode.SIMULATE: run_simulate,
    RunMode.WAVE_CONTINUE: run_wave_continue,
    RunMode.STABILITY: run_stability,
    RunMode.QP_CONTINUE: run_qp_continue,
    RunMode.FIELD_EXPORT: run_field_export,
}


def run(config: RunConfig) -> ExitCode:
    """
    Run the pipeline selected by a validated configuration.

    Returns:
        The exit status, errors being logged rather than raised.

    """
    config.out_dir.mkdir(parents=True, exist_ok=True)
    try:
        written = PIPELINES[config.mode](config, config.parameters())
    except PoiseuilleError as exc:
        code = exit_code_of(exc)
        logger.error('%s failed (%s): %s', config.mode.value, code.name, exc)  # noqa: TRY400
        return code
    for path in written:
        logger.info('Wrote %s', path)
    return ExitCode.SUCCESS


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser, leaving unset flags to :obj:`None`."""
    parser = argparse.ArgumentParser(
        prog='poiseuille2d',
        description='Travelling and modulated waves of two-dimensional Poiseuille flow.',
        argument_default=None,
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {version}')
    parser.add_argument('--config', type=Path, help='key = value configuration file')
    parser.add_argument('-v', '--verbose', action='store_true', help='log debug messages')
    parser.add_argument('--mode', choices=[mode.value for mode in RunMode])
    parser.add_argument('--re', type=float, help='Reynolds number')
    parser.add_argument('--re-min', type=float, help='lower end of the Reynolds range')
    parser.add_argument('--re-max', type=float, help='upper end of the Reynolds range')
    parser.add_argument('--alpha', type=float, help='streamwise wavenumber')
    parser.add_argument('--alpha-min', type=float, help='first wavenumber of a sweep')
    parser.add_argument('--alpha-max', type=float, help='last wavenumber of a sweep')
    parser.add_argument('--alpha-count', type=int, help='wavenumbers of a sweep')
    parser.add_argument('--n', type=int, help='highest Fourier mode')
    parser.add_argument('--m', type=int, help='Chebyshev degree (even)')
    parser.add_argument('--dt', type=float, help='time step')
    parser.add_argument('--formulation', choices=[f.value for f in Formulation])
    parser.add_argument('--c', type=float, help='phase speed guess')
    parser.add_argument('--tol-newton', type=float, help='wave Newton tolerance')
    parser.add_argument('--tol-qp', type=float, help='modulated-wave Newton tolerance')
    parser.add_argument('--s1', type=float, help='first phase section level')
    parser.add_argument('--s2', type=float, help='second phase section level')
    parser.add_argument('--workers', type=int, help='threads for Jacobian columns')
    parser.add_argument('--checkpoint', type=Path, help='checkpoint to start from')
    parser.add_argument('--out-dir', type=Path, help='output directory')
    parser.add_argument('--direction', type=int, choices=(-1, 1), help='initial Re direction')
    parser.add_argument('--max-steps', type=int, help='continuation steps')
    parser.add_argument('--t-end', type=float, help='integration time')
    parser.add_argument('--nx', type=int, help='streamwise points of exported fields')
    parser.add_argument('--ny', type=int, help='wall-normal points of exported fields')
    parser.add_argument('--snapshots', type=int, help='snapshots over one return')
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point of the ``poiseuille2d`` command."""
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    config_path = args.pop('config')
    verbose = args.pop('verbose')
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )
    try:
        config = load_config(config_path, args)
    except ConfigError as exc:
        logger.error('%s', exc)  # noqa: TRY400
        return ExitCode.INVALID
    logger.info('poiseuille2d %s: %s', version, config.mode.value)
    return run(config)


if __name__ == '__main__':
    sys.exit(main())
