"""
Command-line entry point
Gaze-guided phishing-attention simulator
"""
import argparse
import logging
import os
import sys

import numpy as np
import pandas as pd

# Add source directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from analytics.attention import cal_series, fit_scores, synth_pupil_trace
from analytics.gaze_model import fixed_schedule, sample_inspection_time, simulate_session
from analytics.report_generator import ReportGenerator
from config import Config
from models.experiment import ExperimentConfig
from models.learning import QTable
from models.trajectory import SessionId
from services.experiment_service import ExperimentService
from services.export_service import ExportService
from utils.decorators import handle_errors
from utils.logger import setup_logging
from utils.seeding import FITTING_STREAM, SESSION_STREAM, SIMULATE_STREAM, derive_seed, make_rng
from utils.storage import load_experiment, store_scores
from utils.validation import ValidationError

logger = logging.getLogger(__name__)

COMMANDS = ('simulate', 'learn', 'tune', 'fit-scores', 'eval')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='gazeguard',
        description='Simulate gaze-driven visual aids for phishing recognition and tune them')
    parser.add_argument('command', choices=COMMANDS)
    parser.add_argument('--config', default=Config.DEFAULT_CONFIG_PATH,
                        help='Experiment YAML file (default: the shipped fixture)')
    parser.add_argument('--seed', type=int, default=None, help='Master seed (overrides experiment.seed)')
    parser.add_argument('--out', default=Config.OUTPUT_DIR, help='Output directory')
    parser.add_argument('--repeats', type=int, default=None, help='Repeats per evaluation (overrides experiment.n_rp)')
    parser.add_argument('--theta', default=None,
                        help='Comma-separated hyperparameters in box order, e.g. 5.56,180')
    parser.add_argument('--workers', type=int, default=None, help='Processes for repeated evaluations')
    parser.add_argument('--trace', default=None, help='fit-scores: pupil trace CSV (time_s,diameter)')
    parser.add_argument('--trajectory', default=None, help='fit-scores: trajectory CSV aligned with --trace')
    parser.add_argument('--sessions', type=int, default=5, help='fit-scores: sessions to generate')
    parser.add_argument('--noise', type=float, default=0.0, help='fit-scores: trace noise sd')
    parser.add_argument('--plots', action='store_true', help='Also write PNG figures')
    parser.add_argument('--log-level', default=None, help='DEBUG, INFO, WARNING or ERROR')
    return parser


def parse_theta(text, config: ExperimentConfig):
    if text is None:
        return config.default_theta()
    try:
        values = [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise ValidationError(f"--theta must be comma-separated numbers, got '{text}'")
    if len(values) != config.box.dims:
        raise ValidationError(f"--theta needs {config.box.dims} values ({', '.join(config.box.names)})")
    return np.array(values)


def prepare_config(args) -> ExperimentConfig:
    """Load the file, apply command-line overrides and calibrate if needed"""
    config = load_experiment(args.config)
    changes = {}
    if args.seed is not None:
        changes['seed'] = args.seed
    if args.repeats is not None:
        changes['n_rp'] = args.repeats
    workers = args.workers if args.workers is not None else (Config.WORKERS if Config.WORKERS > 1 else None)
    if workers is not None:
        changes['workers'] = workers
    if changes:
        config = config.replace(**changes)
    if not config.calibrated and args.command != 'fit-scores':
        config = ExperimentService.calibrate(config)
    return config


@handle_errors
def cmd_simulate(args, config: ExperimentConfig):
    theta = parse_theta(args.theta, config)
    attention, table = config.apply_theta(theta)
    qtable = QTable.zeros(attention.levels, config.dynamics.aids)
    session = ExperimentService.run_individual(
        config, qtable, config.learning.initial_state, theta,
        rng=make_rng(config.seed, SIMULATE_STREAM))

    export = ExportService(args.out)
    series = cal_series(session.trajectory, table, attention.period_s)
    export.write_csv(export.trajectory_frame([session.trajectory]), 'trajectory.csv')
    export.write_csv(series, 'cal_series.csv')
    export.write_json({
        'seed': config.seed,
        'theta': dict(zip(config.box.names, theta)),
        'duration_s': session.trajectory.duration,
        'stage_count': session.stage_count,
        'stage_aids': [a.name for a in session.trajectory.stage_aids],
        'stage_aals': session.stage_aals,
        'verdict': session.record.verdict.value,
        'p_correct': session.record.p_correct,
    }, 'summary.json')
    if args.plots:
        ReportGenerator(args.out).generate_all(config.dynamics, cal_series=series,
                                               stage_length=attention.period_s)
    print(f"simulated {session.trajectory.duration:.2f}s over {session.stage_count} stages")


@handle_errors
def cmd_learn(args, config: ExperimentConfig):
    theta = parse_theta(args.theta, config)
    population = ExperimentService.run_population(config, theta, derive_seed(config.seed, SESSION_STREAM))

    export = ExportService(args.out)
    qcurve = export.qcurve_frame(population)
    samples = export.aal_frame(population)
    export.write_csv(qcurve, 'qcurve.csv')
    export.write_json(export.qtable_dict(population.qtable), 'qtable.json')
    export.write_csv(export.records_frame(population, config.box.names), 'records.csv')
    export.write_csv(samples, 'aal_samples.csv')
    export.write_json({
        'seed': config.seed,
        'theta': dict(zip(config.box.names, theta)),
        'accuracy': population.accuracy,
        'mean_p_correct': population.mean_p_correct,
        'mean_aal': population.mean_aal,
        'total_stages': population.total_stages,
        'judgment': config.judgment.to_dict(),
    }, 'summary.json')
    if args.plots:
        ReportGenerator(args.out).generate_all(config.dynamics, qcurve=qcurve, aal_samples=samples)
    print(f"accuracy {population.accuracy:.3f} over {config.n_bo} sessions")


@handle_errors
def cmd_tune(args, config: ExperimentConfig):
    report = ExperimentService.run_tuning(config)
    surface = ExperimentService.surface(config, report)

    export = ExportService(args.out)
    export.write_csv(export.history_frame(report), 'history.csv')
    if surface is not None:
        export.write_csv(surface, 'surface.csv')
    summary = report.summary()
    summary.update({'n_bo': config.n_bo, 'n_rp': config.n_rp, 'judgment': config.judgment.to_dict()})
    export.write_json(summary, 'summary.json')
    if args.plots:
        ReportGenerator(args.out).generate_all(report=report, surface=surface)
    print(f"c* {report.c_star:.3f} at {', '.join(f'{n}={v:.4g}' for n, v in zip(report.names, report.theta_star))}")


@handle_errors
def cmd_fit_scores(args, config: ExperimentConfig):
    export = ExportService(args.out)
    attention, table = config.apply_theta(parse_theta(args.theta, config))
    rng = make_rng(config.seed, FITTING_STREAM)

    # 1. Observations: read a trace/trajectory pair or generate one per session
    if args.trace or args.trajectory:
        if not (args.trace and args.trajectory):
            raise ValidationError("--trace and --trajectory must be given together")
        traces = [export.read_trace(args.trace)]
        trajectories = [export.read_trajectory(args.trajectory, config.space, attention.period_s)]
    else:
        schedule = fixed_schedule(config.dynamics.aids[0])
        trajectories, traces = [], []
        for index in range(max(1, args.sessions)):
            T = sample_inspection_time(config.dynamics, rng)
            trajectory = simulate_session(config.dynamics, schedule, T, attention.period_s, rng,
                                          SessionId.from_index(index, config.emails_per_user))
            trajectories.append(trajectory)
            traces.append(synth_pupil_trace(trajectory, table, args.noise, rng,
                                            scale=attention.pupil_scale, T_pl=attention.period_s))

    # 2. Fit
    fit = fit_scores(traces, trajectories, rng, config.annealing, space=config.space,
                     scale=attention.pupil_scale, T_pl=attention.period_s)

    # 3. Export
    export.write_csv(export.trace_frame(traces[0]), 'pupil_trace.csv')
    export.write_csv(export.trajectory_frame(trajectories), 'trajectory.csv')
    store_scores(fit.table, export.path('fitted_scores.yaml'))
    export.write_json({
        'objective': fit.objective,
        'iterations': config.annealing.iterations,
        'samples_per_state': fit.samples_per_state,
        'fitted': fit.table.to_dict(),
        'reference': table.to_dict(),
    }, 'summary.json')
    print(f"fitted scores with MSE {fit.objective:.6g}")


@handle_errors
def cmd_eval(args, config: ExperimentConfig):
    theta = parse_theta(args.theta, config)
    frames, accuracies = [], []
    for repeat in range(config.n_rp):
        population = ExperimentService.run_population(
            config, theta, derive_seed(config.seed, SESSION_STREAM, 0, repeat))
        accuracies.append(population.accuracy)
        frame = ExportService.records_frame(population, config.box.names)
        frame.insert(0, 'repeat', repeat)
        frames.append(frame)

    export = ExportService(args.out)
    export.write_csv(pd.concat(frames, ignore_index=True), 'records.csv')
    print(f"{float(np.mean(accuracies)):.3f}")


HANDLERS = {
    'simulate': cmd_simulate,
    'learn': cmd_learn,
    'tune': cmd_tune,
    'fit-scores': cmd_fit_scores,
    'eval': cmd_eval,
}


@handle_errors
def run(args) -> int:
    config = prepare_config(args)
    return HANDLERS[args.command](args, config)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level or Config.LOG_LEVEL, Config.LOG_FILE)
    return run(args)


if __name__ == '__main__':
    sys.exit(main())
