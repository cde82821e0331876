"""
Experiment Service - runs the attention-enhancement loops.

Sessions feed the learner stage by stage, populations cascade one Q-table
over N_bo sessions, and tuning wraps repeated populations in Bayesian
optimization.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence

import numpy as np

from analytics.attention import aal, cal, quantize, representatives
from analytics.bayesopt import ConditioningError, posterior_surface, tune
from analytics.gaze_model import sample_inspection_time, simulate_session
from analytics.judgment import (accuracy, calibrate_baseline, extract_features, judge,
                                mean_probability, probability_correct)
from analytics.policy import epsilon_at, q_update, record_visit, select_aid
from models.experiment import ExperimentConfig, PopulationResult, RunReport, SessionResult
from models.judgment import JudgmentRecord
from models.learning import QTable
from models.trajectory import SessionId
from utils.seeding import (CALIBRATION_STREAM, SESSION_STREAM, TUNING_STREAM, SeedLike,
                           derive_seed, make_rng)

logger = logging.getLogger(__name__)


class ExperimentService:
    """Orchestrates sessions, populations and tuning runs"""

    @staticmethod
    def calibrate(config: ExperimentConfig, seed: Optional[SeedLike] = None) -> ExperimentConfig:
        """Fit the judgment intercept to the no-aid baseline accuracy"""
        seed = config.seed if seed is None else seed
        attention, table = config.apply_theta()
        baseline = config.dynamics.restricted_to([config.dynamics.aids[0].name])
        model = calibrate_baseline(
            config.judgment, config.calibration.target, baseline, table, attention.period_s,
            sessions=config.calibration.sessions,
            rng=make_rng(seed, CALIBRATION_STREAM),
            tolerance=config.calibration.tolerance)
        return config.replace(judgment=model, calibrated=True)

    @staticmethod
    def run_individual(config: ExperimentConfig, qtable: QTable, x0: int, theta=None,
                       rng: Optional[np.random.Generator] = None,
                       global_stage: int = 0,
                       session_id: SessionId = SessionId(0, 0),
                       fixed_aid: Optional[str] = None,
                       inspection_time: Optional[float] = None) -> SessionResult:
        """
        One participant reading one email.

        At every stage boundary: AAL of the finished stage, its attention
        state, the visit and Q update for the previous (state, aid), then
        the epsilon-greedy aid for the next stage. The first aid comes from
        the initial state. A final partial stage is judged but never learned
        from.

        Args:
            config: Experiment configuration
            qtable: Q-table carried in from the previous session
            x0: Attention state carried in
            theta: Hyperparameters (the configured theta by default)
            rng: Session random stream
            global_stage: Stages completed before this session (drives epsilon)
            session_id: (user, email)
            fixed_aid: Apply this aid throughout and skip learning
            inspection_time: Session length; drawn from the Burr law when omitted

        Returns:
            SessionResult with the updated table and the verdict
        """
        rng = rng if rng is not None else np.random.default_rng()
        attention, table = config.apply_theta(theta)
        T_pl = attention.period_s
        levels = representatives(attention, table)
        params = config.learning
        aids = config.dynamics.aids

        # 1. Session length, then the verdict uniform, both ahead of any gaze draw
        T = sample_inspection_time(config.dynamics, rng) if inspection_time is None else float(inspection_time)
        verdict_draw = rng.random()

        state = {'q': qtable, 'x': int(x0), 'aid': None, 'stage': int(global_stage)}
        result = SessionResult(qtable=qtable, final_state=int(x0), trajectory=None, record=None,
                               stage_count=0, first_stage=int(global_stage))

        # 2. Controller consulted at every stage boundary
        def controller(k, previous_stage):
            if fixed_aid is not None:
                if k > 0:
                    result.stage_aals.append(aal(cal(previous_stage, table, T_pl), T_pl))
                    result.stage_states.append(state['x'])
                    result.stage_aids.append(fixed_aid)
                    state['x'] = quantize(result.stage_aals[-1], attention)
                return config.dynamics.aid(fixed_aid)
            if k > 0:
                level = aal(cal(previous_stage, table, T_pl), T_pl)
                x_next = quantize(level, attention)
                q = record_visit(state['q'], state['x'], state['aid'])
                q = q_update(q, state['x'], state['aid'], float(levels[x_next]), x_next, params)
                result.stage_aals.append(level)
                result.stage_states.append(state['x'])
                result.stage_aids.append(state['aid'].name)
                result.q_snapshots.append(q.q.copy())
                state.update(q=q, x=x_next, stage=state['stage'] + 1)
            epsilon = epsilon_at(state['stage'], params.epsilon)
            state['aid'] = select_aid(state['q'], state['x'], epsilon, rng)
            return state['aid']

        # 3. Simulate
        trajectory = simulate_session(config.dynamics, controller, T, T_pl, rng, session_id)

        # 4. Judge the whole session
        features = extract_features(trajectory, table, T_pl)
        p_correct = probability_correct(config.judgment, features)
        verdict = judge(config.judgment, features, rng, draw=verdict_draw)
        theta_values = tuple(float(v) for v in (config.default_theta() if theta is None else theta))

        result.qtable = state['q']
        result.final_state = state['x']
        result.trajectory = trajectory
        result.stage_count = len(result.stage_aals)
        result.record = JudgmentRecord(session_id, verdict, theta_values, p_correct)
        logger.debug(f"Session {session_id}: T={T:.2f}s K={result.stage_count} verdict={verdict.value}")
        return result

    @staticmethod
    def run_population(config: ExperimentConfig, theta=None, seed: Optional[SeedLike] = None,
                       fixed_aid: Optional[str] = None, n_sessions: Optional[int] = None) -> PopulationResult:
        """
        Cascade one zero-initialized Q-table through N_bo sessions.

        Session n draws from its own stream keyed by n under `seed`.
        """
        seed = derive_seed(config.seed, SESSION_STREAM) if seed is None else seed
        n_sessions = config.n_bo if n_sessions is None else int(n_sessions)
        qtable = QTable.zeros(config.attention.levels if theta is None else
                              config.apply_theta(theta)[0].levels, config.dynamics.aids)
        x = config.learning.initial_state
        stage = 0
        sessions: List[SessionResult] = []

        for index in range(n_sessions):
            session = ExperimentService.run_individual(
                config, qtable, x, theta,
                rng=make_rng(seed, index),
                global_stage=stage,
                session_id=SessionId.from_index(index, config.emails_per_user),
                fixed_aid=fixed_aid)
            qtable, x = session.qtable, session.final_state
            stage += session.stage_count
            sessions.append(session)

        records = [s.record for s in sessions]
        result = PopulationResult(
            theta=records[0].theta,
            accuracy=accuracy(records),
            mean_p_correct=mean_probability(records),
            qtable=qtable,
            records=records,
            sessions=sessions)
        logger.info(f"Population of {n_sessions} sessions: accuracy={result.accuracy:.3f} "
                    f"E[p]={result.mean_p_correct:.3f} stages={stage}")
        return result

    @staticmethod
    def evaluate(config: ExperimentConfig, theta, stage: int, repeats: Optional[int] = None,
                 workers: Optional[int] = None) -> List[float]:
        """Accuracies of `repeats` independent populations at theta"""
        repeats = config.n_rp if repeats is None else int(repeats)
        workers = config.workers if workers is None else int(workers)
        jobs = [(config, tuple(float(v) for v in theta), derive_seed(config.seed, SESSION_STREAM, stage, r))
                for r in range(repeats)]
        if workers > 1 and repeats > 1:
            with ProcessPoolExecutor(max_workers=min(workers, repeats)) as pool:
                return list(pool.map(_population_accuracy, jobs))
        return [_population_accuracy(job) for job in jobs]

    @staticmethod
    def run_tuning(config: ExperimentConfig, workers: Optional[int] = None) -> RunReport:
        """
        Bayesian optimization of theta over the config box.

        Each tuning stage scores theta by the mean accuracy of n_rp
        populations; their mean and variance are kept per stage.
        """
        counter = {'stage': 0}
        means, variances = {}, {}

        def evaluator(theta):
            counter['stage'] += 1
            values = ExperimentService.evaluate(config, theta, counter['stage'], workers=workers)
            means[counter['stage']] = float(np.mean(values))
            variances[counter['stage']] = float(np.var(values, ddof=1)) if len(values) > 1 else 0.0
            return means[counter['stage']]

        search = config.search
        result = tune(evaluator, config.box, config.L, config.L0,
                      make_rng(config.seed, TUNING_STREAM),
                      restarts=search.mle_restarts, starts=search.starts, steps=search.steps,
                      refit_kernel=search.refit_kernel)

        logger.info(f"Tuning finished: c*={result.best_value:.4f} at "
                    f"{dict(zip(config.box.names, np.round(result.best_theta, 4).tolist()))}")
        return RunReport(
            names=tuple(config.box.names),
            history=result.history,
            theta_star=tuple(float(v) for v in result.best_theta),
            c_star=result.best_value,
            L=config.L,
            L0=config.L0,
            seed=config.seed,
            repeat_means=means,
            repeat_variances=variances,
            kernel=result.kernel,
            observations=result.observations)

    @staticmethod
    def surface(config: ExperimentConfig, report: RunReport):
        """Posterior grid over the first two coordinates, or None when unavailable"""
        if report.kernel is None or config.box.dims < 2 or not report.observations:
            return None
        try:
            return posterior_surface(report.kernel, report.observations, config.box,
                                     config.search.surface_grid, anchor=report.theta_star)
        except ConditioningError as e:
            logger.warning(f"Skipping posterior surface: {e}")
            return None


def _population_accuracy(job) -> float:
    config, theta, seed = job
    return ExperimentService.run_population(config, np.array(theta), seed).accuracy
