"""
Attention Metrics - cumulative, average and quantized attention levels,
synthetic pupil traces and score-table fitting.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from analytics.gaze_model import BOUNDARY_TOLERANCE, split_stages
from config import SimulationDefaults
from models.scores import AnnealingParams, AttentionConfig, PupilTrace, ScoreTable
from models.trajectory import TrajectorySegment, VsTrajectory
from models.visual_state import StateSpace, VisualState
from utils.validation import EmptyInputError, ValidationError, Validator

logger = logging.getLogger(__name__)


class TrajectoryCoverageError(ValidationError):
    """Segments do not cover the requested stage interval"""


def _reward(r, alpha, t):
    # closed form of the integral of r * exp(-alpha * tau) over [0, t]
    return r * -np.expm1(-alpha * t) / alpha


def stage_reward(table: ScoreTable, state: VisualState, t: float) -> float:
    """Attention accumulated by dwelling `t` seconds at `state` since entering it"""
    t = Validator.validate_number(t, 't', min_val=0)
    return float(_reward(table.score(state), table.decay(state), t))


def _check_coverage(segments: Sequence[TrajectorySegment], t: float):
    expected = 0.0
    for seg in segments:
        if abs(seg.start - expected) > BOUNDARY_TOLERANCE:
            raise TrajectoryCoverageError(
                f"gap in stage coverage at {expected:.6f}s (next segment starts at {seg.start:.6f}s)")
        expected = seg.end
        if expected >= t:
            return
    if expected < t - BOUNDARY_TOLERANCE:
        raise TrajectoryCoverageError(f"segments cover [0, {expected:.6f}]s, need [0, {t:.6f}]s")


def cal(segments: Sequence[TrajectorySegment], table: ScoreTable, t: float) -> float:
    """
    Cumulative attention level at stage time t.

    Segment times are relative to the start of the generation stage. The
    transition stage still in progress at t contributes its partial reward.
    """
    t = Validator.validate_number(t, 't', min_val=0)
    _check_coverage(segments, t)
    total = 0.0
    for seg in segments:
        if seg.start >= t:
            break
        total += stage_reward(table, seg.state, min(seg.duration, t - seg.start))
    return total


def aal(v_end: float, T_pl: float) -> float:
    """Average attention level: CAL at the end of a stage per second"""
    T_pl = Validator.validate_number(T_pl, 'T_pl', min_val=0, exclusive_min=True)
    return float(v_end) / T_pl


def stage_cals(trajectory: VsTrajectory, table: ScoreTable, T_pl: float) -> List[float]:
    """End-of-stage CAL for every generation stage of a trajectory (partial last stage included)"""
    return [cal(segments, table, sum(s.duration for s in segments))
            for segments in split_stages(trajectory, T_pl)]


def stage_aals(trajectory: VsTrajectory, table: ScoreTable, T_pl: float) -> List[float]:
    """AAL per generation stage; a partial last stage is averaged over its own length"""
    values = []
    for segments in split_stages(trajectory, T_pl):
        length = sum(s.duration for s in segments)
        values.append(aal(cal(segments, table, length), length) if length > 0 else 0.0)
    return values


def quantize(v: float, config: AttentionConfig) -> int:
    """
    Map an AAL to an attention state index.

    Binary: 1 (attentive) iff v >= threshold. Uniform: clamp to
    [v_min, v_max] and floor into equal bins, the top edge in the top bin.
    """
    if config.is_binary:
        return 1 if v >= config.threshold else 0
    width = (config.v_max - config.v_min) / config.levels
    v = min(max(float(v), config.v_min), config.v_max)
    return min(int(np.floor((v - config.v_min) / width)), config.levels - 1)


def representatives(config: AttentionConfig, table: ScoreTable) -> np.ndarray:
    """Numeric level standing for each attention state (bin midpoints)"""
    if config.is_binary:
        lo, hi = table.aal_bounds()
        x_at = config.threshold
        return np.array([(lo + x_at) / 2.0, (x_at + hi) / 2.0])
    width = (config.v_max - config.v_min) / config.levels
    return config.v_min + (np.arange(config.levels) + 0.5) * width


def attention_representative(x: int, config: AttentionConfig, table: ScoreTable) -> float:
    values = representatives(config, table)
    if not 0 <= x < values.size:
        raise ValidationError(f"attention state {x} out of range 0..{values.size - 1}")
    return float(values[x])


@dataclass
class _Located:
    stage: np.ndarray       # generation stage of each sample
    position: np.ndarray    # state position in the space
    elapsed: np.ndarray     # seconds since entering the transition stage
    level: np.ndarray       # CAL at the sample


def _locate(trajectory: VsTrajectory, table: ScoreTable, T_pl: float, times) -> _Located:
    times = np.asarray(times, dtype=float)
    if times.size and (times[0] < -BOUNDARY_TOLERANCE or times[-1] > trajectory.duration + BOUNDARY_TOLERANCE):
        raise ValidationError("sample times must lie within the trajectory")
    space = table.space
    stages = split_stages(trajectory, T_pl)
    k = np.minimum(((times + BOUNDARY_TOLERANCE) // T_pl).astype(int), len(stages) - 1)
    stage_time = times - k * T_pl

    position = np.zeros(times.size, dtype=int)
    elapsed = np.zeros(times.size)
    level = np.zeros(times.size)
    for index, segments in enumerate(stages):
        mask = k == index
        if not mask.any():
            continue
        if not segments:
            raise TrajectoryCoverageError(f"stage {index} has no segments")
        starts = np.array([s.start for s in segments])
        durations = np.array([s.duration for s in segments])
        pos = np.array([space.position(s.state) for s in segments])
        r, alpha = table.r_co[pos], table.alpha[pos]
        done = np.concatenate([[0.0], np.cumsum(_reward(r, alpha, durations))[:-1]])

        seg = np.clip(np.searchsorted(starts, stage_time[mask], side='right') - 1, 0, len(segments) - 1)
        tau = np.clip(stage_time[mask] - starts[seg], 0.0, durations[seg])
        position[mask] = pos[seg]
        elapsed[mask] = tau
        level[mask] = done[seg] + _reward(r[seg], alpha[seg], tau)
    return _Located(k, position, elapsed, level)


def sample_times(duration: float, rate_hz: float = SimulationDefaults.SAMPLE_RATE_HZ) -> np.ndarray:
    """Sampling instants j / rate_hz covering [0, duration]"""
    n = int(np.floor(duration * rate_hz + BOUNDARY_TOLERANCE)) + 1
    return np.arange(n) / float(rate_hz)


def _stage_length(trajectory: VsTrajectory, T_pl: Optional[float]) -> float:
    if T_pl is not None:
        return Validator.validate_number(T_pl, 'T_pl', min_val=0, exclusive_min=True)
    return trajectory.stage_length or trajectory.duration


def cal_series(trajectory: VsTrajectory, table: ScoreTable, T_pl: Optional[float] = None,
               rate_hz: float = SimulationDefaults.SAMPLE_RATE_HZ) -> pd.DataFrame:
    """
    CAL sampled over a whole session; resets to 0 at each stage boundary.

    Returns:
        DataFrame with columns time_s, stage, aid, state, cal
    """
    T_pl = _stage_length(trajectory, T_pl)
    times = sample_times(trajectory.duration, rate_hz)
    located = _locate(trajectory, table, T_pl, times)
    labels = np.array(table.space.labels)
    aids = trajectory.stage_aids
    aid_names = [aids[min(int(k), len(aids) - 1)].name if aids else '' for k in located.stage]
    return pd.DataFrame({
        'time_s': times,
        'stage': located.stage,
        'aid': aid_names,
        'state': labels[located.position],
        'cal': located.level,
    })


def synth_pupil_trace(trajectory: VsTrajectory, table: ScoreTable, noise_sd: float,
                      rng: np.random.Generator, scale: float = SimulationDefaults.PUPIL_SCALE,
                      T_pl: Optional[float] = None,
                      rate_hz: float = SimulationDefaults.SAMPLE_RATE_HZ) -> PupilTrace:
    """
    Pupil diameters proportional to the instantaneous attention rate.

    diameter(t) = scale * r(s_t) * exp(-alpha(s_t) * tau) + N(0, noise_sd),
    tau being the time since the current transition stage began.
    """
    noise_sd = Validator.validate_number(noise_sd, 'noise_sd', min_val=0)
    T_pl = _stage_length(trajectory, T_pl)
    times = sample_times(trajectory.duration, rate_hz)
    located = _locate(trajectory, table, T_pl, times)
    pos = located.position
    diameters = scale * table.r_co[pos] * np.exp(-table.alpha[pos] * located.elapsed)
    if noise_sd > 0:
        diameters = diameters + rng.normal(0.0, noise_sd, size=diameters.size)
    return PupilTrace(times, diameters)


@dataclass
class ScoreFit:
    """Best-found score table with its mean squared error"""
    table: ScoreTable
    objective: float
    history: List[float] = field(default_factory=list)  # incumbent objective per iteration
    samples_per_state: Dict[str, int] = field(default_factory=dict)


def _initial_table(space: StateSpace, sa: AnnealingParams) -> ScoreTable:
    r0 = sum(sa.score_bounds) / 2.0
    alpha0 = float(np.sqrt(sa.decay_bounds[0] * sa.decay_bounds[1]))
    return ScoreTable(space, np.full(space.size, r0), np.full(space.size, alpha0))


def fit_scores(traces: Sequence[PupilTrace], trajectories: Sequence[VsTrajectory],
               rng: np.random.Generator, sa: Optional[AnnealingParams] = None,
               initial: Optional[ScoreTable] = None, space: Optional[StateSpace] = None,
               scale: float = SimulationDefaults.PUPIL_SCALE,
               T_pl: Optional[float] = None) -> ScoreFit:
    """
    Fit r_co and alpha by simulated annealing on the trace MSE.

    The model predicts scale * r(s) * exp(-alpha(s) * tau) at each trace
    sample. Every state anneals its own (r, alpha) pair against the
    samples spent in it, all states stepping together on one schedule;
    the reported objective is the MSE over all samples.

    Args:
        traces: Pupil traces, one per trajectory, times in session seconds
        trajectories: Visual-state trajectories aligned with the traces
        rng: Random stream for proposals and acceptance
        sa: Schedule and bounds (defaults when omitted)
        initial: Starting table (bound midpoints when omitted)
        space: State space when no initial table is given
        scale: Diameter per unit attention rate
        T_pl: Generation-stage length (each trajectory's own by default)

    Returns:
        ScoreFit with the incumbent table and its objective history
    """
    if not traces or len(traces) != len(trajectories):
        raise EmptyInputError("fit_scores needs one trace per trajectory")
    sa = sa or AnnealingParams()
    space = initial.space if initial is not None else (space or StateSpace())
    initial = initial or _initial_table(space, sa)

    positions, elapsed, observed = [], [], []
    for trace, traj in zip(traces, trajectories):
        located = _locate(traj, initial, _stage_length(traj, T_pl), trace.times)
        positions.append(located.position)
        elapsed.append(located.elapsed)
        observed.append(trace.diameters)
    pos = np.concatenate(positions)
    tau = np.concatenate(elapsed)
    y = np.concatenate(observed)
    if y.size == 0:
        raise EmptyInputError("traces hold no samples")

    n = space.size
    counts = np.bincount(pos, minlength=n)
    active = counts > 0

    def sse(r, alpha):
        residual = y - scale * r[pos] * np.exp(-alpha[pos] * tau)
        return np.bincount(pos, weights=residual ** 2, minlength=n)

    lo = np.array([sa.score_bounds[0], sa.decay_bounds[0]])
    hi = np.array([sa.score_bounds[1], sa.decay_bounds[1]])
    step = sa.proposal_scale * (hi - lo)

    r, alpha = initial.r_co.copy(), initial.alpha.copy()
    current = sse(r, alpha)
    best_r, best_alpha, best = r.copy(), alpha.copy(), current.copy()
    history = []
    temperature = sa.initial_temperature
    safe_counts = np.maximum(counts, 1)

    for _ in range(sa.iterations):
        r_new = r + rng.normal(0.0, step[0], size=n)
        alpha_new = alpha + rng.normal(0.0, step[1], size=n)
        inside = ((r_new >= lo[0]) & (r_new <= hi[0])
                  & (alpha_new >= lo[1]) & (alpha_new <= hi[1]) & active)
        candidate = sse(np.where(inside, r_new, r), np.where(inside, alpha_new, alpha))

        delta = (candidate - current) / safe_counts
        with np.errstate(over='ignore'):
            accept = inside & ((delta <= 0) | (rng.random(n) < np.exp(-delta / temperature)))
        r = np.where(accept, r_new, r)
        alpha = np.where(accept, alpha_new, alpha)
        current = np.where(accept, candidate, current)

        better = current < best
        best_r = np.where(better, r, best_r)
        best_alpha = np.where(better, alpha, best_alpha)
        best = np.where(better, current, best)
        history.append(float(best.sum() / y.size))
        temperature *= sa.cooling_rate

    objective = float(best.sum() / y.size)
    logger.info(f"Fitted scores over {y.size} samples: MSE={objective:.6g} after {sa.iterations} iterations")
    return ScoreFit(
        table=ScoreTable(space, best_r, best_alpha),
        objective=objective,
        history=history,
        samples_per_state={space.state(i).label: int(c) for i, c in enumerate(counts)},
    )
