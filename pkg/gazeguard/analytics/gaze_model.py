"""
Gaze Model - Semi-Markov simulation of visual-state trajectories.

Sessions are simulated one generation stage at a time; the aid for each
stage comes from a schedule callback consulted at every stage boundary.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from models.gaze_dynamics import BurrParams, GazeDynamics, VisualAidEffect
from models.trajectory import SessionId, TrajectorySegment, VsTrajectory
from models.visual_state import StateSpace, VisualAid, VisualState, build_aid_library
from utils.validation import EmptyInputError, ValidationError, Validator

logger = logging.getLogger(__name__)

# Boundary comparisons, seconds
BOUNDARY_TOLERANCE = 1e-9

# (k, segments of the stage that just ended) -> aid for stage k
AidSchedule = Callable[[int, Sequence[TrajectorySegment]], VisualAid]


def fixed_schedule(aid: VisualAid) -> AidSchedule:
    """Schedule that applies one aid in every stage"""
    return lambda k, previous_stage: aid


def _burr_inverse(u: np.ndarray, burr: BurrParams) -> np.ndarray:
    # t = rho1 * ((1-u)^(-1/rho3) - 1)^(1/rho2), evaluated in log space so
    # that u close to 1 does not overflow
    with np.errstate(over='ignore', divide='ignore', invalid='ignore'):
        log_tail = -np.log1p(-u) / burr.rho3
        log_excess = np.where(
            log_tail > 30.0,
            log_tail + np.log1p(-np.exp(-log_tail)),
            np.log(np.expm1(log_tail)),
        )
        return burr.rho1 * np.exp(log_excess / burr.rho2)


def sample_inspection_time(dynamics: Union[GazeDynamics, BurrParams], rng: np.random.Generator,
                           size: Optional[int] = None):
    """
    Draw inspection times from the Burr law by inverse CDF.

    Args:
        dynamics: GazeDynamics (its Burr parameters are used) or BurrParams
        rng: Random stream
        size: None for a scalar, else the number of draws

    Returns:
        float seconds, or an ndarray of `size` draws
    """
    burr = dynamics.burr if isinstance(dynamics, GazeDynamics) else dynamics
    n = 1 if size is None else int(size)
    out = np.empty(n)
    filled = 0
    while filled < n:
        t = _burr_inverse(rng.random(n - filled), burr)
        good = t[np.isfinite(t) & (t > 0)]
        out[filled:filled + good.size] = good
        filled += good.size
    return float(out[0]) if size is None else out


def _next_position(dynamics: GazeDynamics, aid, position: int, rng: np.random.Generator) -> int:
    cumulative = dynamics.cumulative_row(aid, position)
    nxt = int(np.searchsorted(cumulative, rng.random(), side='right'))
    return min(nxt, dynamics.space.size - 1)


def step_semi_markov(dynamics: GazeDynamics, current: VisualState, aid: VisualAid,
                     rng: np.random.Generator) -> Tuple[VisualState, float]:
    """
    One semi-Markov step: exponential sojourn at `current`, then a jump.

    Returns:
        (next state, sojourn seconds)
    """
    space = dynamics.space
    position = space.position(current)
    sojourn = float(rng.exponential(dynamics.sojourn(aid)[position]))
    nxt = _next_position(dynamics, aid, position, rng)
    return space.state(nxt), sojourn


class SessionSimulator:
    """
    Stage-by-stage gaze simulation for one session.

    A sojourn still running at a stage boundary is cut there; the state
    re-enters the next stage with a fresh sojourn under that stage's aid.
    """

    def __init__(self, dynamics: GazeDynamics, rng: np.random.Generator):
        self._dynamics = dynamics
        self._rng = rng
        self._position = int(np.searchsorted(dynamics.initial_cumulative(), rng.random(), side='right'))
        self._position = min(self._position, dynamics.space.size - 1)
        self._pieces: List[Tuple[VisualState, float]] = []

    @property
    def current(self) -> VisualState:
        return self._dynamics.space.state(self._position)

    @property
    def pieces(self) -> List[Tuple[VisualState, float]]:
        return list(self._pieces)

    def advance(self, aid, length: float) -> List[TrajectorySegment]:
        """Simulate `length` seconds under `aid`; segments start at stage time 0"""
        space = self._dynamics.space
        phi = self._dynamics.sojourn(aid)
        segments = []
        t = 0.0
        while True:
            d = float(self._rng.exponential(phi[self._position]))
            state = space.state(self._position)
            if t + d >= length:
                segments.append(TrajectorySegment(state, t, length - t))
                break
            segments.append(TrajectorySegment(state, t, d))
            t += d
            self._position = _next_position(self._dynamics, aid, self._position, self._rng)
        self._pieces.extend((s.state, s.duration) for s in segments)
        return segments


def simulate_session(dynamics: GazeDynamics, aid_schedule: AidSchedule, T: float, T_pl: float,
                     rng: np.random.Generator, session_id: SessionId = SessionId(0, 0)) -> VsTrajectory:
    """
    Simulate one inspection of length T split into generation stages of T_pl.

    The schedule is consulted at every multiple of T_pl up to and including
    T, with the segments of the stage that just completed (empty at k = 0).
    The aid it returns at T itself is unused.
    """
    T = Validator.validate_number(T, 'T', min_val=0, exclusive_min=True)
    T_pl = Validator.validate_number(T_pl, 'T_pl', min_val=0, exclusive_min=True)

    simulator = SessionSimulator(dynamics, rng)
    stage_aids: List[VisualAid] = []
    previous: Sequence[TrajectorySegment] = ()
    k = 0
    while True:
        start = k * T_pl
        if start >= T - BOUNDARY_TOLERANCE:
            if k > 0 and abs(start - T) <= BOUNDARY_TOLERANCE:
                aid_schedule(k, previous)
            break
        aid = aid_schedule(k, previous)
        previous = simulator.advance(aid, min(T_pl, T - start))
        stage_aids.append(aid)
        k += 1

    return VsTrajectory.from_pieces(simulator.pieces, session_id=session_id,
                                    stage_aids=stage_aids, stage_length=T_pl)


def split_stages(trajectory: VsTrajectory, T_pl: float) -> List[List[TrajectorySegment]]:
    """
    Cut a trajectory at multiples of T_pl.

    Each stage's segments start at stage time 0; a segment crossing a
    boundary is split, so the decay clock restarts with the stage.
    """
    T_pl = Validator.validate_number(T_pl, 'T_pl', min_val=0, exclusive_min=True)
    n_stages = max(1, int(np.ceil(trajectory.duration / T_pl - BOUNDARY_TOLERANCE)))
    pieces: List[List[Tuple[VisualState, float]]] = [[] for _ in range(n_stages)]
    for seg in trajectory.segments:
        t = seg.start
        while seg.end - t > BOUNDARY_TOLERANCE:
            k = min(int((t + BOUNDARY_TOLERANCE) // T_pl), n_stages - 1)
            stage_end = (k + 1) * T_pl if k < n_stages - 1 else seg.end
            piece_end = min(seg.end, stage_end)
            pieces[k].append((seg.state, piece_end - t))
            t = piece_end

    stages = []
    for stage in pieces:
        segments = []
        offset = 0.0
        for state, duration in stage:
            if duration <= BOUNDARY_TOLERANCE:
                continue
            segments.append(TrajectorySegment(state, offset, duration))
            offset += duration
        stages.append(segments)
    return stages


def apply_visual_aid_effect(base: GazeDynamics, effect: VisualAidEffect,
                            source: Optional[str] = None,
                            target: Optional[VisualAid] = None) -> GazeDynamics:
    """
    Derive an aid's dynamics from a source aid.

    ua/da columns are damped and rows renormalized; the main-content
    sojourn is scaled. A row left with no mass is spread uniformly over the
    AoI columns. Without `target` the source aid itself is replaced.
    """
    space = base.space
    source = source or base.aids[0].name
    source_aid = base.aid(source)
    target = target or source_aid

    P = np.array(base.transition(source_aid), dtype=float)
    phi = np.array(base.sojourn(source_aid), dtype=float)
    off_aoi = [space.uninformative_position, space.distraction_position]

    if effect.distraction_damping != 1.0:
        P[:, off_aoi] *= effect.distraction_damping
        sums = P.sum(axis=1)
        for i in np.flatnonzero(sums == 0):
            columns = [j for j in space.aoi_positions if j != i]
            if not columns:
                raise ValidationError(f"Row {space.state(int(i))} has no AoI left to move to")
            logger.warning(f"Row {space.state(int(i))} lost all mass; spreading over {len(columns)} AoIs")
            P[i, columns] = 1.0 / len(columns)
        P = P / P.sum(axis=1)[:, None]

    content = space.content_position
    if content is not None:
        phi[content] *= effect.content_sojourn_scale

    logger.debug(f"Derived dynamics for {target.name} from {source_aid.name} with {effect!r}")
    return base.with_aid(target, P, phi)


@dataclass
class DynamicsEstimate:
    """Estimated dynamics plus the (aid, state) rows that had no data"""
    dynamics: GazeDynamics
    diagnostics: List[Tuple[str, str]] = field(default_factory=list)


def estimate_dynamics(trajectories: Sequence[VsTrajectory],
                      aid_labels: Optional[Sequence[Sequence]] = None,
                      stage_length: Optional[float] = None,
                      space: Optional[StateSpace] = None,
                      burr: Optional[BurrParams] = None) -> DynamicsEstimate:
    """
    Empirical transition frequencies and mean sojourns per aid.

    Args:
        trajectories: Observed sessions
        aid_labels: Per-trajectory, per-stage aids (VisualAid or names). When
            omitted, each trajectory's recorded stage aids are used, and a
            single 'aN' aid otherwise.
        stage_length: Stage length for `aid_labels`
        space: State space (13-AoI layout by default)
        burr: Inspection-time law to attach

    Returns:
        DynamicsEstimate whose diagnostics list rows with no observations
    """
    if not trajectories:
        raise EmptyInputError("estimate_dynamics needs at least one trajectory")
    if aid_labels is not None and len(aid_labels) != len(trajectories):
        raise ValidationError("aid_labels must have one entry per trajectory")
    if aid_labels is not None and stage_length is None:
        raise ValidationError("aid_labels need a stage_length")

    space = space or StateSpace()
    n = space.size

    def labeller(index: int, traj: VsTrajectory) -> Callable[[float], str]:
        if aid_labels is not None:
            names = [a.name if isinstance(a, VisualAid) else str(a) for a in aid_labels[index]]
            return lambda t: names[min(int(t // stage_length), len(names) - 1)]
        if traj.stage_aids is not None:
            return lambda t: traj.aid_at(t).name
        return lambda t: 'aN'

    counts: Dict[str, np.ndarray] = {}
    durations: Dict[str, np.ndarray] = {}
    visits: Dict[str, np.ndarray] = {}
    order: List[str] = []

    def ensure(name: str):
        if name not in counts:
            counts[name] = np.zeros((n, n))
            durations[name] = np.zeros(n)
            visits[name] = np.zeros(n)
            order.append(name)

    for index, traj in enumerate(trajectories):
        label = labeller(index, traj)
        segments = traj.segments
        for i, seg in enumerate(segments):
            p = space.position(seg.state)
            start_aid = label(seg.start)
            ensure(start_aid)
            durations[start_aid][p] += seg.duration
            visits[start_aid][p] += 1
            if i + 1 < len(segments):
                # transition drawn under the aid active when it happened
                jump_aid = label(seg.end - BOUNDARY_TOLERANCE)
                ensure(jump_aid)
                counts[jump_aid][p, space.position(segments[i + 1].state)] += 1

    aids = build_aid_library(order)
    diagnostics: List[Tuple[str, str]] = []
    transitions, sojourns = {}, {}
    for name in order:
        C = counts[name]
        P = np.zeros((n, n))
        for i in range(n):
            total = C[i].sum()
            if total > 0:
                P[i] = C[i] / total
            else:
                P[i] = 1.0 / (n - 1)
                P[i, i] = 0.0
                diagnostics.append((name, space.state(i).label))
        seen = visits[name] > 0
        fallback = durations[name][seen].sum() / visits[name][seen].sum() if seen.any() else 1.0
        phi = np.full(n, fallback)
        phi[seen] = durations[name][seen] / visits[name][seen]
        transitions[name] = P
        sojourns[name] = phi

    if diagnostics:
        logger.warning(f"No observed transitions for {len(diagnostics)} rows; using uniform rows")
    dynamics = GazeDynamics(space, aids, transitions, sojourns, burr=burr)
    return DynamicsEstimate(dynamics, diagnostics)
