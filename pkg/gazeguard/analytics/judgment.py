"""
Judgment Oracle - session features, stochastic verdicts and accuracy
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy import optimize, special

from analytics.attention import stage_cals
from analytics.gaze_model import fixed_schedule, sample_inspection_time, simulate_session
from config import SimulationDefaults
from models.gaze_dynamics import GazeDynamics
from models.judgment import JudgmentModel, JudgmentRecord, Verdict
from models.scores import ScoreTable
from models.trajectory import VsTrajectory
from utils.validation import EmptyInputError, ValidationError, Validator

logger = logging.getLogger(__name__)


class CalibrationError(RuntimeError):
    """The intercept bracket never enclosed the target accuracy"""


@dataclass(frozen=True)
class SessionFeatures:
    mean_aal: float
    content_fraction: float
    distraction_fraction: float
    state_fractions: tuple = ()

    def as_array(self) -> np.ndarray:
        return np.array([self.mean_aal, self.content_fraction, self.distraction_fraction])


def extract_features(trajectory: Optional[VsTrajectory], table: ScoreTable, T_pl: float) -> SessionFeatures:
    """
    Attention features of one session.

    mean_aal is the total end-of-stage CAL over the session length, i.e.
    stage AALs weighted by stage duration so a partial last stage counts
    for its actual length.
    """
    if trajectory is None or len(trajectory) == 0:
        raise EmptyInputError("cannot extract features from an empty trajectory")
    space = table.space
    total = trajectory.duration
    if total <= 0:
        raise EmptyInputError("trajectory has zero duration")

    time_in = np.zeros(space.size)
    for seg in trajectory.segments:
        time_in[space.position(seg.state)] += seg.duration
    fractions = time_in / total

    content = space.content_position
    return SessionFeatures(
        mean_aal=float(sum(stage_cals(trajectory, table, T_pl)) / total),
        content_fraction=float(fractions[content]) if content is not None else 0.0,
        distraction_fraction=float(fractions[space.distraction_position]),
        state_fractions=tuple(float(f) for f in fractions),
    )


def _linear_score(model: JudgmentModel, features: SessionFeatures) -> float:
    return (model.b1 * features.mean_aal
            + model.b2 * features.content_fraction
            - model.b3 * features.distraction_fraction)


def probability_correct(model: JudgmentModel, features: SessionFeatures) -> float:
    return float(special.expit(model.b0 + _linear_score(model, features)))


def judge(model: JudgmentModel, features: SessionFeatures, rng: np.random.Generator,
          draw: Optional[float] = None) -> Verdict:
    """Bernoulli verdict; `draw` is a uniform taken earlier from the stream, used instead of a fresh one"""
    u = rng.random() if draw is None else Validator.validate_number(draw, 'draw', min_val=0, max_val=1)
    return Verdict.CORRECT if u < probability_correct(model, features) else Verdict.WRONG


def accuracy(records: Sequence[JudgmentRecord]) -> float:
    """Fraction of correct verdicts"""
    if not records:
        raise EmptyInputError("accuracy needs at least one judgment record")
    return sum(1 for r in records if r.correct) / len(records)


def mean_probability(records: Sequence[JudgmentRecord]) -> float:
    """Mean expected correctness over records that carry p_correct"""
    values = [r.p_correct for r in records if r.p_correct is not None]
    if not values:
        raise EmptyInputError("no records carry p_correct")
    return float(np.mean(values))


def simulate_features(dynamics: GazeDynamics, table: ScoreTable, T_pl: float, sessions: int,
                      rng: np.random.Generator, aid=None) -> List[SessionFeatures]:
    """Features of `sessions` sessions under one fixed aid (the first in the library by default)"""
    sessions = Validator.validate_integer(sessions, 'sessions', min_val=1)
    aid = aid or dynamics.aids[0]
    schedule = fixed_schedule(aid)
    features = []
    for _ in range(sessions):
        T = sample_inspection_time(dynamics, rng)
        trajectory = simulate_session(dynamics, schedule, T, T_pl, rng)
        features.append(extract_features(trajectory, table, T_pl))
    return features


def calibrate_baseline(model: JudgmentModel, target: float, dynamics: GazeDynamics,
                       table: ScoreTable, T_pl: float,
                       sessions: int = SimulationDefaults.CALIBRATION_SESSIONS,
                       rng: Optional[np.random.Generator] = None,
                       tolerance: float = SimulationDefaults.CALIBRATION_TOLERANCE,
                       bracket=SimulationDefaults.CALIBRATION_BRACKET,
                       max_widenings: int = SimulationDefaults.CALIBRATION_MAX_WIDENINGS) -> JudgmentModel:
    """
    Set b0 so that the no-aid population hits `target` accuracy.

    Sessions are simulated once; bisection then runs on the mean expected
    correctness over them, which is deterministic and increasing in b0.

    Raises:
        CalibrationError: if widening the bracket `max_widenings` times
            still leaves the target outside it
    """
    target = Validator.validate_number(target, 'target', min_val=0, max_val=1, exclusive_min=True)
    if target >= 1:
        raise ValidationError("target must be < 1")
    rng = rng if rng is not None else np.random.default_rng()

    features = simulate_features(dynamics, table, T_pl, sessions, rng)
    scores = np.array([_linear_score(model, f) for f in features])

    def gap(b0: float) -> float:
        return float(special.expit(b0 + scores).mean()) - target

    lo, hi = (float(v) for v in bracket)
    for _ in range(max_widenings + 1):
        if gap(lo) <= 0 <= gap(hi):
            break
        lo, hi = 2.0 * lo, 2.0 * hi
    else:
        raise CalibrationError(
            f"accuracy {target} not reachable with b0 in [{lo / 2:g}, {hi / 2:g}]")

    b0 = optimize.bisect(gap, lo, hi, xtol=1e-10)
    achieved = gap(b0) + target
    if abs(achieved - target) > tolerance:
        raise CalibrationError(f"calibration stopped at {achieved:.4f}, target {target:.4f}")
    logger.info(f"Calibrated b0={b0:.4f} over {sessions} no-aid sessions (expected accuracy {achieved:.4f})")
    return model.with_intercept(b0)
