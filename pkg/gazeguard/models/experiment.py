"""
Experiment configuration and run results
"""
import dataclasses
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from config import SimulationDefaults
from models.gaze_dynamics import GazeDynamics
from models.judgment import JudgmentModel, JudgmentRecord
from models.learning import LearningParams, QTable
from models.scores import AnnealingParams, AttentionConfig, ScoreTable
from models.trajectory import VsTrajectory
from models.tuning import HyperBox, Kernel, Observation, TuningStage
from utils.validation import ValidationError, Validator

# Hyperparameter names understood by apply_theta besides score.<s> / decay.<s>
THETA_ATTENTION_THRESHOLD = 'attention_threshold'
THETA_PERIOD_SAMPLES = 'period_samples'
THETA_PERIOD_S = 'period_s'
THETA_LEVELS = 'levels'


@dataclass(frozen=True)
class CalibrationSettings:
    target: float = SimulationDefaults.BASELINE_ACCURACY
    sessions: int = SimulationDefaults.CALIBRATION_SESSIONS
    tolerance: float = SimulationDefaults.CALIBRATION_TOLERANCE


@dataclass(frozen=True)
class SearchSettings:
    """Kernel fitting and acquisition search effort"""
    mle_restarts: int = SimulationDefaults.MLE_RESTARTS
    starts: int = SimulationDefaults.ACQUISITION_STARTS
    steps: int = SimulationDefaults.ACQUISITION_STEPS
    refit_kernel: bool = False
    surface_grid: int = SimulationDefaults.SURFACE_GRID


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Everything one experiment needs: environment, learner, oracle and the
    tuning budget. `calibrated` is False when the judgment intercept still
    has to be fitted to the baseline accuracy.
    """
    dynamics: GazeDynamics
    scores: ScoreTable
    attention: AttentionConfig
    learning: LearningParams
    judgment: JudgmentModel
    n_bo: int = SimulationDefaults.EMAILS_PER_TUNING_STAGE
    n_rp: int = SimulationDefaults.REPEATS
    L: int = SimulationDefaults.TUNING_STAGES
    L0: int = SimulationDefaults.INITIAL_DESIGN
    seed: int = SimulationDefaults.RANDOM_SEED
    emails_per_user: int = SimulationDefaults.EMAILS_PER_USER
    box: HyperBox = field(default_factory=HyperBox.case_study)
    theta: Mapping[str, float] = field(default_factory=dict)
    calibration: CalibrationSettings = field(default_factory=CalibrationSettings)
    search: SearchSettings = field(default_factory=SearchSettings)
    annealing: AnnealingParams = field(default_factory=AnnealingParams)
    calibrated: bool = True
    workers: int = 1

    def __post_init__(self):
        Validator.validate_integer(self.n_bo, 'n_bo', min_val=1)
        Validator.validate_integer(self.n_rp, 'n_rp', min_val=1)
        Validator.validate_integer(self.L0, 'L0', min_val=1)
        Validator.validate_integer(self.L, 'L', min_val=1)
        if self.L0 >= self.L:
            raise ValidationError(f"L0 must be < L, got L0={self.L0}, L={self.L}")
        Validator.validate_integer(self.seed, 'seed', min_val=0)
        Validator.validate_integer(self.emails_per_user, 'emails_per_user', min_val=1)
        Validator.validate_integer(self.workers, 'workers', min_val=1)
        if self.scores.space != self.dynamics.space:
            raise ValidationError("score table and dynamics use different state spaces")
        if self.learning.initial_state >= self.attention.levels:
            raise ValidationError("learning.initial_state exceeds the number of attention states")
        unknown = [n for n in list(self.box.names) + list(self.theta) if not self._known_name(n)]
        if unknown:
            raise ValidationError(f"unknown hyperparameter names: {unknown}")

    @property
    def space(self):
        return self.dynamics.space

    @property
    def period_s(self) -> float:
        return self.attention.period_s

    def replace(self, **changes) -> 'ExperimentConfig':
        return dataclasses.replace(self, **changes)

    def with_aids(self, names: Sequence[str]) -> 'ExperimentConfig':
        """Same experiment restricted to the named aids"""
        return self.replace(dynamics=self.dynamics.restricted_to(names))

    def _known_name(self, name: str) -> bool:
        if name in (THETA_ATTENTION_THRESHOLD, THETA_PERIOD_SAMPLES, THETA_PERIOD_S, THETA_LEVELS):
            return True
        prefix, _, label = name.partition('.')
        return prefix in ('score', 'decay') and label in self.space.labels

    def current_value(self, name: str) -> float:
        """Value a hyperparameter has in the unmodified configuration"""
        if name == THETA_ATTENTION_THRESHOLD:
            return self.attention.threshold
        if name == THETA_PERIOD_SAMPLES:
            return self.attention.period_s * SimulationDefaults.SAMPLE_RATE_HZ
        if name == THETA_PERIOD_S:
            return self.attention.period_s
        if name == THETA_LEVELS:
            return float(self.attention.levels)
        prefix, _, label = name.partition('.')
        state = self.space.from_label(label)
        return self.scores.score(state) if prefix == 'score' else self.scores.decay(state)

    def default_theta(self) -> np.ndarray:
        """The configured theta over the box coordinates, current values where unset"""
        return np.array([float(self.theta.get(n, self.current_value(n))) for n in self.box.names])

    def apply_theta(self, theta=None, names: Optional[Sequence[str]] = None) -> Tuple[AttentionConfig, ScoreTable]:
        """
        Attention config and score table with the hyperparameters set.

        Args:
            theta: Values (the default theta when omitted)
            names: Coordinate names (the box names by default)
        """
        names = list(names or self.box.names)
        theta = self.default_theta() if theta is None else np.asarray(theta, dtype=float)
        if theta.shape != (len(names),):
            raise ValidationError(f"theta must have {len(names)} values, got shape {theta.shape}")

        attention_changes: Dict = {}
        table = self.scores
        for name, value in zip(names, theta):
            value = float(value)
            if name == THETA_ATTENTION_THRESHOLD:
                attention_changes['threshold'] = value
            elif name == THETA_PERIOD_SAMPLES:
                attention_changes['period_s'] = value / SimulationDefaults.SAMPLE_RATE_HZ
            elif name == THETA_PERIOD_S:
                attention_changes['period_s'] = value
            elif name == THETA_LEVELS:
                attention_changes['levels'] = max(2, int(round(value)))
            else:
                prefix, _, label = name.partition('.')
                if prefix not in ('score', 'decay') or label not in self.space.labels:
                    raise ValidationError(f"unknown hyperparameter '{name}'")
                position = self.space.position(self.space.from_label(label))
                if prefix == 'score':
                    table = table.replace(position, r_co=value)
                else:
                    table = table.replace(position, alpha=value)
        attention = self.attention.replace(**attention_changes) if attention_changes else self.attention
        return attention, table


@dataclass
class SessionResult:
    """Outcome of one participant-email session"""
    qtable: QTable
    final_state: int
    trajectory: VsTrajectory
    record: JudgmentRecord
    stage_count: int
    stage_aals: List[float] = field(default_factory=list)
    stage_states: List[int] = field(default_factory=list)  # state at the start of each completed stage
    stage_aids: List[str] = field(default_factory=list)
    q_snapshots: List[np.ndarray] = field(default_factory=list)
    first_stage: int = 0  # global index of this session's first stage


@dataclass
class PopulationResult:
    """One pass of the inner loop over N_bo sessions at a fixed theta"""
    theta: Tuple[float, ...]
    accuracy: float
    mean_p_correct: float
    qtable: QTable
    records: List[JudgmentRecord]
    sessions: List[SessionResult]

    @property
    def total_stages(self) -> int:
        return sum(s.stage_count for s in self.sessions)

    @property
    def mean_aal(self) -> float:
        values = [v for s in self.sessions for v in s.stage_aals]
        return float(np.mean(values)) if values else 0.0


@dataclass
class RunReport:
    """Outer-loop tuning run"""
    names: Tuple[str, ...]
    history: List[TuningStage]
    theta_star: Tuple[float, ...]
    c_star: float
    L: int
    L0: int
    seed: int
    repeat_means: Dict[int, float] = field(default_factory=dict)
    repeat_variances: Dict[int, float] = field(default_factory=dict)
    kernel: Optional[Kernel] = None
    observations: List[Observation] = field(default_factory=list)

    @property
    def accuracy_series(self) -> List[float]:
        return [stage.value for stage in self.history]

    @property
    def incumbents(self) -> List[float]:
        return [stage.incumbent for stage in self.history]

    def summary(self) -> Dict:
        return {
            'theta_star': dict(zip(self.names, self.theta_star)),
            'c_star': self.c_star,
            'L': self.L,
            'L0': self.L0,
            'seed': self.seed,
            'failed_stages': [s.stage for s in self.history if s.failed],
            'kernel': self.kernel.to_dict() if self.kernel is not None else None,
        }
