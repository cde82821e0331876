"""
Attention scoring models: concentration scores, decay rates, quantizer
configuration and pupil traces.
"""
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from config import SimulationDefaults
from models.visual_state import StateKind, StateSpace, VisualState
from utils.validation import ConfigurationError, ValidationError, Validator

# (score, decay) per AoI of the 13-AoI case-study layout
TABLE_ONE = (
    (9.48, 2.17),    # Title
    (3.55, 4.04),    # Sender
    (7.62, 0.22),    # Receiver
    (13.76, 0.57),   # Salutation
    (21.05, 0.16),   # Main Content
    (7.84, 10.90),   # URL
    (6.47, 5.46),    # Signature
    (6.44, 5.16),    # Logo
    (4.86, 13.91),   # Print & Share
    (3.81, 6.68),    # Time
    (7.34, 2.19),    # Bookmark & Forward
    (7.26, 2.02),    # Profile
    (4.74, 3.46),    # Attachment
)


class ScoreTable:
    """Concentration score r_co(s) and decay rate alpha(s) over every state"""

    def __init__(self, space: StateSpace, r_co, alpha):
        if not isinstance(space, StateSpace):
            raise TypeError(f"space must be StateSpace, got {type(space).__name__}")
        r = np.array(r_co, dtype=float)
        if r.shape != (space.size,) or not np.all(np.isfinite(r)):
            raise ValidationError(f"r_co must hold {space.size} finite values")
        self._alpha = Validator.validate_positive_vector(alpha, space.size, 'alpha')
        self._space = space
        self._r = r
        self._r.setflags(write=False)
        self._alpha.setflags(write=False)

    @classmethod
    def table_one(cls, space: Optional[StateSpace] = None) -> 'ScoreTable':
        """Case-study fixture; ua/da score 0 with unit decay"""
        space = space or StateSpace()
        if space.n_aois != len(TABLE_ONE):
            raise ValidationError(f"the case-study table covers {len(TABLE_ONE)} AoIs")
        r = [row[0] for row in TABLE_ONE] + [0.0, 0.0]
        alpha = [row[1] for row in TABLE_ONE] + [SimulationDefaults.OFF_AOI_DECAY] * 2
        return cls(space, r, alpha)

    @property
    def space(self) -> StateSpace: return self._space

    @property
    def r_co(self) -> np.ndarray: return self._r

    @property
    def alpha(self) -> np.ndarray: return self._alpha

    def score(self, state: VisualState) -> float:
        return float(self._r[self._space.position(state)])

    def decay(self, state: VisualState) -> float:
        return float(self._alpha[self._space.position(state)])

    def aal_bounds(self) -> Tuple[float, float]:
        """Range any average attention level can take under this table"""
        return min(0.0, float(self._r.min())), float(self._r.max())

    def replace(self, position: int, r_co: Optional[float] = None,
                alpha: Optional[float] = None) -> 'ScoreTable':
        r = self._r.copy()
        a = self._alpha.copy()
        if r_co is not None:
            r[position] = r_co
        if alpha is not None:
            a[position] = alpha
        return ScoreTable(self._space, r, a)

    def to_dict(self) -> Dict[str, float]:
        data = {}
        for state in self._space.states:
            data[f"score.{state.label}"] = float(self.score(state))
            data[f"decay.{state.label}"] = float(self.decay(state))
        return data

    @classmethod
    def from_dict(cls, data: Mapping, space: StateSpace) -> 'ScoreTable':
        """
        Missing AoI entries fall back to the case-study table when the layout
        matches it; ua/da default to score 0, decay 1.
        """
        base = cls.table_one(space) if space.n_aois == len(TABLE_ONE) else None
        r, alpha = [], []
        for state in space.states:
            default_r = base.score(state) if base else (0.0 if state.kind is not StateKind.AOI else None)
            default_a = base.decay(state) if base else (SimulationDefaults.OFF_AOI_DECAY if state.kind is not StateKind.AOI else None)
            r_val = data.get(f"score.{state.label}", default_r)
            a_val = data.get(f"decay.{state.label}", default_a)
            if r_val is None or a_val is None:
                raise ConfigurationError(f"scores section missing entries for {state.label}")
            r.append(r_val)
            alpha.append(a_val)
        try:
            return cls(space, r, alpha)
        except (TypeError, ValueError, ValidationError) as e:
            raise ConfigurationError(f"invalid scores section: {e}")

    def __eq__(self, other) -> bool:
        return (isinstance(other, ScoreTable) and self._space == other._space
                and np.array_equal(self._r, other._r) and np.array_equal(self._alpha, other._alpha))

    def __repr__(self) -> str:
        return f"<ScoreTable states={self._space.size} max_score={self._r.max():.2f}>"


class AttentionConfig:
    """
    Generation-stage length and the AAL quantizer.

    Binary mode compares against `threshold` (X = 2); uniform mode cuts
    [v_min, v_max] into `levels` equal bins.
    """

    BINARY = 'binary'
    UNIFORM = 'uniform'

    def __init__(self, period_s: float = SimulationDefaults.PERIOD_S,
                 mode: str = BINARY,
                 threshold: float = SimulationDefaults.ATTENTION_THRESHOLD,
                 levels: int = 2,
                 v_min: float = SimulationDefaults.UNIFORM_V_MIN,
                 v_max: float = SimulationDefaults.UNIFORM_V_MAX,
                 pupil_scale: float = SimulationDefaults.PUPIL_SCALE):
        self._period_s = Validator.validate_number(period_s, 'period_s', min_val=0, exclusive_min=True)
        self._mode = Validator.validate_choice(mode, [self.BINARY, self.UNIFORM], 'attention.mode')
        self._threshold = Validator.validate_number(threshold, 'threshold')
        levels = Validator.validate_integer(levels, 'levels', min_val=2)
        if self._mode == self.BINARY:
            levels = 2
        self._levels = levels
        self._v_min = Validator.validate_number(v_min, 'v_min')
        self._v_max = Validator.validate_number(v_max, 'v_max')
        if self._mode == self.UNIFORM and not self._v_min < self._v_max:
            raise ValidationError("v_min must be < v_max")
        self._pupil_scale = Validator.validate_number(pupil_scale, 'pupil_scale')

    @property
    def period_s(self) -> float: return self._period_s

    @property
    def mode(self) -> str: return self._mode

    @property
    def threshold(self) -> float: return self._threshold

    @property
    def levels(self) -> int: return self._levels

    @property
    def v_min(self) -> float: return self._v_min

    @property
    def v_max(self) -> float: return self._v_max

    @property
    def pupil_scale(self) -> float: return self._pupil_scale

    @property
    def is_binary(self) -> bool: return self._mode == self.BINARY

    def replace(self, **changes) -> 'AttentionConfig':
        values = self.to_dict()
        values.update(changes)
        return AttentionConfig(**values)

    def to_dict(self) -> Dict:
        return {
            'period_s': self._period_s,
            'mode': self._mode,
            'threshold': self._threshold,
            'levels': self._levels,
            'v_min': self._v_min,
            'v_max': self._v_max,
            'pupil_scale': self._pupil_scale,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> 'AttentionConfig':
        known = {'period_s', 'mode', 'threshold', 'levels', 'v_min', 'v_max', 'pupil_scale'}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown attention keys: {sorted(unknown)}")
        try:
            return cls(**dict(data))
        except ValidationError as e:
            raise ConfigurationError(f"invalid attention section: {e}")

    def __repr__(self) -> str:
        if self.is_binary:
            return f"<AttentionConfig T_pl={self._period_s}s binary X_at={self._threshold}>"
        return f"<AttentionConfig T_pl={self._period_s}s uniform X={self._levels} [{self._v_min}, {self._v_max}]>"


class PupilTrace:
    """Pupil diameter samples with strictly increasing times"""

    def __init__(self, times, diameters):
        t = np.array(times, dtype=float)
        d = np.array(diameters, dtype=float)
        if t.ndim != 1 or t.shape != d.shape:
            raise ValidationError("times and diameters must be 1-D and equally long")
        if t.size and np.any(np.diff(t) <= 0):
            raise ValidationError("trace times must be strictly increasing")
        t.setflags(write=False)
        d.setflags(write=False)
        self._times = t
        self._diameters = d

    @property
    def times(self) -> np.ndarray: return self._times

    @property
    def diameters(self) -> np.ndarray: return self._diameters

    def __len__(self) -> int:
        return int(self._times.size)

    def __repr__(self) -> str:
        return f"<PupilTrace samples={len(self)}>"


class AnnealingParams:
    """Simulated-annealing schedule and search box for score fitting"""

    def __init__(self, initial_temperature: float = SimulationDefaults.SA_INITIAL_TEMPERATURE,
                 cooling_rate: float = SimulationDefaults.SA_COOLING_RATE,
                 iterations: int = SimulationDefaults.SA_ITERATIONS,
                 proposal_scale: float = SimulationDefaults.SA_PROPOSAL_SCALE,
                 score_bounds: Tuple[float, float] = SimulationDefaults.SCORE_BOUNDS,
                 decay_bounds: Tuple[float, float] = SimulationDefaults.DECAY_BOUNDS):
        self.initial_temperature = Validator.validate_number(
            initial_temperature, 'initial_temperature', min_val=0, exclusive_min=True)
        self.cooling_rate = Validator.validate_number(
            cooling_rate, 'cooling_rate', min_val=0, max_val=1, exclusive_min=True)
        self.iterations = Validator.validate_integer(iterations, 'iterations', min_val=0)
        self.proposal_scale = Validator.validate_number(
            proposal_scale, 'proposal_scale', min_val=0, exclusive_min=True)
        self.score_bounds = _bounds(score_bounds, 'score_bounds')
        self.decay_bounds = _bounds(decay_bounds, 'decay_bounds')
        if self.decay_bounds[0] <= 0:
            raise ValidationError("decay_bounds must be positive")

    def to_dict(self) -> Dict:
        return {
            'initial_temperature': self.initial_temperature,
            'cooling_rate': self.cooling_rate,
            'iterations': self.iterations,
            'proposal_scale': self.proposal_scale,
            'score_bounds': list(self.score_bounds),
            'decay_bounds': list(self.decay_bounds),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> 'AnnealingParams':
        try:
            return cls(**dict(data))
        except TypeError as e:
            raise ConfigurationError(f"unknown annealing keys: {e}")
        except ValidationError as e:
            raise ConfigurationError(f"invalid annealing section: {e}")

    def __repr__(self) -> str:
        return (f"<AnnealingParams T0={self.initial_temperature} cooling={self.cooling_rate} "
                f"iterations={self.iterations}>")


def _bounds(values, field_name: str) -> Tuple[float, float]:
    try:
        lo, hi = (float(v) for v in values)
    except (TypeError, ValueError):
        raise ValidationError(f"{field_name} must be a (lower, upper) pair")
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
        raise ValidationError(f"{field_name} must satisfy lower < upper")
    return lo, hi
