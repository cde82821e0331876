"""
Q-learning models: the Q-table with visit counts and the learning parameters.
"""
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from config import SimulationDefaults
from models.visual_state import VisualAid, find_aid
from utils.validation import ConfigurationError, ValidationError, Validator


class QTable:
    """
    Q-values and visit counts over (attention state x, visual aid a).

    Immutable: update helpers return new tables.
    """

    def __init__(self, aids: Sequence[VisualAid], q, visits=None):
        if not aids:
            raise ValidationError("aid library cannot be empty")
        q = np.array(q, dtype=float)
        if q.ndim != 2 or q.shape[1] != len(aids) or q.shape[0] < 1:
            raise ValidationError(f"q must be X x {len(aids)}, got shape {q.shape}")
        if visits is None:
            visits = np.zeros(q.shape, dtype=np.int64)
        visits = np.array(visits, dtype=np.int64)
        if visits.shape != q.shape:
            raise ValidationError("visits must match the q shape")
        if np.any(visits < 0):
            raise ValidationError("visit counts cannot be negative")
        q.setflags(write=False)
        visits.setflags(write=False)
        self._aids = tuple(aids)
        self._q = q
        self._visits = visits

    @classmethod
    def zeros(cls, n_states: int, aids: Sequence[VisualAid]) -> 'QTable':
        return cls(aids, np.zeros((n_states, len(aids))))

    @property
    def aids(self) -> Tuple[VisualAid, ...]: return self._aids

    @property
    def q(self) -> np.ndarray: return self._q

    @property
    def visits(self) -> np.ndarray: return self._visits

    @property
    def n_states(self) -> int: return self._q.shape[0]

    def column(self, aid) -> int:
        """Column index of an aid (VisualAid, name or index)"""
        if isinstance(aid, VisualAid):
            aid = aid.name
        if isinstance(aid, str):
            return self._aids.index(find_aid(self._aids, aid))
        index = int(aid)
        if not 0 <= index < len(self._aids):
            raise IndexError(f"aid index {index} out of range")
        return index

    def value(self, x: int, aid) -> float:
        return float(self._q[x, self.column(aid)])

    def visit_count(self, x: int, aid) -> int:
        return int(self._visits[x, self.column(aid)])

    def with_visit(self, x: int, aid) -> 'QTable':
        visits = self._visits.copy()
        visits[x, self.column(aid)] += 1
        return QTable(self._aids, self._q, visits)

    def with_value(self, x: int, aid, value: float) -> 'QTable':
        q = self._q.copy()
        q[x, self.column(aid)] = value
        return QTable(self._aids, q, self._visits)

    def to_dict(self) -> Dict:
        return {'q': self._q.tolist(), 'visits': self._visits.tolist()}

    def __eq__(self, other) -> bool:
        return (isinstance(other, QTable) and self._aids == other._aids
                and np.array_equal(self._q, other._q) and np.array_equal(self._visits, other._visits))

    def __repr__(self) -> str:
        return f"<QTable X={self.n_states} aids={[a.name for a in self._aids]} visits={int(self._visits.sum())}>"


class EpsilonSchedule:
    """Exploration schedule: inverse-stage kappa/(kappa+k) or exponential decay**k"""

    INVERSE_STAGE = 'inverse-stage'
    EXPONENTIAL = 'exponential'

    def __init__(self, kind: str = INVERSE_STAGE,
                 kappa: float = SimulationDefaults.EPSILON_KAPPA,
                 decay: float = SimulationDefaults.EPSILON_DECAY):
        self._kind = Validator.validate_choice(kind, [self.INVERSE_STAGE, self.EXPONENTIAL], 'epsilon.kind')
        self._kappa = Validator.validate_number(kappa, 'epsilon.kappa', min_val=0, exclusive_min=True)
        self._decay = Validator.validate_number(decay, 'epsilon.decay', min_val=0, max_val=1)

    @property
    def kind(self) -> str: return self._kind

    @property
    def kappa(self) -> float: return self._kappa

    @property
    def decay(self) -> float: return self._decay

    def to_dict(self) -> Dict:
        return {'kind': self._kind, 'kappa': self._kappa, 'decay': self._decay}

    def __repr__(self) -> str:
        if self._kind == self.INVERSE_STAGE:
            return f"<EpsilonSchedule kappa/(kappa+k) kappa={self._kappa}>"
        return f"<EpsilonSchedule decay**k decay={self._decay}>"


class LearningParams:
    """Discount beta, learning-rate constant eta0 and exploration schedule"""

    def __init__(self, beta: float = SimulationDefaults.BETA,
                 eta0: float = SimulationDefaults.ETA0,
                 epsilon: Optional[EpsilonSchedule] = None,
                 initial_state: int = 0):
        self._beta = Validator.validate_number(beta, 'beta', min_val=0, max_val=1, exclusive_min=True)
        if self._beta >= 1:
            raise ValidationError("beta must be < 1")
        self._eta0 = Validator.validate_number(eta0, 'eta0', min_val=0, exclusive_min=True)
        self._epsilon = epsilon or EpsilonSchedule()
        self._initial_state = Validator.validate_integer(initial_state, 'initial_state', min_val=0)

    @property
    def beta(self) -> float: return self._beta

    @property
    def eta0(self) -> float: return self._eta0

    @property
    def epsilon(self) -> EpsilonSchedule: return self._epsilon

    @property
    def initial_state(self) -> int: return self._initial_state

    def to_dict(self) -> Dict:
        return {
            'beta': self._beta,
            'eta0': self._eta0,
            'epsilon': self._epsilon.to_dict(),
            'initial_state': self._initial_state,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> 'LearningParams':
        try:
            eps = data.get('epsilon') or {}
            schedule = EpsilonSchedule(
                eps.get('kind', EpsilonSchedule.INVERSE_STAGE),
                eps.get('kappa', SimulationDefaults.EPSILON_KAPPA),
                eps.get('decay', SimulationDefaults.EPSILON_DECAY))
            return cls(data.get('beta', SimulationDefaults.BETA),
                       data.get('eta0', SimulationDefaults.ETA0),
                       schedule,
                       data.get('initial_state', 0))
        except ValidationError as e:
            raise ConfigurationError(f"invalid learning section: {e}")

    def __repr__(self) -> str:
        return f"<LearningParams beta={self._beta} eta0={self._eta0} {self._epsilon!r}>"
