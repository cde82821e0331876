"""
Synthetic judgment oracle and judgment records
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Mapping, Optional, Tuple

from config import SimulationDefaults
from models.trajectory import SessionId
from utils.validation import ConfigurationError, ValidationError, Validator


class Verdict(str, Enum):
    CORRECT = 'correct'
    WRONG = 'wrong'


class JudgmentModel:
    """
    Logistic correctness model.

    P(correct) = sigmoid(b0 + b1*mean_aal + b2*content_fraction - b3*distraction_fraction)
    """

    def __init__(self, b0: float = 0.0,
                 b1: float = SimulationDefaults.JUDGMENT_B1,
                 b2: float = SimulationDefaults.JUDGMENT_B2,
                 b3: float = SimulationDefaults.JUDGMENT_B3):
        self._b0 = Validator.validate_number(b0, 'judgment.b0')
        self._b1 = Validator.validate_number(b1, 'judgment.b1', min_val=0)
        self._b2 = Validator.validate_number(b2, 'judgment.b2', min_val=0)
        self._b3 = Validator.validate_number(b3, 'judgment.b3', min_val=0)

    @property
    def b0(self) -> float: return self._b0

    @property
    def b1(self) -> float: return self._b1

    @property
    def b2(self) -> float: return self._b2

    @property
    def b3(self) -> float: return self._b3

    def with_intercept(self, b0: float) -> 'JudgmentModel':
        return JudgmentModel(b0, self._b1, self._b2, self._b3)

    def to_dict(self) -> Dict[str, float]:
        return {
            'judgment.b0': self._b0,
            'judgment.b1': self._b1,
            'judgment.b2': self._b2,
            'judgment.b3': self._b3,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> 'JudgmentModel':
        def pick(name, default):
            return data.get(f"judgment.{name}", data.get(name, default))
        try:
            return cls(pick('b0', 0.0),
                       pick('b1', SimulationDefaults.JUDGMENT_B1),
                       pick('b2', SimulationDefaults.JUDGMENT_B2),
                       pick('b3', SimulationDefaults.JUDGMENT_B3))
        except ValidationError as e:
            raise ConfigurationError(f"invalid judgment section: {e}")

    def __eq__(self, other) -> bool:
        return isinstance(other, JudgmentModel) and self.to_dict() == other.to_dict()

    def __repr__(self) -> str:
        return f"<JudgmentModel b0={self._b0:.4f} b1={self._b1} b2={self._b2} b3={self._b3}>"


@dataclass(frozen=True)
class JudgmentRecord:
    """One session's verdict under hyperparameter vector `theta`"""
    session_id: SessionId
    verdict: Verdict
    theta: Tuple[float, ...] = ()
    p_correct: Optional[float] = None

    @property
    def correct(self) -> bool:
        return self.verdict is Verdict.CORRECT
