"""
Tabular Q-learning over (attention state, visual aid)
"""
import logging

import numpy as np

from models.learning import EpsilonSchedule, LearningParams, QTable
from models.visual_state import VisualAid
from utils.validation import ValidationError, Validator

logger = logging.getLogger(__name__)


def learning_rate(visit_count, eta0: float):
    """
    Visit-count learning rate eta0 / (n - 1 + eta0).

    Accepts a scalar count (returns float) or an array of counts.
    """
    eta0 = Validator.validate_number(eta0, 'eta0', min_val=0, exclusive_min=True)
    counts = np.asarray(visit_count, dtype=float)
    if np.any(counts < 1):
        raise ValidationError("visit_count must be >= 1")
    rate = eta0 / (counts - 1.0 + eta0)
    return float(rate) if rate.ndim == 0 else rate


def epsilon_at(k: int, schedule: EpsilonSchedule) -> float:
    """Exploration probability at global generation stage k (1 at k = 0)"""
    k = Validator.validate_integer(k, 'k', min_val=0)
    if schedule.kind == EpsilonSchedule.INVERSE_STAGE:
        return schedule.kappa / (schedule.kappa + k)
    return schedule.decay ** k


def greedy_aid(qtable: QTable, x: int) -> VisualAid:
    """argmax_a q(x, a); np.argmax returns the lowest index among ties"""
    return qtable.aids[int(np.argmax(qtable.q[x]))]


def select_aid(qtable: QTable, x: int, epsilon: float, rng: np.random.Generator) -> VisualAid:
    """Epsilon-greedy choice: uniform over the library with probability epsilon"""
    epsilon = Validator.validate_number(epsilon, 'epsilon', min_val=0, max_val=1)
    if not 0 <= x < qtable.n_states:
        raise ValidationError(f"attention state {x} out of range 0..{qtable.n_states - 1}")
    if rng.random() < epsilon:
        return qtable.aids[int(rng.integers(len(qtable.aids)))]
    return greedy_aid(qtable, x)


def record_visit(qtable: QTable, x: int, aid) -> QTable:
    return qtable.with_visit(x, aid)


def q_update(qtable: QTable, x: int, aid, reward: float, x_next: int,
             params: LearningParams) -> QTable:
    """
    One temporal-difference step on q(x, aid).

    The visit for (x, aid) must already be recorded; the rate uses the
    post-increment count.
    """
    visits = qtable.visit_count(x, aid)
    if visits < 1:
        raise ValidationError(f"record the visit to ({x}, {aid}) before updating it")
    gamma = learning_rate(visits, params.eta0)
    current = qtable.value(x, aid)
    target = reward + params.beta * float(qtable.q[x_next].max())
    updated = current + gamma * (target - current)
    logger.debug(f"q({x}, {aid}) {current:.4f} -> {updated:.4f} (gamma={gamma:.4f}, reward={reward:.4f})")
    return qtable.with_value(x, aid, updated)
