"""
Semi-Markov gaze dynamics: per-aid transition matrices, sojourn scales,
initial-state law and the Burr inspection-time model.
"""
import logging
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from config import SimulationDefaults
from models.visual_state import StateSpace, VisualAid, VisualState, build_aid_library, find_aid
from utils.validation import ConfigurationError, ValidationError, Validator

logger = logging.getLogger(__name__)


class BurrParams:
    """Burr type XII inspection-time law, F(t) = 1 - (1 + (t/rho1)^rho2)^-rho3"""

    def __init__(self, rho1: float = SimulationDefaults.BURR_RHO1,
                 rho2: float = SimulationDefaults.BURR_RHO2,
                 rho3: float = SimulationDefaults.BURR_RHO3):
        self._rho1 = Validator.validate_number(rho1, 'rho1', min_val=0, exclusive_min=True)
        self._rho2 = Validator.validate_number(rho2, 'rho2', min_val=0, exclusive_min=True)
        self._rho3 = Validator.validate_number(rho3, 'rho3', min_val=0, exclusive_min=True)

    @property
    def rho1(self) -> float: return self._rho1

    @property
    def rho2(self) -> float: return self._rho2

    @property
    def rho3(self) -> float: return self._rho3

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        x = np.clip(t, 0.0, None) / self._rho1
        return -np.expm1(-self._rho3 * np.log1p(x ** self._rho2))

    def mean(self) -> float:
        """Closed-form mean; infinite when rho2*rho3 <= 1"""
        if self._rho2 * self._rho3 <= 1:
            return float('inf')
        return float(self._rho1 * self._rho3 * special.beta(
            self._rho3 - 1.0 / self._rho2, 1.0 + 1.0 / self._rho2))

    def to_list(self) -> List[float]:
        return [self._rho1, self._rho2, self._rho3]

    def __eq__(self, other) -> bool:
        return isinstance(other, BurrParams) and self.to_list() == other.to_list()

    def __repr__(self) -> str:
        return f"<BurrParams rho1={self._rho1} rho2={self._rho2} rho3={self._rho3}>"


class VisualAidEffect:
    """How an aid reshapes a source aid's dynamics"""

    def __init__(self, distraction_damping: float = SimulationDefaults.DISTRACTION_DAMPING,
                 content_sojourn_scale: float = SimulationDefaults.CONTENT_SOJOURN_SCALE):
        self._distraction_damping = Validator.validate_number(
            distraction_damping, 'distraction_damping', min_val=0, max_val=1)
        self._content_sojourn_scale = Validator.validate_number(
            content_sojourn_scale, 'content_sojourn_scale', min_val=0, max_val=1,
            exclusive_min=True)

    @property
    def distraction_damping(self) -> float: return self._distraction_damping

    @property
    def content_sojourn_scale(self) -> float: return self._content_sojourn_scale

    def to_dict(self) -> Dict[str, float]:
        return {
            'distraction_damping': self._distraction_damping,
            'content_sojourn_scale': self._content_sojourn_scale,
        }

    def __repr__(self) -> str:
        return (f"<VisualAidEffect damping={self._distraction_damping} "
                f"content_scale={self._content_sojourn_scale}>")


class GazeDynamics:
    """
    Per-aid semi-Markov parameters over a StateSpace.

    Matrices are stored read-only; the object is immutable after construction.
    """

    def __init__(self, space: StateSpace, aids: Sequence[VisualAid],
                 transitions: Mapping[str, np.ndarray],
                 sojourns: Mapping[str, np.ndarray],
                 initial: Optional[np.ndarray] = None,
                 burr: Optional[BurrParams] = None):
        if not isinstance(space, StateSpace):
            raise TypeError(f"space must be StateSpace, got {type(space).__name__}")
        if not aids:
            raise ValidationError("aid library cannot be empty")

        n = space.size
        self._space = space
        self._aids: Tuple[VisualAid, ...] = tuple(aids)
        self._transitions: Dict[str, np.ndarray] = {}
        self._sojourns: Dict[str, np.ndarray] = {}
        self._cumulative: Dict[str, np.ndarray] = {}

        for aid in self._aids:
            if aid.name not in transitions or aid.name not in sojourns:
                raise ConfigurationError(f"dynamics missing for aid '{aid.name}'")
            P = Validator.validate_stochastic_matrix(
                transitions[aid.name], n, f"transition.{aid.name}",
                tolerance=SimulationDefaults.ROW_SUM_TOLERANCE)
            phi = Validator.validate_positive_vector(sojourns[aid.name], n, f"sojourn.{aid.name}")
            P.setflags(write=False)
            phi.setflags(write=False)
            self._transitions[aid.name] = P
            self._sojourns[aid.name] = phi
            cumulative = np.cumsum(P, axis=1)
            cumulative[:, -1] = 1.0
            cumulative.setflags(write=False)
            self._cumulative[aid.name] = cumulative

        if initial is None:
            initial = np.zeros(n)
            initial[space.position(space.from_label(SimulationDefaults.INITIAL_STATE))] = 1.0
        self._initial = Validator.validate_probability_vector(
            initial, n, 'initial', tolerance=SimulationDefaults.ROW_SUM_TOLERANCE)
        self._initial.setflags(write=False)
        self._initial_cumulative = np.cumsum(self._initial)
        self._initial_cumulative[-1] = 1.0
        self._burr = burr or BurrParams()

    # Properties
    @property
    def space(self) -> StateSpace: return self._space

    @property
    def aids(self) -> Tuple[VisualAid, ...]: return self._aids

    @property
    def initial(self) -> np.ndarray: return self._initial

    @property
    def burr(self) -> BurrParams: return self._burr

    def aid(self, name: str) -> VisualAid:
        return find_aid(self._aids, name)

    def transition(self, aid) -> np.ndarray:
        return self._transitions[self._aid_name(aid)]

    def sojourn(self, aid) -> np.ndarray:
        return self._sojourns[self._aid_name(aid)]

    def cumulative_row(self, aid, position: int) -> np.ndarray:
        return self._cumulative[self._aid_name(aid)][position]

    def initial_cumulative(self) -> np.ndarray:
        return self._initial_cumulative

    def _aid_name(self, aid) -> str:
        name = aid.name if isinstance(aid, VisualAid) else str(aid)
        if name not in self._transitions:
            raise ValidationError(f"No dynamics for visual aid '{name}'")
        return name

    # Derived copies
    def with_aid(self, aid: VisualAid, transition: np.ndarray, sojourn: np.ndarray) -> 'GazeDynamics':
        """Copy with `aid` added (or replaced)"""
        aids = [a for a in self._aids if a.name != aid.name]
        aids.append(aid)
        aids.sort(key=lambda a: a.id)
        transitions = dict(self._transitions)
        sojourns = dict(self._sojourns)
        transitions[aid.name] = transition
        sojourns[aid.name] = sojourn
        return GazeDynamics(self._space, aids, transitions, sojourns, self._initial, self._burr)

    def restricted_to(self, names: Sequence[str]) -> 'GazeDynamics':
        """Copy keeping only the named aids (ids are renumbered in the given order)"""
        aids = build_aid_library(names)
        return GazeDynamics(
            self._space, aids,
            {a.name: self.transition(a.name) for a in aids},
            {a.name: self.sojourn(a.name) for a in aids},
            self._initial, self._burr)

    def to_dict(self) -> Dict:
        """Structured-config form of the dynamics (the `gaze` section)"""
        data = {
            'n_aois': self._space.n_aois,
            'aids': [a.name for a in self._aids],
            'initial': self._initial.tolist(),
            'burr': self._burr.to_list(),
        }
        for aid in self._aids:
            data[f"transition.{aid.name}"] = self._transitions[aid.name].tolist()
            data[f"sojourn.{aid.name}"] = self._sojourns[aid.name].tolist()
        return data

    @classmethod
    def from_dict(cls, data: Mapping, space: Optional[StateSpace] = None) -> 'GazeDynamics':
        """
        Build dynamics from the `gaze` config section.

        Transition rows are relative weights and are normalized here; aids
        listed under `effects` without their own matrix are derived from
        their source aid.
        """
        from analytics.gaze_model import apply_visual_aid_effect

        if not isinstance(data, Mapping):
            raise ConfigurationError("gaze section must be a mapping")
        n_aois = Validator.validate_integer(data.get('n_aois', SimulationDefaults.N_AOIS), 'gaze.n_aois', min_val=1)
        space = space or StateSpace(n_aois)
        try:
            names = Validator.validate_names(data.get('aids', ['aN', 'aY']), 'gaze.aids')
        except ValidationError as e:
            raise ConfigurationError(str(e))
        library = build_aid_library(names)
        effects = data.get('effects') or {}

        explicit = [a for a in library if f"transition.{a.name}" in data]
        if not explicit:
            raise ConfigurationError("gaze section needs at least one transition.<aid> matrix")

        transitions = {a.name: _normalize_rows(data[f"transition.{a.name}"], space.size, f"transition.{a.name}")
                       for a in explicit}
        sojourns = {}
        for a in explicit:
            key = f"sojourn.{a.name}"
            if key not in data:
                raise ConfigurationError(f"gaze section missing '{key}'")
            sojourns[a.name] = data[key]

        burr_values = data.get('burr', [SimulationDefaults.BURR_RHO1, SimulationDefaults.BURR_RHO2, SimulationDefaults.BURR_RHO3])
        try:
            burr = BurrParams(*burr_values)
            initial = _parse_initial(data.get('initial', SimulationDefaults.INITIAL_STATE), space)
            dynamics = cls(space, explicit, transitions, sojourns, initial, burr)
        except (TypeError, ValueError, ValidationError) as e:
            raise ConfigurationError(f"invalid gaze section: {e}")

        for aid in library:
            if aid.name in transitions:
                continue
            settings = effects.get(aid.name)
            if settings is None:
                raise ConfigurationError(f"aid '{aid.name}' has neither a matrix nor an effect")
            source = settings.get('source', library[0].name)
            try:
                effect = VisualAidEffect(
                    settings.get('distraction_damping', SimulationDefaults.DISTRACTION_DAMPING),
                    settings.get('content_sojourn_scale', SimulationDefaults.CONTENT_SOJOURN_SCALE))
            except ValidationError as e:
                raise ConfigurationError(f"effects.{aid.name}: {e}")
            dynamics = apply_visual_aid_effect(dynamics, effect, source=source, target=aid)

        logger.debug(f"Loaded gaze dynamics with aids {[a.name for a in dynamics.aids]}")
        return dynamics

    def __repr__(self) -> str:
        return f"<GazeDynamics states={self._space.size} aids={[a.name for a in self._aids]}>"


def _normalize_rows(values, size: int, field_name: str) -> np.ndarray:
    try:
        arr = np.array(values, dtype=float)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{field_name} must be numeric")
    if arr.shape != (size, size):
        raise ConfigurationError(f"{field_name} must be {size}x{size}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ConfigurationError(f"{field_name} entries must be finite and >= 0")
    if np.any(np.diag(arr) != 0):
        raise ConfigurationError(f"{field_name} must have a zero diagonal")
    sums = arr.sum(axis=1)
    empty = np.flatnonzero(sums == 0)
    if empty.size:
        raise ConfigurationError(f"{field_name} rows {empty.tolist()} are all zero")
    return arr / sums[:, None]


def _parse_initial(value, space: StateSpace) -> np.ndarray:
    if isinstance(value, str):
        initial = np.zeros(space.size)
        initial[space.position(space.from_label(value))] = 1.0
        return initial
    return np.array(value, dtype=float)
