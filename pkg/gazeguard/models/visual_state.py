"""
Visual states and visual aids.

States are addressed by position in arrays: AoIs s1..sI occupy positions
0..I-1, the uninformative area sits at I and the distraction area at I+1.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from config import SimulationDefaults

AOI_NAMES = (
    'Title', 'Sender', 'Receiver', 'Salutation', 'Main Content', 'URL',
    'Signature', 'Logo', 'Print & Share', 'Time', 'Bookmark & Forward',
    'Profile', 'Attachment',
)

UNINFORMATIVE_LABEL = 'ua'
DISTRACTION_LABEL = 'da'


class StateKind(str, Enum):
    AOI = 'aoi'
    UNINFORMATIVE = 'uninformative'
    DISTRACTION = 'distraction'


@dataclass(frozen=True)
class VisualState:
    """A gaze state: one AoI, the uninformative area or the distraction area"""
    kind: StateKind
    index: Optional[int] = None

    def __post_init__(self):
        if not isinstance(self.kind, StateKind):
            raise TypeError(f"kind must be StateKind, got {type(self.kind).__name__}")
        if self.kind is StateKind.AOI:
            if not isinstance(self.index, int) or isinstance(self.index, bool):
                raise TypeError("AoI states need an integer index")
            if self.index < 1:
                raise ValueError(f"AoI index must be >= 1, got {self.index}")
        elif self.index is not None:
            raise ValueError(f"{self.kind.value} state takes no index")

    @classmethod
    def aoi(cls, index: int) -> 'VisualState':
        return cls(StateKind.AOI, index)

    @classmethod
    def uninformative(cls) -> 'VisualState':
        return cls(StateKind.UNINFORMATIVE)

    @classmethod
    def distraction(cls) -> 'VisualState':
        return cls(StateKind.DISTRACTION)

    @property
    def label(self) -> str:
        if self.kind is StateKind.AOI:
            return f"s{self.index}"
        if self.kind is StateKind.UNINFORMATIVE:
            return UNINFORMATIVE_LABEL
        return DISTRACTION_LABEL

    def __str__(self) -> str:
        return self.label


class StateSpace:
    """The I+2 visual states of an email layout"""

    def __init__(self, n_aois: int = SimulationDefaults.N_AOIS,
                 content_aoi: int = SimulationDefaults.CONTENT_AOI):
        if not isinstance(n_aois, int) or isinstance(n_aois, bool):
            raise TypeError(f"n_aois must be int, got {type(n_aois).__name__}")
        if n_aois < 1:
            raise ValueError("n_aois must be >= 1")
        if not 1 <= content_aoi <= n_aois:
            # Small layouts (tests) have no main-content AoI
            content_aoi = None

        self._n_aois = n_aois
        self._content_aoi = content_aoi
        self._states: Tuple[VisualState, ...] = tuple(
            [VisualState.aoi(i) for i in range(1, n_aois + 1)]
            + [VisualState.uninformative(), VisualState.distraction()]
        )
        self._positions: Dict[VisualState, int] = {s: p for p, s in enumerate(self._states)}
        self._by_label: Dict[str, VisualState] = {s.label: s for s in self._states}

    @property
    def n_aois(self) -> int: return self._n_aois

    @property
    def size(self) -> int: return self._n_aois + 2

    @property
    def states(self) -> Tuple[VisualState, ...]: return self._states

    @property
    def labels(self) -> List[str]: return [s.label for s in self._states]

    @property
    def uninformative_position(self) -> int: return self._n_aois

    @property
    def distraction_position(self) -> int: return self._n_aois + 1

    @property
    def content_position(self) -> Optional[int]:
        return None if self._content_aoi is None else self._content_aoi - 1

    @property
    def aoi_positions(self) -> List[int]: return list(range(self._n_aois))

    def position(self, state: VisualState) -> int:
        try:
            return self._positions[state]
        except KeyError:
            raise ValueError(f"{state} is not part of a {self._n_aois}-AoI layout")

    def state(self, position: int) -> VisualState:
        if not 0 <= position < self.size:
            raise IndexError(f"state position {position} out of range 0..{self.size - 1}")
        return self._states[position]

    def from_label(self, label: str) -> VisualState:
        try:
            return self._by_label[label.strip()]
        except KeyError:
            raise ValueError(f"Unknown visual state '{label}'")

    def display_name(self, state: VisualState) -> str:
        if state.kind is StateKind.AOI and self._n_aois == len(AOI_NAMES):
            return AOI_NAMES[state.index - 1]
        return state.label

    def __eq__(self, other) -> bool:
        return isinstance(other, StateSpace) and (self._n_aois, self._content_aoi) == (other._n_aois, other._content_aoi)

    def __hash__(self) -> int:
        return hash((self._n_aois, self._content_aoi))

    def __repr__(self) -> str:
        return f"<StateSpace aois={self._n_aois} size={self.size}>"


@dataclass(frozen=True)
class VisualAid:
    """A display intervention; `id` orders the library and breaks ties"""
    id: int
    name: str

    def __post_init__(self):
        if not isinstance(self.id, int) or self.id < 0:
            raise ValueError(f"aid id must be a non-negative int, got {self.id!r}")
        if not isinstance(self.name, str) or not self.name.strip():
            raise ValueError("aid name cannot be empty")

    def __str__(self) -> str:
        return self.name


def build_aid_library(names: Iterable[str]) -> Tuple[VisualAid, ...]:
    """Aid library in the given order; ids follow the order"""
    names = list(names)
    if not names:
        raise ValueError("aid library cannot be empty")
    if len(set(names)) != len(names):
        raise ValueError("aid names must be unique")
    return tuple(VisualAid(i, n) for i, n in enumerate(names))


def find_aid(aids: Sequence[VisualAid], name: str) -> VisualAid:
    for aid in aids:
        if aid.name == name:
            return aid
    raise ValueError(f"Unknown visual aid '{name}' (library: {[a.name for a in aids]})")
