"""
Timed gaze records
"""
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

from models.visual_state import VisualAid, VisualState
from utils.validation import ValidationError

# Contiguity tolerance, seconds
TIME_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SessionId:
    """(user m, email n)"""
    user: int
    email: int

    def __str__(self) -> str:
        return f"{self.user}:{self.email}"

    @classmethod
    def from_index(cls, index: int, emails_per_user: int) -> 'SessionId':
        return cls(index // emails_per_user, index % emails_per_user)


@dataclass(frozen=True)
class TrajectorySegment:
    """One transition stage: `state` held from `start` for `duration` seconds"""
    state: VisualState
    start: float
    duration: float

    def __post_init__(self):
        if self.start < -TIME_TOLERANCE:
            raise ValueError(f"segment start must be >= 0, got {self.start}")
        if not self.duration > 0:
            raise ValueError(f"segment duration must be > 0, got {self.duration}")

    @property
    def end(self) -> float:
        return self.start + self.duration


class VsTrajectory:
    """
    Ordered, contiguous gaze segments of one session.

    Adjacent segments always hold different states. `stage_aids` records the
    aid active in each generation stage of length `stage_length`, when known.
    """

    def __init__(self, segments: Sequence[TrajectorySegment],
                 session_id: SessionId = SessionId(0, 0),
                 stage_aids: Optional[Sequence[VisualAid]] = None,
                 stage_length: Optional[float] = None):
        segments = tuple(segments)
        if not segments:
            raise ValidationError("trajectory needs at least one segment")
        if abs(segments[0].start) > TIME_TOLERANCE:
            raise ValidationError("trajectory must start at 0")
        for prev, cur in zip(segments, segments[1:]):
            if abs(cur.start - prev.end) > TIME_TOLERANCE * max(1.0, prev.end):
                raise ValidationError(f"segments not contiguous at t={prev.end:.6f}")
            if cur.state == prev.state:
                raise ValidationError(f"adjacent segments share state {cur.state}")
        if stage_aids is not None and stage_length is None:
            raise ValidationError("stage_aids need a stage_length")

        self._segments: Tuple[TrajectorySegment, ...] = segments
        self._session_id = session_id
        self._stage_aids = tuple(stage_aids) if stage_aids is not None else None
        self._stage_length = stage_length

    @classmethod
    def from_pieces(cls, pieces: Iterable[Tuple[VisualState, float]], **kwargs) -> 'VsTrajectory':
        """Build from (state, duration) pieces, merging equal neighbours"""
        merged: List[List] = []
        for state, duration in pieces:
            if duration <= 0:
                continue
            if merged and merged[-1][0] == state:
                merged[-1][1] += duration
            else:
                merged.append([state, duration])
        segments = []
        t = 0.0
        for state, duration in merged:
            segments.append(TrajectorySegment(state, t, duration))
            t += duration
        return cls(segments, **kwargs)

    @property
    def segments(self) -> Tuple[TrajectorySegment, ...]: return self._segments

    @property
    def session_id(self) -> SessionId: return self._session_id

    @property
    def stage_aids(self) -> Optional[Tuple[VisualAid, ...]]: return self._stage_aids

    @property
    def stage_length(self) -> Optional[float]: return self._stage_length

    @property
    def duration(self) -> float:
        return self._segments[-1].end

    def aid_at(self, t: float) -> Optional[VisualAid]:
        """Aid active at time t, if recorded"""
        if self._stage_aids is None:
            return None
        k = int(t // self._stage_length)
        return self._stage_aids[min(max(k, 0), len(self._stage_aids) - 1)]

    def __len__(self) -> int:
        return len(self._segments)

    def __iter__(self):
        return iter(self._segments)

    def __repr__(self) -> str:
        return f"<VsTrajectory {self._session_id} segments={len(self._segments)} T={self.duration:.3f}s>"
