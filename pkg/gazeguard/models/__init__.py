"""
Models package initialization
"""
from .visual_state import StateKind, StateSpace, VisualAid, VisualState, build_aid_library, find_aid
from .gaze_dynamics import BurrParams, GazeDynamics, VisualAidEffect
from .trajectory import SessionId, TrajectorySegment, VsTrajectory
from .scores import AnnealingParams, AttentionConfig, PupilTrace, ScoreTable
from .learning import EpsilonSchedule, LearningParams, QTable
from .judgment import JudgmentModel, JudgmentRecord, Verdict
from .tuning import HyperBox, Kernel, Observation, TuningStage
from .experiment import ExperimentConfig, PopulationResult, RunReport, SessionResult

__all__ = [
    'StateKind',
    'StateSpace',
    'VisualAid',
    'VisualState',
    'build_aid_library',
    'find_aid',
    'BurrParams',
    'GazeDynamics',
    'VisualAidEffect',
    'SessionId',
    'TrajectorySegment',
    'VsTrajectory',
    'AnnealingParams',
    'AttentionConfig',
    'PupilTrace',
    'ScoreTable',
    'EpsilonSchedule',
    'LearningParams',
    'QTable',
    'JudgmentModel',
    'JudgmentRecord',
    'Verdict',
    'HyperBox',
    'Kernel',
    'Observation',
    'TuningStage',
    'ExperimentConfig',
    'PopulationResult',
    'RunReport',
    'SessionResult',
]
