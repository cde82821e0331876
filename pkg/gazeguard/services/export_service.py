"""
Export Service - writes run artifacts as CSV and JSON.

Nothing written here carries a timestamp, so the same config and seed
reproduce every file byte for byte.
"""
import json
import logging
import os
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from models.experiment import PopulationResult, RunReport
from models.learning import QTable
from models.scores import PupilTrace
from models.trajectory import SessionId, VsTrajectory
from models.visual_state import StateSpace
from utils.validation import ConfigurationError

logger = logging.getLogger(__name__)


class ExportService:
    """Tabular views of results and the files written from them"""

    def __init__(self, output_dir: str):
        self.output_dir = output_dir
        os.makedirs(output_dir, exist_ok=True)

    def path(self, filename: str) -> str:
        return os.path.join(self.output_dir, filename)

    def write_csv(self, df: pd.DataFrame, filename: str) -> str:
        path = self.path(filename)
        df.to_csv(path, index=False)
        logger.info(f"Wrote {len(df)} rows to {path}")
        return path

    def write_json(self, data: Dict, filename: str) -> str:
        path = self.path(filename)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(_plain(data), f, indent=2, sort_keys=True)
            f.write('\n')
        logger.info(f"Wrote {path}")
        return path

    # --- Frames ---

    @staticmethod
    def trajectory_frame(trajectories: Sequence[VsTrajectory]) -> pd.DataFrame:
        rows = [{'session_id': str(t.session_id), 'state': seg.state.label,
                 'start_s': seg.start, 'duration_s': seg.duration}
                for t in trajectories for seg in t.segments]
        return pd.DataFrame(rows, columns=['session_id', 'state', 'start_s', 'duration_s'])

    @staticmethod
    def trace_frame(trace: PupilTrace) -> pd.DataFrame:
        return pd.DataFrame({'time_s': trace.times, 'diameter': trace.diameters})

    @staticmethod
    def qcurve_frame(population: PopulationResult) -> pd.DataFrame:
        """q of every (x, a) after each generation stage"""
        aids = [a.name for a in population.qtable.aids]
        rows = []
        for session in population.sessions:
            for offset, q in enumerate(session.q_snapshots):
                stage = session.first_stage + offset + 1
                for x in range(q.shape[0]):
                    for j, name in enumerate(aids):
                        rows.append({'stage': stage, 'x': x, 'a': name, 'q_value': float(q[x, j])})
        return pd.DataFrame(rows, columns=['stage', 'x', 'a', 'q_value'])

    @staticmethod
    def records_frame(population: PopulationResult, names: Sequence[str]) -> pd.DataFrame:
        rows = []
        for record in population.records:
            row = {'session_id': str(record.session_id), 'z': record.verdict.value,
                   'p_correct': record.p_correct}
            row.update(dict(zip(names, record.theta)))
            rows.append(row)
        return pd.DataFrame(rows, columns=['session_id', 'z', 'p_correct'] + list(names))

    @staticmethod
    def aal_frame(population: PopulationResult) -> pd.DataFrame:
        """AAL of every completed stage with the state and aid it ran under"""
        rows = []
        for session in population.sessions:
            for offset, (x, aid, value) in enumerate(zip(session.stage_states, session.stage_aids,
                                                         session.stage_aals)):
                rows.append({'stage': session.first_stage + offset + 1, 'x': x, 'a': aid, 'aal': value})
        return pd.DataFrame(rows, columns=['stage', 'x', 'a', 'aal'])

    @staticmethod
    def history_frame(report: RunReport) -> pd.DataFrame:
        rows = []
        for stage in report.history:
            row = {'stage': stage.stage}
            row.update(dict(zip(report.names, stage.theta)))
            row.update({
                'value': stage.value,
                'incumbent': stage.incumbent,
                'mean': report.repeat_means.get(stage.stage, np.nan),
                'variance': report.repeat_variances.get(stage.stage, np.nan),
                'failed': stage.failed,
            })
            rows.append(row)
        columns = ['stage'] + list(report.names) + ['value', 'incumbent', 'mean', 'variance', 'failed']
        return pd.DataFrame(rows, columns=columns)

    @staticmethod
    def qtable_dict(qtable: QTable) -> Dict:
        return qtable.to_dict()

    # --- Readers ---

    @staticmethod
    def read_trace(path: str) -> PupilTrace:
        df = _read(path, ['time_s', 'diameter'])
        return PupilTrace(df['time_s'].to_numpy(), df['diameter'].to_numpy())

    @staticmethod
    def read_trajectory(path: str, space: StateSpace, stage_length: Optional[float] = None) -> VsTrajectory:
        """First session of a trajectory CSV"""
        df = _read(path, ['session_id', 'state', 'start_s', 'duration_s'])
        first = df['session_id'].astype(str).iloc[0]
        df = df[df['session_id'].astype(str) == first].sort_values('start_s')
        user, _, email = first.partition(':')
        pieces = [(space.from_label(label), float(d)) for label, d in zip(df['state'], df['duration_s'])]
        session = SessionId(int(user), int(email or 0))
        return VsTrajectory.from_pieces(pieces, session_id=session, stage_length=stage_length)


def _read(path: str, columns: List[str]) -> pd.DataFrame:
    if not os.path.exists(path):
        raise FileNotFoundError(f"file not found: {path}")
    df = pd.read_csv(path)
    missing = [c for c in columns if c not in df.columns]
    if missing or df.empty:
        raise ConfigurationError(f"{path} needs columns {columns} and at least one row")
    return df


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    return value
