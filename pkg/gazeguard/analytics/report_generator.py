"""
Report Generator - static figures of gaze dynamics, attention and tuning runs.
"""
import logging
import os
from typing import Dict, Optional

import pandas as pd

from models.experiment import RunReport
from models.gaze_dynamics import GazeDynamics

logger = logging.getLogger(__name__)


class ReportGenerator:
    """
    Draw experiment figures with matplotlib and seaborn.

    Every create_* method writes one PNG under `output_dir` and returns its
    path, or an empty string if drawing failed.
    """

    def __init__(self, output_dir: str):
        if not output_dir:
            raise ValueError("output_dir cannot be empty")
        self.output_dir = output_dir
        # Modules placeholder for lazy loading
        self._plt = None
        self._sns = None

    def _ensure_plotting_libs(self):
        """Lazy load matplotlib and seaborn"""
        if self._plt is None:
            try:
                import matplotlib
                matplotlib.use('Agg')  # Non-interactive backend
                import matplotlib.pyplot as plt
                import seaborn as sns

                self._plt = plt
                self._sns = sns
                self._setup_style()
                logger.info("Plotting libraries loaded successfully")
            except ImportError as e:
                logger.critical(f"Failed to load plotting libraries: {e}")
                raise

    def _setup_style(self):
        self._sns.set_style("darkgrid")
        self._sns.set_palette("husl")
        self._plt.rcParams.update({
            'figure.figsize': (8, 4),
            'figure.dpi': 72,
            'savefig.dpi': 100,
            'savefig.bbox': 'tight',
            'font.size': 9,
            'axes.titlesize': 12,
            'axes.labelsize': 10,
        })

    def _save(self, fig, filename: str) -> str:
        os.makedirs(self.output_dir, exist_ok=True)
        path = os.path.join(self.output_dir, filename)
        fig.tight_layout()
        fig.savefig(path)
        self._plt.close(fig)
        return path

    def create_transition_heatmaps(self, dynamics: GazeDynamics, filename: str = 'transitions.png') -> str:
        """Side-by-side transition matrices, one per aid"""
        try:
            self._ensure_plotting_libs()
            labels = dynamics.space.labels
            aids = dynamics.aids
            fig, axes = self._plt.subplots(1, len(aids), figsize=(7 * len(aids), 6), squeeze=False)
            for ax, aid in zip(axes[0], aids):
                frame = pd.DataFrame(dynamics.transition(aid), index=labels, columns=labels)
                self._sns.heatmap(frame, ax=ax, cmap='viridis', vmin=0, vmax=1, square=True, cbar=True)
                ax.set_title(f"Transition probabilities under {aid.name}", fontweight='bold')
                ax.set_xlabel('Next state')
                ax.set_ylabel('Current state')
            return self._save(fig, filename)
        except Exception as e:
            logger.error(f"Error generating transition heatmaps: {e}", exc_info=True)
            return ""

    def create_cal_plot(self, series: pd.DataFrame, stage_length: float, filename: str = 'cal.png') -> str:
        """CAL over a session with generation-stage boundaries"""
        try:
            self._ensure_plotting_libs()
            fig, ax = self._plt.subplots(figsize=(10, 4))
            for stage, chunk in series.groupby('stage'):
                ax.plot(chunk['time_s'], chunk['cal'], color='tab:blue')
            end = float(series['time_s'].max()) if len(series) else 0.0
            boundary = stage_length
            while boundary < end:
                ax.axvline(boundary, color='grey', linestyle='--', linewidth=0.8)
                boundary += stage_length
            ax.set_xlabel('Time (s)')
            ax.set_ylabel('Cumulative attention level')
            ax.set_title('CAL per generation stage', fontweight='bold')
            return self._save(fig, filename)
        except Exception as e:
            logger.error(f"Error generating CAL plot: {e}", exc_info=True)
            return ""

    def create_qcurve_plot(self, qcurve: pd.DataFrame, filename: str = 'qcurve.png') -> str:
        """Q-value learning curves per (attention state, aid)"""
        try:
            self._ensure_plotting_libs()
            frame = qcurve.assign(pair=qcurve['x'].astype(str) + ', ' + qcurve['a'])
            fig, ax = self._plt.subplots(figsize=(10, 5))
            self._sns.lineplot(data=frame, x='stage', y='q_value', hue='pair', ax=ax)
            ax.set_xlabel('Generation stage')
            ax.set_ylabel('Q value')
            ax.set_title('Q-table learning curves', fontweight='bold')
            ax.legend(title='(x, a)')
            return self._save(fig, filename)
        except Exception as e:
            logger.error(f"Error generating Q-curve plot: {e}", exc_info=True)
            return ""

    def create_aal_histograms(self, samples: pd.DataFrame, filename: str = 'aal_histograms.png') -> str:
        """AAL distribution per attention state, split by aid"""
        try:
            self._ensure_plotting_libs()
            states = sorted(samples['x'].unique())
            fig, axes = self._plt.subplots(1, max(1, len(states)), figsize=(6 * max(1, len(states)), 4),
                                           squeeze=False)
            for ax, x in zip(axes[0], states):
                self._sns.histplot(data=samples[samples['x'] == x], x='aal', hue='a',
                                   stat='density', common_norm=False, element='step', ax=ax)
                ax.set_title(f"AAL from attention state {x}", fontweight='bold')
            return self._save(fig, filename)
        except Exception as e:
            logger.error(f"Error generating AAL histograms: {e}", exc_info=True)
            return ""

    def create_tuning_plot(self, report: RunReport, filename: str = 'tuning.png') -> str:
        """Per-stage accuracy with repeat spread and the incumbent"""
        try:
            self._ensure_plotting_libs()
            stages = [s.stage for s in report.history]
            fig, ax = self._plt.subplots(figsize=(10, 4))
            means = [report.repeat_means.get(s, float('nan')) for s in stages]
            sds = [report.repeat_variances.get(s, float('nan')) ** 0.5 for s in stages]
            ax.errorbar(stages, means, yerr=sds, fmt='o', color='tab:blue', capsize=2, label='stage mean ± sd')
            ax.plot(stages, report.incumbents, color='tab:red', linewidth=2, label='incumbent')
            ax.axvline(report.L0 + 0.5, color='grey', linestyle=':', label='end of initial design')
            ax.set_xlabel('Tuning stage')
            ax.set_ylabel('Accuracy')
            ax.set_title('Hyperparameter tuning', fontweight='bold')
            ax.legend()
            return self._save(fig, filename)
        except Exception as e:
            logger.error(f"Error generating tuning plot: {e}", exc_info=True)
            return ""

    def create_surface_plot(self, surface: pd.DataFrame, filename: str = 'surface.png') -> str:
        """Posterior mean over the first two hyperparameters"""
        try:
            self._ensure_plotting_libs()
            x_name, y_name = surface.columns[0], surface.columns[1]
            grid = surface.pivot(index=y_name, columns=x_name, values='mean')
            fig, ax = self._plt.subplots(figsize=(8, 6))
            mesh = ax.pcolormesh(grid.columns.to_numpy(), grid.index.to_numpy(), grid.to_numpy(),
                                 shading='auto', cmap='magma')
            fig.colorbar(mesh, ax=ax, label='posterior mean accuracy')
            ax.set_xlabel(x_name)
            ax.set_ylabel(y_name)
            ax.set_title('Accuracy surface', fontweight='bold')
            return self._save(fig, filename)
        except Exception as e:
            logger.error(f"Error generating surface plot: {e}", exc_info=True)
            return ""

    def generate_all(self, dynamics: Optional[GazeDynamics] = None, **frames) -> Dict[str, str]:
        """
        Draw every figure whose inputs are given.

        Keyword frames: cal_series (with stage_length), qcurve, aal_samples,
        report, surface.
        """
        paths = {}
        if dynamics is not None:
            paths['transitions'] = self.create_transition_heatmaps(dynamics)
        if frames.get('cal_series') is not None:
            paths['cal'] = self.create_cal_plot(frames['cal_series'], frames.get('stage_length', 1.0))
        if frames.get('qcurve') is not None and len(frames['qcurve']):
            paths['qcurve'] = self.create_qcurve_plot(frames['qcurve'])
        if frames.get('aal_samples') is not None and len(frames['aal_samples']):
            paths['aal_histograms'] = self.create_aal_histograms(frames['aal_samples'])
        if frames.get('report') is not None:
            paths['tuning'] = self.create_tuning_plot(frames['report'])
        if frames.get('surface') is not None:
            paths['surface'] = self.create_surface_plot(frames['surface'])
        return {name: path for name, path in paths.items() if path}
