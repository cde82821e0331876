"""
YAML storage for experiment configurations
"""
import logging
import os
from typing import Any, Dict, Mapping

import yaml

from models.experiment import CalibrationSettings, ExperimentConfig, SearchSettings
from models.gaze_dynamics import GazeDynamics
from models.judgment import JudgmentModel
from models.learning import LearningParams
from models.scores import AnnealingParams, AttentionConfig, ScoreTable
from models.tuning import HyperBox
from utils.validation import ConfigurationError, ValidationError

logger = logging.getLogger(__name__)

SECTIONS = ('gaze', 'scores', 'attention', 'learning', 'judgment', 'experiment')


def _section(data: Mapping, name: str) -> Mapping:
    value = data.get(name) or {}
    if not isinstance(value, Mapping):
        raise ConfigurationError(f"section '{name}' must be a mapping")
    return value


def experiment_from_dict(data: Mapping) -> ExperimentConfig:
    """Build an ExperimentConfig from the six config sections"""
    if not isinstance(data, Mapping):
        raise ConfigurationError("experiment file must hold a mapping")
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise ConfigurationError(f"unknown sections: {sorted(unknown)}")

    dynamics = GazeDynamics.from_dict(_section(data, 'gaze'))
    scores = ScoreTable.from_dict(_section(data, 'scores'), dynamics.space)
    attention = AttentionConfig.from_dict(_section(data, 'attention'))
    learning = LearningParams.from_dict(_section(data, 'learning'))
    judgment_data = _section(data, 'judgment')
    judgment = JudgmentModel.from_dict(judgment_data)
    calibrated = 'judgment.b0' in judgment_data or 'b0' in judgment_data

    exp = dict(_section(data, 'experiment'))
    try:
        box = HyperBox.from_list(exp.pop('box')) if 'box' in exp else HyperBox.case_study()
        calibration = CalibrationSettings(**(exp.pop('calibration', None) or {}))
        search = SearchSettings(**(exp.pop('bo', None) or {}))
        annealing = AnnealingParams.from_dict(exp.pop('annealing', None) or {})
        theta = {str(k): float(v) for k, v in (exp.pop('theta', None) or {}).items()}
        return ExperimentConfig(
            dynamics=dynamics, scores=scores, attention=attention, learning=learning,
            judgment=judgment, box=box, theta=theta, calibration=calibration,
            search=search, annealing=annealing, calibrated=calibrated, **exp)
    except TypeError as e:
        raise ConfigurationError(f"invalid experiment section: {e}")
    except ValidationError as e:
        raise ConfigurationError(f"invalid experiment section: {e}")


def experiment_to_dict(config: ExperimentConfig) -> Dict[str, Any]:
    """Inverse of experiment_from_dict; transition rows are stored normalized"""
    judgment = config.judgment.to_dict()
    if not config.calibrated:
        judgment.pop('judgment.b0')
    return {
        'gaze': config.dynamics.to_dict(),
        'scores': config.scores.to_dict(),
        'attention': config.attention.to_dict(),
        'learning': config.learning.to_dict(),
        'judgment': judgment,
        'experiment': {
            'n_bo': config.n_bo,
            'n_rp': config.n_rp,
            'L': config.L,
            'L0': config.L0,
            'seed': config.seed,
            'emails_per_user': config.emails_per_user,
            'workers': config.workers,
            'box': config.box.to_list(),
            'theta': dict(config.theta),
            'calibration': vars(config.calibration).copy(),
            'bo': vars(config.search).copy(),
            'annealing': config.annealing.to_dict(),
        },
    }


def load_experiment(path: str) -> ExperimentConfig:
    """
    Read an experiment YAML file.

    Raises:
        FileNotFoundError: if the file is missing
        ConfigurationError: if it is malformed
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"config file not found: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigurationError(f"{path} is not valid YAML: {e}")
    config = experiment_from_dict(data or {})
    logger.info(f"Loaded experiment from {path} ({config.dynamics!r})")
    return config


def store_experiment(config: ExperimentConfig, path: str) -> str:
    _write_yaml(experiment_to_dict(config), path)
    return path


def store_scores(table: ScoreTable, path: str) -> str:
    """Write a score table as a `scores` section"""
    _write_yaml({'scores': table.to_dict()}, path)
    return path


def _write_yaml(data: Mapping, path: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        yaml.safe_dump(data, f, sort_keys=False)
