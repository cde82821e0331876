"""
Shared fixtures
"""
import os
import sys

import numpy as np
import pytest

# Add source directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import Config
from models.gaze_dynamics import GazeDynamics
from models.scores import ScoreTable
from models.visual_state import StateSpace, build_aid_library
from utils.storage import load_experiment


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def space():
    return StateSpace()


@pytest.fixture
def table(space):
    return ScoreTable.table_one(space)


@pytest.fixture(scope='session')
def experiment():
    """The shipped default experiment (judgment intercept not yet calibrated)"""
    return load_experiment(Config.DEFAULT_CONFIG_PATH)


@pytest.fixture
def small_space():
    """One AoI plus ua/da"""
    return StateSpace(n_aois=1)


@pytest.fixture
def small_dynamics(small_space):
    """Three-state cycle s1 -> ua -> da -> s1 under a single aid"""
    P = np.array([[0.0, 1.0, 0.0],
                  [0.0, 0.0, 1.0],
                  [1.0, 0.0, 0.0]])
    aids = build_aid_library(['aN'])
    return GazeDynamics(small_space, aids, {'aN': P}, {'aN': np.array([1.0, 0.5, 2.0])})
