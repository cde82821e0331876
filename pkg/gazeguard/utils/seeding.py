"""
Counter-based random streams.

Every stream is keyed by the master seed plus a tuple of integers, so a
session's randomness does not depend on the order in which sessions run.
"""
from typing import Union

import numpy as np

# First spawn-key component, one per purpose
SESSION_STREAM = 0
CALIBRATION_STREAM = 1
TUNING_STREAM = 2
FITTING_STREAM = 3
SIMULATE_STREAM = 4

SeedLike = Union[int, np.random.SeedSequence]


def derive_seed(master: SeedLike, *keys: int) -> np.random.SeedSequence:
    """Return the SeedSequence for `keys` under `master`"""
    if isinstance(master, np.random.SeedSequence):
        spawn_key = tuple(master.spawn_key) + tuple(int(k) for k in keys)
        return np.random.SeedSequence(master.entropy, spawn_key=spawn_key)
    return np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in keys))


def make_rng(master: SeedLike, *keys: int) -> np.random.Generator:
    """Generator for the stream `keys` under `master`"""
    return np.random.default_rng(derive_seed(master, *keys))
