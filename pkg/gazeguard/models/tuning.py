"""
Bayesian-optimization models: hyperparameter box, kernel and observations.
"""
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
from scipy.stats import qmc

from config import SimulationDefaults
from utils.validation import ConfigurationError, ValidationError, Validator


class HyperBox:
    """Named box lower[i] <= theta[i] <= upper[i]"""

    def __init__(self, names: Sequence[str], lower: Sequence[float], upper: Sequence[float]):
        names = Validator.validate_names(list(names), 'box names')
        lo = np.array(lower, dtype=float)
        hi = np.array(upper, dtype=float)
        if lo.shape != (len(names),) or hi.shape != (len(names),):
            raise ValidationError("box bounds must match the number of names")
        if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise ValidationError("box bounds must be finite")
        if np.any(lo >= hi):
            raise ValidationError("box lower bounds must be < upper bounds")
        lo.setflags(write=False)
        hi.setflags(write=False)
        self._names = tuple(names)
        self._lower = lo
        self._upper = hi

    @classmethod
    def case_study(cls) -> 'HyperBox':
        """Attention threshold in [1, 33] and period in [60, 600] samples"""
        return cls(['attention_threshold', 'period_samples'], [1.0, 60.0], [33.0, 600.0])

    @property
    def names(self) -> tuple: return self._names

    @property
    def lower(self) -> np.ndarray: return self._lower

    @property
    def upper(self) -> np.ndarray: return self._upper

    @property
    def dims(self) -> int: return len(self._names)

    @property
    def width(self) -> np.ndarray: return self._upper - self._lower

    def contains(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(np.all(theta >= self._lower) and np.all(theta <= self._upper))

    def clip(self, theta) -> np.ndarray:
        return np.clip(np.asarray(theta, dtype=float), self._lower, self._upper)

    def sample_uniform(self, rng: np.random.Generator, n: Optional[int] = None) -> np.ndarray:
        size = self.dims if n is None else (n, self.dims)
        return self._lower + rng.random(size) * self.width

    def latin_hypercube(self, rng: np.random.Generator, n: int) -> np.ndarray:
        sampler = qmc.LatinHypercube(d=self.dims, rng=rng)
        return qmc.scale(sampler.random(n), self._lower, self._upper)

    def to_unit(self, theta) -> np.ndarray:
        return (np.asarray(theta, dtype=float) - self._lower) / self.width

    def from_unit(self, u) -> np.ndarray:
        return self._lower + np.asarray(u, dtype=float) * self.width

    def to_list(self) -> List[Dict]:
        return [{'name': n, 'lower': float(lo), 'upper': float(hi)}
                for n, lo, hi in zip(self._names, self._lower, self._upper)]

    @classmethod
    def from_list(cls, entries: Sequence[Mapping]) -> 'HyperBox':
        try:
            return cls([e['name'] for e in entries],
                       [e['lower'] for e in entries],
                       [e['upper'] for e in entries])
        except (KeyError, TypeError) as e:
            raise ConfigurationError(f"box entries need name/lower/upper: {e}")
        except ValidationError as e:
            raise ConfigurationError(f"invalid box: {e}")

    def __repr__(self) -> str:
        dims = ', '.join(f"{n} in [{lo:g}, {hi:g}]" for n, lo, hi in zip(self._names, self._lower, self._upper))
        return f"<HyperBox {dims}>"


class Kernel:
    """
    Squared-exponential prior: constant mean mu0 and covariance
    lambda0 * exp(-sum_i lambda_i (theta_i - theta'_i)^2).
    """

    def __init__(self, mean: float, amplitude: float, inverse_lengthscales: Sequence[float],
                 jitter: float = SimulationDefaults.INITIAL_JITTER):
        self._mean = Validator.validate_number(mean, 'kernel mean')
        self._amplitude = Validator.validate_number(amplitude, 'kernel amplitude', min_val=0, exclusive_min=True)
        lam = np.array(inverse_lengthscales, dtype=float)
        if lam.ndim != 1 or lam.size < 1 or not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise ValidationError("inverse lengthscales must be a non-empty vector of positive values")
        lam.setflags(write=False)
        self._lambdas = lam
        self._jitter = Validator.validate_number(jitter, 'jitter', min_val=0)

    @property
    def mean(self) -> float: return self._mean

    @property
    def amplitude(self) -> float: return self._amplitude

    @property
    def inverse_lengthscales(self) -> np.ndarray: return self._lambdas

    @property
    def jitter(self) -> float: return self._jitter

    @property
    def dims(self) -> int: return int(self._lambdas.size)

    def to_vector(self) -> np.ndarray:
        """(mu0, log lambda0, log lambda_1..d), the MLE search coordinates"""
        return np.concatenate([[self._mean, math.log(self._amplitude)], np.log(self._lambdas)])

    @classmethod
    def from_vector(cls, z, jitter: float = SimulationDefaults.INITIAL_JITTER) -> 'Kernel':
        z = np.asarray(z, dtype=float)
        return cls(z[0], math.exp(z[1]), np.exp(z[2:]), jitter)

    def to_dict(self) -> Dict:
        return {
            'mean': self._mean,
            'amplitude': self._amplitude,
            'inverse_lengthscales': self._lambdas.tolist(),
            'jitter': self._jitter,
        }

    def __repr__(self) -> str:
        return (f"<Kernel mu0={self._mean:.4g} lambda0={self._amplitude:.4g} "
                f"lambdas={np.array2string(self._lambdas, precision=4)}>")


@dataclass(frozen=True)
class Observation:
    """An evaluated hyperparameter point"""
    theta: tuple
    value: float

    @classmethod
    def of(cls, theta, value: float) -> 'Observation':
        return cls(tuple(float(v) for v in np.asarray(theta, dtype=float)), float(value))


@dataclass(frozen=True)
class TuningStage:
    """One row of a tuning history"""
    stage: int
    theta: tuple
    value: float
    incumbent: float
    source: str  # 'initial' | 'acquisition'
    failed: bool = False
