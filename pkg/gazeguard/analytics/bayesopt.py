"""
Bayesian Optimization - Gaussian-process regression with a squared-exponential
kernel and expected-improvement search over a hyperparameter box.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import linalg, optimize, stats

from config import SimulationDefaults
from models.tuning import HyperBox, Kernel, Observation, TuningStage
from utils.validation import EmptyInputError, ValidationError, Validator

logger = logging.getLogger(__name__)

_sign_logged = False


class ConditioningError(RuntimeError):
    """Gram matrix not positive definite even at the largest jitter"""


def _note_kernel_sign():
    global _sign_logged
    if not _sign_logged:
        logger.info("Kernel covariance uses lambda0 * exp(-sum lambda_i d_i^2) (negative exponent)")
        _sign_logged = True


def _as_points(thetas, dims: int) -> np.ndarray:
    points = np.atleast_2d(np.asarray(thetas, dtype=float))
    if points.shape[1] != dims:
        raise ValidationError(f"points must have {dims} coordinates, got {points.shape[1]}")
    return points


def gram(kernel: Kernel, A, B=None) -> np.ndarray:
    """Covariance matrix between the rows of A and B (B = A by default)"""
    A = _as_points(A, kernel.dims)
    B = A if B is None else _as_points(B, kernel.dims)
    sq = (A[:, None, :] - B[None, :, :]) ** 2
    return kernel.amplitude * np.exp(-(sq @ kernel.inverse_lengthscales))


def kernel_eval(kernel: Kernel, theta, theta_other) -> float:
    return float(gram(kernel, theta, theta_other)[0, 0])


def cholesky_with_jitter(K: np.ndarray, jitter: float = SimulationDefaults.INITIAL_JITTER,
                         max_jitter: float = SimulationDefaults.MAX_JITTER):
    """
    Lower Cholesky factor of K + jitter * I, escalating jitter x10 on failure.

    Returns:
        (L, jitter actually used)

    Raises:
        ConditioningError: past `max_jitter`
    """
    n = K.shape[0]
    current = jitter
    while current <= max_jitter * (1 + 1e-9):
        try:
            L = linalg.cholesky(K + current * np.eye(n), lower=True)
            if current > jitter:
                logger.warning(f"Gram matrix needed jitter {current:.0e} to factorize")
            return L, current
        except linalg.LinAlgError:
            current *= 10.0
    raise ConditioningError(
        f"{n}x{n} Gram matrix is not positive definite even with jitter {max_jitter:.0e}; "
        f"the observations are too close together for the current lengthscales")


def _observation_arrays(observations: Sequence[Observation], dims: int):
    if not observations:
        raise EmptyInputError("the Gaussian process needs at least one observation")
    X = _as_points([o.theta for o in observations], dims)
    y = np.array([o.value for o in observations], dtype=float)
    return X, y


class Posterior:
    """Conditioned GP: factorizes the Gram matrix once, predicts many points"""

    def __init__(self, kernel: Kernel, observations: Sequence[Observation]):
        _note_kernel_sign()
        self.kernel = kernel
        self.X, self.y = _observation_arrays(observations, kernel.dims)
        self.L, self.jitter = cholesky_with_jitter(gram(kernel, self.X), kernel.jitter)
        self.weights = linalg.cho_solve((self.L, True), self.y - kernel.mean)

    @property
    def incumbent(self) -> float:
        return float(self.y.max())

    def predict(self, thetas):
        """
        Returns:
            (mean, variance) arrays, variance clamped at 0
        """
        points = _as_points(thetas, self.kernel.dims)
        k_star = gram(self.kernel, points, self.X)
        mean = self.kernel.mean + k_star @ self.weights
        v = linalg.solve_triangular(self.L, k_star.T, lower=True)
        variance = self.kernel.amplitude - np.sum(v ** 2, axis=0)
        return mean, np.maximum(variance, 0.0)


def gp_posterior(kernel: Kernel, observations: Sequence[Observation], theta):
    """Posterior (mean, sd) at one point"""
    mean, variance = Posterior(kernel, observations).predict(theta)
    return float(mean[0]), float(np.sqrt(variance[0]))


def log_marginal_likelihood(kernel: Kernel, observations: Sequence[Observation]) -> float:
    """Gaussian log density of the observed values under the prior"""
    X, y = _observation_arrays(observations, kernel.dims)
    L, _ = cholesky_with_jitter(gram(kernel, X), kernel.jitter)
    residual = y - kernel.mean
    alpha = linalg.cho_solve((L, True), residual)
    return float(-0.5 * residual @ alpha - np.log(np.diag(L)).sum() - 0.5 * y.size * math.log(2 * math.pi))


@dataclass
class MleResult:
    kernel: Kernel
    log_likelihood: float
    improved: bool  # False when no restart beat the starting kernel


def _default_kernel(X: np.ndarray, y: np.ndarray, width: np.ndarray, jitter: float) -> Kernel:
    variance = float(np.var(y)) if y.size > 1 else 0.0
    return Kernel(float(np.mean(y)), max(variance, 1e-6), 1.0 / width ** 2, jitter)


def _data_width(X: np.ndarray, box: Optional[HyperBox]) -> np.ndarray:
    if box is not None:
        return box.width
    span = np.ptp(X, axis=0)
    return np.where(span > 0, span, 1.0)


def fit_kernel_mle(observations: Sequence[Observation], rng: np.random.Generator,
                   restarts: int = SimulationDefaults.MLE_RESTARTS,
                   box: Optional[HyperBox] = None,
                   initial: Optional[Kernel] = None,
                   jitter: float = SimulationDefaults.INITIAL_JITTER) -> MleResult:
    """
    Maximum-likelihood kernel by multi-start L-BFGS-B.

    Search runs over z = (mu0, log lambda0, log lambda_i) with
    finite-difference gradients; the starting kernel and every local
    optimum compete, and the best log-likelihood wins.
    """
    dims = box.dims if box is not None else len(observations[0].theta) if observations else 0
    X, y = _observation_arrays(observations, dims)
    restarts = Validator.validate_integer(restarts, 'restarts', min_val=0)
    width = _data_width(X, box)
    initial = initial or _default_kernel(X, y, width, jitter)

    spread = max(float(np.ptp(y)), 1e-3)
    bounds = ([(float(y.min()) - spread, float(y.max()) + spread), (math.log(1e-8), math.log(10.0))]
              + [(math.log(1e-3 / w ** 2), math.log(1e3 / w ** 2)) for w in width])
    lower = np.array([b[0] for b in bounds])
    upper = np.array([b[1] for b in bounds])

    def negative_lml(z):
        try:
            return -log_marginal_likelihood(Kernel.from_vector(z, jitter), observations)
        except (ConditioningError, ValidationError, OverflowError):
            return 1e10

    z0 = np.clip(initial.to_vector(), lower, upper)
    best_z = initial.to_vector()
    best_value = negative_lml(best_z)
    initial_value = best_value

    starts = [z0] + [lower + rng.random(lower.size) * (upper - lower) for _ in range(restarts)]
    for start in starts:
        result = optimize.minimize(negative_lml, start, method='L-BFGS-B', bounds=bounds)
        for z, value in ((start, negative_lml(start)), (result.x, float(result.fun))):
            if value < best_value:
                best_z, best_value = np.array(z, dtype=float), value

    improved = best_value < initial_value
    if not improved:
        logger.warning("Kernel MLE found nothing better than its starting point")
    kernel = Kernel.from_vector(best_z, jitter)
    logger.debug(f"MLE kernel {kernel!r} log-likelihood={-best_value:.4f}")
    return MleResult(kernel, -best_value, improved)


def expected_improvement(mean, sd, incumbent: float):
    """E[(f - incumbent)^+] for f ~ N(mean, sd^2); scalar in, scalar out"""
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    if np.any(sd < 0):
        raise ValidationError("sd must be >= 0")
    diff = mean - incumbent
    safe_sd = np.where(sd > 0, sd, 1.0)
    z = diff / safe_sd
    ei = np.where(sd > 0, diff * stats.norm.cdf(z) + sd * stats.norm.pdf(z), np.maximum(diff, 0.0))
    ei = np.maximum(ei, 0.0)
    return float(ei) if ei.ndim == 0 else ei


def _ei_at(posterior: Posterior, thetas, incumbent: float) -> np.ndarray:
    mean, variance = posterior.predict(thetas)
    return np.atleast_1d(expected_improvement(mean, np.sqrt(variance), incumbent))


def propose_next(kernel: Kernel, observations: Sequence[Observation], box: HyperBox,
                 rng: np.random.Generator,
                 starts: int = SimulationDefaults.ACQUISITION_STARTS,
                 steps: int = SimulationDefaults.ACQUISITION_STEPS,
                 posterior: Optional[Posterior] = None) -> np.ndarray:
    """
    Point of maximal expected improvement.

    Bounded L-BFGS-B ascent in unit-cube coordinates from Latin-hypercube
    starts; the best start or optimum is returned, clipped into the box.
    A uniform random point is returned when EI vanishes everywhere searched.
    """
    posterior = posterior or Posterior(kernel, observations)
    incumbent = posterior.incumbent
    start_points = box.latin_hypercube(rng, max(1, int(starts)))
    start_ei = _ei_at(posterior, start_points, incumbent)
    scale = float(start_ei.max())
    if scale <= 0:
        scale = 1.0

    def objective(u):
        return -float(_ei_at(posterior, box.from_unit(u), incumbent)[0]) / scale

    best_theta = start_points[int(np.argmax(start_ei))]
    best_ei = float(start_ei.max())
    unit_bounds = [(0.0, 1.0)] * box.dims
    for point in start_points:
        result = optimize.minimize(objective, box.to_unit(point), method='L-BFGS-B',
                                   bounds=unit_bounds, options={'maxiter': int(steps)})
        candidate = box.clip(box.from_unit(np.clip(result.x, 0.0, 1.0)))
        value = float(_ei_at(posterior, candidate, incumbent)[0])
        if value > best_ei:
            best_theta, best_ei = candidate, value

    if best_ei <= 0:
        logger.warning("Expected improvement is zero everywhere searched; proposing a random point")
        return box.sample_uniform(rng)
    return box.clip(best_theta)


@dataclass
class TuningResult:
    best_theta: np.ndarray
    best_value: float
    history: List[TuningStage]
    kernel: Optional[Kernel]
    observations: List[Observation] = field(default_factory=list)

    @property
    def incumbents(self) -> List[float]:
        return [stage.incumbent for stage in self.history]


def tune(evaluator: Callable[[np.ndarray], float], box: HyperBox, L: int, L0: int,
         rng: np.random.Generator,
         restarts: int = SimulationDefaults.MLE_RESTARTS,
         starts: int = SimulationDefaults.ACQUISITION_STARTS,
         steps: int = SimulationDefaults.ACQUISITION_STEPS,
         refit_kernel: bool = False,
         jitter: float = SimulationDefaults.INITIAL_JITTER) -> TuningResult:
    """
    Maximize a noisy black box over `box` by expected improvement.

    The first L0 stages evaluate uniform random points; the kernel is then
    fitted by maximum likelihood (once, or after every stage with
    `refit_kernel`) and the remaining stages evaluate EI maximizers.
    Evaluator exceptions mark the stage failed and the loop continues.

    Returns:
        TuningResult whose best point is the argmax of all observed values
    """
    L = Validator.validate_integer(L, 'L', min_val=2)
    L0 = Validator.validate_integer(L0, 'L0', min_val=1)
    if L0 >= L:
        raise ValidationError(f"L0 must be < L, got L0={L0}, L={L}")

    observations: List[Observation] = []
    history: List[TuningStage] = []
    kernel: Optional[Kernel] = None
    incumbent = float('nan')

    for stage in range(1, L + 1):
        source = 'initial'
        if stage <= L0 or not observations:
            theta = box.sample_uniform(rng)
        else:
            if kernel is None or refit_kernel:
                if len(observations) >= 2:
                    kernel = fit_kernel_mle(observations, rng, restarts, box, kernel, jitter).kernel
                else:
                    kernel = _default_kernel(*_observation_arrays(observations, box.dims), box.width, jitter)
            try:
                theta = propose_next(kernel, observations, box, rng, starts, steps)
                source = 'acquisition'
            except ConditioningError as e:
                logger.warning(f"Stage {stage}: {e}; proposing a random point")
                theta = box.sample_uniform(rng)
                source = 'random'

        try:
            value = float(evaluator(theta))
            if not np.isfinite(value):
                raise ValueError(f"evaluator returned {value}")
        except Exception as e:
            logger.warning(f"Stage {stage}: evaluation at {np.round(theta, 4).tolist()} failed: {e}")
            history.append(TuningStage(stage, tuple(float(t) for t in theta), float('nan'),
                                       incumbent, source, failed=True))
            continue

        observations.append(Observation.of(theta, value))
        incumbent = value if np.isnan(incumbent) else max(incumbent, value)
        history.append(TuningStage(stage, tuple(float(t) for t in theta), value, incumbent, source))
        logger.info(f"Tuning stage {stage}/{L}: value={value:.4f} incumbent={incumbent:.4f} ({source})")

    if not observations:
        raise EmptyInputError("every tuning stage failed")
    best = max(observations, key=lambda o: o.value)
    return TuningResult(np.array(best.theta), best.value, history, kernel, observations)


def posterior_surface(kernel: Kernel, observations: Sequence[Observation], box: HyperBox,
                      grid: int = SimulationDefaults.SURFACE_GRID,
                      anchor=None) -> pd.DataFrame:
    """
    Posterior mean, sd and EI on a grid over the first two coordinates.

    Remaining coordinates are held at `anchor` (the best observation by
    default).
    """
    if box.dims < 2:
        raise ValidationError("a surface needs at least two dimensions")
    grid = Validator.validate_integer(grid, 'grid', min_val=2)
    posterior = Posterior(kernel, observations)
    if anchor is None:
        anchor = posterior.X[int(np.argmax(posterior.y))]
    a = np.linspace(box.lower[0], box.upper[0], grid)
    b = np.linspace(box.lower[1], box.upper[1], grid)
    A, B = np.meshgrid(a, b, indexing='ij')
    points = np.tile(np.asarray(anchor, dtype=float), (A.size, 1))
    points[:, 0] = A.ravel()
    points[:, 1] = B.ravel()
    mean, variance = posterior.predict(points)
    sd = np.sqrt(variance)
    return pd.DataFrame({
        box.names[0]: points[:, 0],
        box.names[1]: points[:, 1],
        'mean': mean,
        'sd': sd,
        'ei': expected_improvement(mean, sd, posterior.incumbent),
    })
