import math

import numpy as np
import pytest
from scipy import stats
from scipy.spatial.distance import pdist

from analytics.bayesopt import (ConditioningError, Posterior, cholesky_with_jitter,
                                expected_improvement, fit_kernel_mle, gp_posterior, gram,
                                kernel_eval, log_marginal_likelihood, posterior_surface,
                                propose_next, tune)
from config import SimulationDefaults
from models.tuning import HyperBox, Kernel, Observation
from utils.validation import ConfigurationError, EmptyInputError, ValidationError

BOX = HyperBox(['a', 'b'], [0.0, 0.0], [1.0, 1.0])


@pytest.fixture
def kernel():
    return Kernel(mean=0.5, amplitude=0.04, inverse_lengthscales=[4.0, 4.0])


@pytest.fixture
def observations():
    points = [(0.1, 0.2), (0.8, 0.3), (0.4, 0.9), (0.6, 0.6)]
    return [Observation.of(p, 0.5 + 0.2 * math.sin(3 * p[0]) - 0.1 * p[1]) for p in points]


def peak(theta):
    theta = np.asarray(theta)
    return float(0.9 - (theta[0] - 0.3) ** 2 - (theta[1] - 0.7) ** 2)


class TestKernel:

    def test_diagonal_is_amplitude(self, kernel):
        """k(theta, theta) = lambda0"""
        assert kernel_eval(kernel, [0.3, 0.4], [0.3, 0.4]) == pytest.approx(0.04)

    def test_decays_with_distance(self, kernel):
        """Covariance falls as exp(-sum lambda_i d_i^2)"""
        value = kernel_eval(kernel, [0.0, 0.0], [0.5, 0.0])
        assert value == pytest.approx(0.04 * math.exp(-4.0 * 0.25))

    def test_gram_is_symmetric_psd(self, kernel, rng):
        """Gram matrices are symmetric positive semi-definite"""
        points = rng.random((20, 2))
        K = gram(kernel, points)
        np.testing.assert_allclose(K, K.T)
        assert np.linalg.eigvalsh(K).min() > -1e-12

    def test_vector_round_trip(self, kernel):
        """(mu0, log lambda0, log lambda) coordinates map back"""
        restored = Kernel.from_vector(kernel.to_vector())
        assert restored.mean == pytest.approx(kernel.mean)
        assert restored.amplitude == pytest.approx(kernel.amplitude)
        np.testing.assert_allclose(restored.inverse_lengthscales, kernel.inverse_lengthscales)

    def test_rejects_non_positive_parameters(self):
        """Amplitude and lengthscales must be positive"""
        with pytest.raises(ValidationError):
            Kernel(0.0, 0.0, [1.0])
        with pytest.raises(ValidationError, match="inverse lengthscales"):
            Kernel(0.0, 1.0, [1.0, -1.0])

    def test_dimension_mismatch(self, kernel):
        """Points must match the kernel's dimension"""
        with pytest.raises(ValidationError, match="coordinates"):
            gram(kernel, [[0.1, 0.2, 0.3]])


class TestCholesky:

    def test_escalates_jitter(self):
        """A slightly indefinite matrix factorizes once jitter is large enough"""
        K = np.ones((2, 2)) - 5e-9 * np.eye(2)
        L, used = cholesky_with_jitter(K, 1e-10, 1e-6)
        assert used == pytest.approx(1e-8)
        np.testing.assert_allclose(L @ L.T, K + used * np.eye(2), atol=1e-12)

    def test_gives_up_past_max_jitter(self):
        """Negative definite input cannot be rescued"""
        with pytest.raises(ConditioningError):
            cholesky_with_jitter(-np.eye(2))


class TestPosterior:

    def test_matches_direct_inversion(self):
        """Cholesky solves agree with explicit inversion over 100 random designs of up to 8 points"""
        rng = np.random.default_rng(17)
        for _ in range(100):
            n = int(rng.integers(1, 9))
            X = rng.random((n, 2))
            while n > 1 and pdist(X).min() < 0.05:
                X = rng.random((n, 2))
            kernel = Kernel(mean=rng.normal(), amplitude=float(np.exp(rng.uniform(np.log(0.01), 0.0))),
                            inverse_lengthscales=np.exp(rng.uniform(0.0, np.log(10.0), 2)))
            y = kernel.mean + math.sqrt(kernel.amplitude) * rng.normal(size=n)
            query = rng.random((50, 2))

            posterior = Posterior(kernel, [Observation.of(x, v) for x, v in zip(X, y)])
            inverse = np.linalg.inv(gram(kernel, X) + posterior.jitter * np.eye(n))
            k_star = gram(kernel, query, X)
            expected_mean = kernel.mean + k_star @ inverse @ (y - kernel.mean)
            expected_var = kernel.amplitude - np.einsum('ij,jk,ik->i', k_star, inverse, k_star)

            mean, variance = posterior.predict(query)
            np.testing.assert_allclose(mean, expected_mean, atol=1e-8)
            np.testing.assert_allclose(variance, np.maximum(expected_var, 0.0), atol=1e-8)

    def test_interpolates_observations(self, kernel, observations):
        """Near-zero noise: the mean passes through the data"""
        for obs in observations:
            mean, sd = gp_posterior(kernel, observations, obs.theta)
            assert mean == pytest.approx(obs.value, abs=1e-6)
            assert sd < 1e-4

    def test_reverts_to_prior_far_away(self, kernel, observations):
        """Far from the data the prior mean and amplitude return"""
        mean, sd = gp_posterior(kernel, observations, [50.0, 50.0])
        assert mean == pytest.approx(kernel.mean)
        assert sd == pytest.approx(math.sqrt(kernel.amplitude))

    def test_variance_never_negative(self, kernel, observations, rng):
        """Clamped at zero"""
        _, variance = Posterior(kernel, observations).predict(rng.random((200, 2)))
        assert np.all(variance >= 0)

    def test_needs_observations(self, kernel):
        """An empty data set is rejected"""
        with pytest.raises(EmptyInputError):
            Posterior(kernel, [])


class TestLikelihood:

    def test_single_observation_at_mean(self):
        """One point at mu0 has log density -log(2 pi lambda0) / 2"""
        kernel = Kernel(0.5, 0.04, [1.0])
        lml = log_marginal_likelihood(kernel, [Observation.of([0.2], 0.5)])
        assert lml == pytest.approx(-0.5 * math.log(2 * math.pi * 0.04), rel=1e-8)

    def test_matches_scipy_density(self, kernel, observations):
        """Agrees with a multivariate normal log pdf"""
        X = np.array([o.theta for o in observations])
        y = np.array([o.value for o in observations])
        cov = gram(kernel, X) + kernel.jitter * np.eye(len(X))
        expected = stats.multivariate_normal(np.full(len(y), kernel.mean), cov).logpdf(y)
        assert log_marginal_likelihood(kernel, observations) == pytest.approx(expected, rel=1e-8)

    def test_mle_never_worse_than_start(self, kernel, observations):
        """The fitted kernel's likelihood is at least the starting kernel's"""
        start = log_marginal_likelihood(kernel, observations)
        result = fit_kernel_mle(observations, np.random.default_rng(0), restarts=3, box=BOX, initial=kernel)
        assert result.log_likelihood >= start - 1e-9
        assert log_marginal_likelihood(result.kernel, observations) == pytest.approx(result.log_likelihood)


class TestExpectedImprovement:

    def test_deterministic_prediction(self):
        """sd = 0 gives max(mean - incumbent, 0)"""
        assert expected_improvement(1.0, 0.0, 0.5) == pytest.approx(0.5)
        assert expected_improvement(0.2, 0.0, 0.5) == 0.0

    def test_at_incumbent(self):
        """mean = incumbent gives sd * phi(0)"""
        assert expected_improvement(0.0, 1.0, 0.0) == pytest.approx(stats.norm.pdf(0.0))
        assert expected_improvement(0.0, 2.0, 0.0) == pytest.approx(2 * stats.norm.pdf(0.0))

    def test_vectorized(self):
        """Arrays in, arrays out, never negative"""
        ei = expected_improvement(np.array([-5.0, 0.0, 5.0]), np.array([0.1, 1.0, 0.1]), 0.0)
        assert ei.shape == (3,)
        assert np.all(ei >= 0)
        assert ei[2] == pytest.approx(5.0, abs=1e-6)

    def test_matches_monte_carlo(self):
        """Over 100 triples the closed form is within 3 standard errors of 10^6 sampled (f - incumbent)^+"""
        rng = np.random.default_rng(21)
        n = 1_000_000
        means = rng.uniform(-2.0, 2.0, 100)
        sds = np.exp(rng.uniform(np.log(1e-3), np.log(2.0), 100))
        incumbents = means - rng.uniform(-3.0, 3.0, 100) * sds
        closed = expected_improvement(means, sds, incumbents)
        for mean, sd, incumbent, ei in zip(means, sds, incumbents, closed):
            # one normal draw per probability stratum
            z = stats.norm.ppf((np.arange(n) + rng.random(n)) / n)
            gain = np.maximum(mean + sd * z - incumbent, 0.0)
            se = gain.std(ddof=1) / math.sqrt(n)
            assert abs(ei - gain.mean()) <= 3 * se + 1e-12

    def test_negative_sd_rejected(self):
        """Standard deviations cannot be negative"""
        with pytest.raises(ValidationError):
            expected_improvement(0.0, -1.0, 0.0)


class TestProposeNext:

    def test_stays_in_box(self, kernel, observations):
        """Proposals always lie in the box"""
        rng = np.random.default_rng(3)
        for _ in range(5):
            theta = propose_next(kernel, observations, BOX, rng, starts=5, steps=20)
            assert BOX.contains(theta)

    def test_improves_on_observed_points(self, kernel, observations):
        """The proposal's EI is positive and beats EI at every observation"""
        theta = propose_next(kernel, observations, BOX, np.random.default_rng(4), starts=8, steps=30)
        posterior = Posterior(kernel, observations)
        mean, variance = posterior.predict(theta)
        proposed = expected_improvement(mean[0], math.sqrt(variance[0]), posterior.incumbent)
        assert proposed > 0
        for obs in observations:
            m, v = posterior.predict(obs.theta)
            assert proposed >= expected_improvement(m[0], math.sqrt(v[0]), posterior.incumbent)


class TestTune:

    def test_history_and_incumbent(self):
        """Incumbents never decrease and the best point is the best observation"""
        result = tune(peak, BOX, L=12, L0=4, rng=np.random.default_rng(5), restarts=2, starts=5, steps=20)
        assert [s.stage for s in result.history] == list(range(1, 13))
        assert all(s.source == 'initial' for s in result.history[:4])
        assert all(s.source in ('acquisition', 'random') for s in result.history[4:])
        assert np.all(np.diff(result.incumbents) >= 0)
        assert result.best_value == max(o.value for o in result.observations)
        assert peak(result.best_theta) == pytest.approx(result.best_value)
        assert all(BOX.contains(s.theta) for s in result.history)

    def test_constant_objective(self):
        """A flat objective still completes every stage"""
        result = tune(lambda theta: 0.5, BOX, L=6, L0=2, rng=np.random.default_rng(6), restarts=1,
                      starts=3, steps=10)
        assert len(result.history) == 6
        assert result.best_value == 0.5

    def test_failed_stage_recorded(self):
        """An evaluator exception marks the stage failed and the run continues"""
        calls = {'n': 0}

        def flaky(theta):
            calls['n'] += 1
            if calls['n'] == 3:
                raise RuntimeError("worker died")
            return peak(theta)

        result = tune(flaky, BOX, L=6, L0=3, rng=np.random.default_rng(7), restarts=1, starts=3, steps=10)
        failed = [s for s in result.history if s.failed]
        assert len(failed) == 1 and failed[0].stage == 3
        assert math.isnan(failed[0].value)
        assert len(result.observations) == 5

    def test_all_failures(self):
        """Nothing observed is an error"""
        def broken(theta):
            raise RuntimeError("down")

        with pytest.raises(EmptyInputError):
            tune(broken, BOX, L=3, L0=1, rng=np.random.default_rng(0))

    def test_refit_kernel_each_stage(self):
        """Refitting after every stage keeps a fitted kernel"""
        result = tune(peak, BOX, L=6, L0=3, rng=np.random.default_rng(8), restarts=1, starts=3,
                      steps=10, refit_kernel=True)
        assert result.kernel is not None
        assert len(result.observations) == 6

    def test_finds_known_optimum(self):
        """With the default stage counts and search settings a surrogate peaking at 0.95 is found within 0.01"""
        def surrogate(theta):
            theta = np.asarray(theta)
            return float(0.95 - (theta[0] - 0.62) ** 2 - 0.5 * (theta[1] - 0.35) ** 2)

        result = tune(surrogate, BOX, L=SimulationDefaults.TUNING_STAGES, L0=SimulationDefaults.INITIAL_DESIGN,
                      rng=np.random.default_rng(11))
        assert result.best_value >= 0.94

    def test_rejects_bad_stage_counts(self):
        """L0 must be smaller than L"""
        with pytest.raises(ValidationError, match="L0 must be < L"):
            tune(peak, BOX, L=5, L0=5, rng=np.random.default_rng(0))

    def test_deterministic(self):
        """Same seed, same history"""
        a = tune(peak, BOX, L=6, L0=3, rng=np.random.default_rng(9), restarts=1, starts=3, steps=10)
        b = tune(peak, BOX, L=6, L0=3, rng=np.random.default_rng(9), restarts=1, starts=3, steps=10)
        assert [s.theta for s in a.history] == [s.theta for s in b.history]


class TestSurface:

    def test_grid_shape_and_columns(self, kernel, observations):
        """grid x grid rows over the first two coordinates"""
        surface = posterior_surface(kernel, observations, BOX, grid=5)
        assert list(surface.columns) == ['a', 'b', 'mean', 'sd', 'ei']
        assert len(surface) == 25
        assert surface['a'].min() == 0.0 and surface['b'].max() == 1.0
        assert (surface['sd'] >= 0).all() and (surface['ei'] >= 0).all()

    def test_needs_two_dimensions(self, observations):
        """One-dimensional boxes have no surface"""
        box = HyperBox(['a'], [0.0], [1.0])
        with pytest.raises(ValidationError):
            posterior_surface(Kernel(0.5, 0.04, [4.0]), [Observation.of([0.5], 0.5)], box)


class TestHyperBox:

    def test_latin_hypercube_inside(self, rng):
        """LHS points cover the box one per stratum"""
        box = HyperBox.case_study()
        points = box.latin_hypercube(rng, 10)
        assert points.shape == (10, 2)
        assert all(box.contains(p) for p in points)
        strata = np.floor(box.to_unit(points)[:, 0] * 10).astype(int)
        assert sorted(strata) == list(range(10))

    def test_unit_round_trip(self):
        """to_unit and from_unit are inverse maps"""
        box = HyperBox.case_study()
        theta = np.array([5.56, 180.0])
        np.testing.assert_allclose(box.from_unit(box.to_unit(theta)), theta)

    def test_from_list_requires_keys(self):
        """Entries need name, lower and upper"""
        with pytest.raises(ConfigurationError):
            HyperBox.from_list([{'name': 'a', 'lower': 0.0}])

    def test_rejects_empty_interval(self):
        """lower < upper in every coordinate"""
        with pytest.raises(ValidationError):
            HyperBox(['a'], [1.0], [1.0])
