import numpy as np
import pytest
from scipy import special, stats

from analytics.policy import (epsilon_at, greedy_aid, learning_rate, q_update, record_visit,
                              select_aid)
from models.learning import EpsilonSchedule, LearningParams, QTable
from models.visual_state import build_aid_library
from utils.validation import ConfigurationError, ValidationError

AIDS = build_aid_library(['aN', 'aY'])


@pytest.fixture
def qtable():
    return QTable.zeros(2, AIDS)


class TestLearningRate:

    def test_first_visit_is_one(self):
        """gamma(1) = 1 for any eta0"""
        assert learning_rate(1, 10) == 1.0
        assert learning_rate(1, 0.5) == 1.0

    def test_eleventh_visit_halves(self):
        """eta0 = 10 gives 10 / 20 at the eleventh visit"""
        assert learning_rate(11, 10) == pytest.approx(0.5)

    def test_array_input(self):
        """Counts may be given as an array"""
        np.testing.assert_allclose(learning_rate(np.array([1, 11, 91]), 10), [1.0, 0.5, 0.1])

    def test_zero_visits_rejected(self):
        """The rate is undefined before the first visit"""
        with pytest.raises(ValidationError, match=">= 1"):
            learning_rate(0, 10)

    @pytest.mark.parametrize('eta0', [0.5, 1.0, 10.0, 100.0])
    def test_sum_diverges_and_sum_of_squares_converges(self, eta0):
        """Partial sums match digamma and trigamma: sum gamma grows like log n, sum gamma^2 has a finite limit"""
        rates = learning_rate(np.arange(1, 1_000_001), eta0)
        partial = np.cumsum(rates)
        n = np.array([10 ** 3, 10 ** 6])
        expected = eta0 * (special.digamma(n + eta0) - special.digamma(eta0))
        np.testing.assert_allclose(partial[n - 1], expected, rtol=1e-9)
        # the partial sum keeps growing like eta0 * log n
        assert partial[-1] - partial[999] == pytest.approx(eta0 * np.log((1e6 + eta0) / (1e3 + eta0)), rel=1e-3)

        squares = np.cumsum(rates ** 2)
        limit = eta0 ** 2 * special.polygamma(1, eta0)
        assert np.all(squares < limit)
        # the tail past n is below eta0^2 / (n - 1 + eta0)
        assert limit - squares[-1] < eta0 ** 2 / (1_000_000 - 1 + eta0)
        assert limit - squares[-1] > 0


class TestEpsilonSchedule:

    def test_inverse_stage(self):
        """kappa / (kappa + k)"""
        schedule = EpsilonSchedule(kappa=50)
        assert epsilon_at(0, schedule) == 1.0
        assert epsilon_at(50, schedule) == pytest.approx(0.5)
        assert epsilon_at(150, schedule) == pytest.approx(0.25)

    def test_exponential(self):
        """decay ** k"""
        schedule = EpsilonSchedule(EpsilonSchedule.EXPONENTIAL, decay=0.99)
        assert epsilon_at(0, schedule) == 1.0
        assert epsilon_at(2, schedule) == pytest.approx(0.9801)

    def test_negative_stage_rejected(self):
        """Stages count from 0"""
        with pytest.raises(ValidationError):
            epsilon_at(-1, EpsilonSchedule())

    def test_unknown_kind(self):
        """Only the two schedules exist"""
        with pytest.raises(ValidationError, match="epsilon.kind"):
            EpsilonSchedule('linear')


class TestSelectAid:

    def test_ties_break_to_lowest_id(self, qtable):
        """All-zero rows pick the no-aid option"""
        assert greedy_aid(qtable, 0).name == 'aN'
        assert select_aid(qtable, 0, 0.0, np.random.default_rng(0)).name == 'aN'

    def test_greedy_follows_q(self, qtable):
        """epsilon = 0 picks the argmax"""
        table = qtable.with_value(1, 'aY', 0.3)
        rng = np.random.default_rng(0)
        assert all(select_aid(table, 1, 0.0, rng).name == 'aY' for _ in range(50))
        assert select_aid(table, 0, 0.0, rng).name == 'aN'

    def test_invariant_under_positive_affine_maps(self):
        """q -> a q + b with a > 0 never changes a choice, ties included"""
        aids = build_aid_library(['aN', 'aY', 'aB', 'aC'])
        rng = np.random.default_rng(19)
        for _ in range(200):
            # small integers so that rows carry exact ties
            q = rng.integers(-3, 4, size=(5, len(aids))).astype(float)
            a, b = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0)))), float(rng.uniform(-100.0, 100.0))
            table, mapped = QTable(aids, q), QTable(aids, a * q + b)
            seed = int(rng.integers(2 ** 32))
            for epsilon in (0.0, 0.3):
                first, second = np.random.default_rng(seed), np.random.default_rng(seed)
                for x in range(5):
                    assert select_aid(table, x, epsilon, first) == select_aid(mapped, x, epsilon, second)

    def test_full_exploration_is_uniform(self, qtable):
        """epsilon = 1 draws aids uniformly"""
        table = qtable.with_value(0, 'aY', 5.0)
        rng = np.random.default_rng(99)
        n = 10000
        picks = [select_aid(table, 0, 1.0, rng).id for _ in range(n)]
        counts = np.bincount(picks, minlength=2)
        assert stats.chisquare(counts).pvalue > 0.001

    def test_partial_exploration_rate(self, qtable):
        """With epsilon = 0.2 the non-greedy aid shows up about 10% of the time"""
        table = qtable.with_value(0, 'aY', 5.0)
        rng = np.random.default_rng(17)
        n = 20000
        explored = sum(select_aid(table, 0, 0.2, rng).name == 'aN' for _ in range(n))
        assert explored / n == pytest.approx(0.1, abs=0.01)

    def test_rejects_bad_inputs(self, qtable, rng):
        """epsilon outside [0, 1] or an unknown state are errors"""
        with pytest.raises(ValidationError):
            select_aid(qtable, 0, 1.5, rng)
        with pytest.raises(ValidationError, match="out of range"):
            select_aid(qtable, 2, 0.5, rng)


class TestQUpdate:

    def test_first_update_takes_full_target(self, qtable):
        """gamma = 1 on the first visit sets q to the target"""
        params = LearningParams(beta=0.9, eta0=10)
        table = qtable.with_value(1, 'aY', 5.0)
        table = record_visit(table, 0, 'aN')
        updated = q_update(table, 0, 'aN', 2.78, 1, params)
        assert updated.value(0, 'aN') == pytest.approx(2.78 + 0.9 * 5.0)
        assert updated.visit_count(0, 'aN') == 1

    def test_eleventh_update_moves_halfway(self, qtable):
        """gamma = 0.5 at the eleventh visit"""
        params = LearningParams(beta=0.9, eta0=10)
        table = QTable(AIDS, [[4.0, 0.0], [0.0, 0.0]], [[10, 0], [0, 0]])
        table = record_visit(table, 0, 'aN')
        updated = q_update(table, 0, 'aN', 1.0, 1, params)
        assert updated.value(0, 'aN') == pytest.approx(4.0 + 0.5 * (1.0 - 4.0))

    def test_requires_recorded_visit(self, qtable):
        """Updating before the visit is recorded is an error"""
        with pytest.raises(ValidationError, match="record the visit"):
            q_update(qtable, 0, 'aN', 1.0, 0, LearningParams())

    def test_converges_to_fixed_point(self, qtable):
        """A self-loop with reward 3 converges to 3 / (1 - 0.9)"""
        params = LearningParams(beta=0.9, eta0=50)
        table = qtable
        for _ in range(2000):
            table = record_visit(table, 0, 'aY')
            table = q_update(table, 0, 'aY', 3.0, 0, params)
        assert table.value(0, 'aY') == pytest.approx(30.0, rel=1e-4)
        assert table.visit_count(0, 'aY') == 2000

    def test_tables_are_immutable(self, qtable):
        """Updates return new tables and leave the old one alone"""
        updated = q_update(record_visit(qtable, 0, 'aN'), 0, 'aN', 1.0, 0, LearningParams())
        assert qtable.value(0, 'aN') == 0.0
        assert updated.value(0, 'aN') == 1.0
        with pytest.raises(ValueError):
            qtable.q[0, 0] = 1.0


class TestLearningParams:

    def test_beta_must_be_below_one(self):
        """No undiscounted learning"""
        with pytest.raises(ValidationError, match="beta"):
            LearningParams(beta=1.0)

    def test_from_dict(self):
        """Nested epsilon settings are parsed"""
        params = LearningParams.from_dict({'beta': 0.8, 'epsilon': {'kind': 'exponential', 'decay': 0.95}})
        assert params.beta == 0.8
        assert params.epsilon.kind == EpsilonSchedule.EXPONENTIAL
        assert params.epsilon.decay == 0.95

    def test_invalid_section(self):
        """Bad values surface as configuration errors"""
        with pytest.raises(ConfigurationError):
            LearningParams.from_dict({'eta0': -1})

    def test_qtable_shape_checked(self):
        """q needs one column per aid"""
        with pytest.raises(ValidationError, match="q must be"):
            QTable(AIDS, np.zeros((2, 3)))
