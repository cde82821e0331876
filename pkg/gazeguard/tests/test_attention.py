import numpy as np
import pytest
from scipy import integrate

from analytics.attention import (TrajectoryCoverageError, aal, attention_representative, cal,
                                 cal_series, fit_scores, quantize, representatives, stage_aals,
                                 stage_cals, stage_reward, synth_pupil_trace)
from analytics.gaze_model import fixed_schedule, simulate_session
from models.scores import AnnealingParams, AttentionConfig, PupilTrace, ScoreTable
from models.trajectory import TrajectorySegment, VsTrajectory
from models.visual_state import VisualState
from utils.validation import ConfigurationError, EmptyInputError, ValidationError

S1 = VisualState.aoi(1)
S5 = VisualState.aoi(5)
UA = VisualState.uninformative()
DA = VisualState.distraction()


def reward(table, state, t):
    r, alpha = table.score(state), table.decay(state)
    return integrate.quad(lambda tau: r * np.exp(-alpha * tau), 0, t)[0]


class TestStageReward:

    def test_matches_numerical_integral(self, small_space):
        """Closed form equals the integral of the decaying rate for 1000 random (r, alpha, t)"""
        rng = np.random.default_rng(31)
        scores = rng.uniform(-10.0, 50.0, 1000)
        decays = np.exp(rng.uniform(np.log(1e-3), np.log(20.0), 1000))
        dwells = rng.uniform(0.0, 10.0, 1000)
        for r, alpha, t in zip(scores, decays, dwells):
            table = ScoreTable(small_space, [r, 0.0, 0.0], [alpha, 1.0, 1.0])
            expected = integrate.quad(lambda tau: r * np.exp(-alpha * tau), 0, t,
                                      epsabs=0.0, epsrel=1e-12, limit=200)[0]
            assert stage_reward(table, S1, t) == pytest.approx(expected, rel=1e-9, abs=1e-12)

    def test_content_stage(self, table):
        """A full 3 s stage on s5 accumulates 21.05 (1 - e^-0.48) / 0.16 = 50.154, not 50.19"""
        assert stage_reward(table, S5, 3.0) == pytest.approx(reward(table, S5, 3.0), rel=1e-10)
        assert stage_reward(table, S5, 3.0) == pytest.approx(50.154, abs=1e-3)
        assert abs(stage_reward(table, S5, 3.0) - 50.19) > 0.03

    def test_saturates_at_score_over_decay(self, table):
        """Long dwell approaches r/alpha"""
        assert stage_reward(table, S1, 1e4) == pytest.approx(9.48 / 2.17, rel=1e-9)

    def test_zero_dwell(self, table):
        """No time, no attention"""
        assert stage_reward(table, S5, 0.0) == 0.0

    def test_off_aoi_states_contribute_nothing(self, table):
        """ua and da carry a zero score"""
        assert stage_reward(table, UA, 2.0) == 0.0
        assert stage_reward(table, DA, 2.0) == 0.0

    def test_negative_time_rejected(self, table):
        """t must be non-negative"""
        with pytest.raises(ValidationError):
            stage_reward(table, S1, -0.1)


class TestCal:

    @pytest.fixture
    def segments(self):
        return [TrajectorySegment(S5, 0.0, 1.0), TrajectorySegment(S1, 1.0, 2.0)]

    def test_sums_completed_segments(self, table, segments):
        """CAL at the stage end adds each segment's full reward"""
        expected = reward(table, S5, 1.0) + reward(table, S1, 2.0)
        assert cal(segments, table, 3.0) == pytest.approx(expected, rel=1e-9)

    def test_partial_segment(self, table, segments):
        """The segment in progress contributes up to t"""
        expected = reward(table, S5, 1.0) + reward(table, S1, 0.5)
        assert cal(segments, table, 1.5) == pytest.approx(expected, rel=1e-9)

    def test_zero_at_stage_start(self, table, segments):
        """CAL restarts at 0"""
        assert cal(segments, table, 0.0) == 0.0

    def test_monotone_in_time(self, table, segments):
        """Non-negative scores give a non-decreasing CAL"""
        values = [cal(segments, table, t) for t in np.linspace(0, 3, 31)]
        assert np.all(np.diff(values) >= 0)

    def test_gap_raises(self, table):
        """A hole in the stage is a coverage error"""
        segments = [TrajectorySegment(S5, 0.0, 1.0), TrajectorySegment(S1, 1.5, 1.5)]
        with pytest.raises(TrajectoryCoverageError, match="gap"):
            cal(segments, table, 3.0)

    def test_short_coverage_raises(self, table, segments):
        """Asking past the last segment is a coverage error"""
        with pytest.raises(TrajectoryCoverageError, match="need"):
            cal(segments, table, 4.0)

    def test_aal_is_cal_per_second(self):
        """AAL divides by the stage length"""
        assert aal(15.0, 3.0) == pytest.approx(5.0)
        with pytest.raises(ValidationError):
            aal(15.0, 0.0)


class TestStageSplitting:

    def test_decay_clock_restarts_each_stage(self, table):
        """A segment spanning a boundary starts over in the next stage"""
        trajectory = VsTrajectory.from_pieces([(S5, 2.0), (S1, 2.0)])
        values = stage_cals(trajectory, table, 3.0)
        assert values[0] == pytest.approx(reward(table, S5, 2.0) + reward(table, S1, 1.0), rel=1e-9)
        assert values[1] == pytest.approx(reward(table, S1, 1.0), rel=1e-9)

    def test_partial_stage_averaged_over_its_length(self, table):
        """The last, shorter stage divides by its own length"""
        trajectory = VsTrajectory.from_pieces([(S5, 2.0), (S1, 2.0)])
        values = stage_aals(trajectory, table, 3.0)
        assert len(values) == 2
        assert values[1] == pytest.approx(reward(table, S1, 1.0) / 1.0, rel=1e-9)

    def test_aal_within_table_bounds(self, experiment, space):
        """Every stage AAL lies in [min(0, min r), max r] for random signed score tables"""
        rng = np.random.default_rng(13)
        aN, aY = experiment.dynamics.aids
        for i in range(200):
            r = rng.uniform(-5.0, 30.0, space.size)
            r[4] = abs(r[4]) + 1.0
            table = ScoreTable(space, r, np.exp(rng.uniform(np.log(0.01), np.log(5.0), space.size)))
            lo, hi = table.aal_bounds()
            assert lo == min(0.0, r.min()) and hi == r.max()
            trajectory = simulate_session(experiment.dynamics, fixed_schedule(aY if i % 2 else aN),
                                          float(rng.uniform(3.0, 40.0)), 3.0, rng)
            values = np.array(stage_aals(trajectory, table, 3.0))
            assert np.all(values >= lo - 1e-9)
            assert np.all(values <= hi + 1e-9)


class TestQuantize:

    def test_binary_threshold_is_attentive(self):
        """v equal to the threshold counts as attentive"""
        config = AttentionConfig(threshold=5.56)
        assert quantize(5.56, config) == 1
        assert quantize(5.5599, config) == 0
        assert quantize(-3.0, config) == 0

    def test_uniform_bins(self):
        """Equal bins over [v_min, v_max] with clamping"""
        config = AttentionConfig(mode='uniform', levels=4, v_min=-30, v_max=60)
        assert quantize(-100, config) == 0
        assert quantize(-30, config) == 0
        assert quantize(-7.5, config) == 1
        assert quantize(30, config) == 2
        assert quantize(40, config) == 3
        assert quantize(60, config) == 3
        assert quantize(1e6, config) == 3

    @pytest.mark.parametrize('config', [
        AttentionConfig(threshold=5.56),
        AttentionConfig(threshold=12.0),
        AttentionConfig(mode='uniform', levels=4, v_min=-30, v_max=60),
        AttentionConfig(mode='uniform', levels=7, v_min=0, v_max=21.05),
    ])
    def test_monotone_and_idempotent(self, config, table):
        """Larger levels never map lower; a level's representative maps back to it"""
        values = np.sort(np.random.default_rng(5).uniform(-100.0, 100.0, 5000))
        levels = np.array([quantize(v, config) for v in values])
        assert np.all(np.diff(levels) >= 0)
        assert set(levels) <= set(range(config.levels))
        for x, v in enumerate(representatives(config, table)):
            assert quantize(v, config) == x

    def test_binary_forces_two_levels(self):
        """Binary mode ignores a levels setting"""
        assert AttentionConfig(levels=5).levels == 2

    def test_representatives_binary(self, table):
        """Midpoints of [lowest AAL, threshold] and [threshold, highest AAL]"""
        config = AttentionConfig(threshold=5.56)
        np.testing.assert_allclose(representatives(config, table), [2.78, (5.56 + 21.05) / 2])

    def test_representatives_uniform(self, table):
        """Bin midpoints"""
        config = AttentionConfig(mode='uniform', levels=4, v_min=-30, v_max=60)
        np.testing.assert_allclose(representatives(config, table), [-18.75, 3.75, 26.25, 48.75])
        assert attention_representative(2, config, table) == pytest.approx(26.25)

    def test_representative_out_of_range(self, table):
        """Unknown attention state indexes are rejected"""
        with pytest.raises(ValidationError, match="out of range"):
            attention_representative(2, AttentionConfig(), table)

    def test_uniform_needs_ordered_range(self):
        """v_min must be below v_max"""
        with pytest.raises(ValidationError):
            AttentionConfig(mode='uniform', v_min=10, v_max=10)

    def test_unknown_attention_key(self):
        """from_dict rejects unknown keys"""
        with pytest.raises(ConfigurationError, match="unknown attention keys"):
            AttentionConfig.from_dict({'period': 3})


class TestCalSeries:

    def test_resets_at_stage_boundary(self, table):
        """Samples at a boundary belong to the new stage with CAL 0"""
        trajectory = VsTrajectory.from_pieces([(S5, 6.0)])
        series = cal_series(trajectory, table, 3.0)
        assert list(series.columns) == ['time_s', 'stage', 'aid', 'state', 'cal']
        assert len(series) == 361
        at_boundary = series[series['time_s'] == 3.0].iloc[0]
        assert at_boundary['stage'] == 1
        assert at_boundary['cal'] == 0.0
        before = series[series['stage'] == 0]['cal'].iloc[-1]
        assert before == pytest.approx(reward(table, S5, 179 / 60), rel=1e-9)

    def test_labels_states_and_aids(self, experiment, table):
        """Rows carry the state label and the stage's aid"""
        aN, aY = experiment.dynamics.aids
        trajectory = VsTrajectory.from_pieces([(S1, 1.0), (UA, 3.0)], stage_aids=[aN, aY], stage_length=3.0)
        series = cal_series(trajectory, table)
        assert series['state'].iloc[0] == 's1'
        assert series['state'].iloc[-1] == 'ua'
        assert set(series['aid']) == {'aN', 'aY'}


class TestPupilTrace:

    @pytest.fixture
    def trajectory(self):
        return VsTrajectory.from_pieces([(S5, 1.0), (S1, 2.0)])

    def test_noise_free_trace_starts_at_scaled_score(self, trajectory, table, rng):
        """At tau = 0 the diameter is scale * r"""
        trace = synth_pupil_trace(trajectory, table, 0.0, rng, scale=2.0, T_pl=3.0)
        assert len(trace) == 181
        assert trace.diameters[0] == pytest.approx(2.0 * 21.05)
        assert trace.diameters[60] == pytest.approx(2.0 * 9.48)

    def test_decays_within_a_segment(self, trajectory, table, rng):
        """The rate decays as exp(-alpha * tau)"""
        trace = synth_pupil_trace(trajectory, table, 0.0, rng, T_pl=3.0)
        assert trace.diameters[30] == pytest.approx(21.05 * np.exp(-0.16 * 0.5))

    def test_noise_added(self, trajectory, table):
        """Noise has the requested spread"""
        clean = synth_pupil_trace(trajectory, table, 0.0, np.random.default_rng(1), T_pl=3.0)
        noisy = synth_pupil_trace(trajectory, table, 0.5, np.random.default_rng(1), T_pl=3.0)
        assert np.std(noisy.diameters - clean.diameters) == pytest.approx(0.5, rel=0.2)

    def test_trace_times_must_increase(self):
        """Unordered samples are rejected"""
        with pytest.raises(ValidationError, match="strictly increasing"):
            PupilTrace([0.0, 0.0], [1.0, 1.0])


class TestFitScores:

    @pytest.fixture
    def observations(self, space, table, rng):
        # every state held for one full 3 s stage
        trajectory = VsTrajectory.from_pieces([(state, 3.0) for state in space.states])
        trace = synth_pupil_trace(trajectory, table, 0.0, rng, T_pl=3.0)
        return [trace], [trajectory]

    def test_recovers_main_content_scores(self, observations, space):
        """Noise-free traces give back the content AoI's score and decay under the default annealing schedule"""
        traces, trajectories = observations
        sa = AnnealingParams()
        fit = fit_scores(traces, trajectories, np.random.default_rng(8), sa, space=space, T_pl=3.0)
        assert fit.table.score(S5) == pytest.approx(21.05, rel=0.10)
        assert fit.table.decay(S5) == pytest.approx(0.16, rel=0.20)
        assert fit.samples_per_state['s5'] == 180

    def test_history_never_increases(self, observations, space):
        """The incumbent objective only improves"""
        traces, trajectories = observations
        sa = AnnealingParams(iterations=500)
        fit = fit_scores(traces, trajectories, np.random.default_rng(2), sa, space=space, T_pl=3.0)
        assert len(fit.history) == 500
        assert np.all(np.diff(fit.history) <= 1e-12)
        assert fit.objective == pytest.approx(fit.history[-1])

    def test_zero_iterations_returns_initial_table(self, observations, table):
        """Without iterations the true table stays put with zero error"""
        traces, trajectories = observations
        fit = fit_scores(traces, trajectories, np.random.default_rng(0),
                         AnnealingParams(iterations=0), initial=table, T_pl=3.0)
        assert fit.table == table
        assert fit.objective == pytest.approx(0.0, abs=1e-20)
        assert fit.history == []

    def test_fitted_values_stay_in_bounds(self, observations, space):
        """Accepted proposals never leave the search box"""
        traces, trajectories = observations
        sa = AnnealingParams(iterations=300, score_bounds=(0, 30), decay_bounds=(0.05, 5.0))
        fit = fit_scores(traces, trajectories, np.random.default_rng(4), sa, space=space, T_pl=3.0)
        assert np.all((fit.table.r_co >= 0) & (fit.table.r_co <= 30))
        assert np.all((fit.table.alpha >= 0.05) & (fit.table.alpha <= 5.0))

    def test_mismatched_inputs(self, observations):
        """One trace per trajectory is required"""
        traces, trajectories = observations
        with pytest.raises(EmptyInputError):
            fit_scores(traces, trajectories * 2, np.random.default_rng(0))

    def test_invalid_annealing_settings(self):
        """Cooling must lie in (0, 1] and decay bounds be positive"""
        with pytest.raises(ValidationError):
            AnnealingParams(cooling_rate=1.5)
        with pytest.raises(ValidationError, match="positive"):
            AnnealingParams(decay_bounds=(0.0, 1.0))
        with pytest.raises(ConfigurationError):
            AnnealingParams.from_dict({'steps': 10})


class TestScoreTable:

    def test_table_one_has_neutral_off_aoi_states(self, table):
        """ua/da score zero"""
        assert table.score(UA) == 0.0
        assert table.score(DA) == 0.0
        assert table.score(S5) == 21.05

    def test_missing_entries_on_custom_layout(self, small_space):
        """Non-case-study layouts need explicit AoI entries"""
        with pytest.raises(ConfigurationError, match="missing entries for s1"):
            ScoreTable.from_dict({}, small_space)

    def test_dict_round_trip(self, table, space):
        """to_dict/from_dict preserves the table"""
        assert ScoreTable.from_dict(table.to_dict(), space) == table
