import math

import numpy as np
import pytest

from qndsim.core import bath_from_gamma
from qndsim.measurement import ProjectorPartition
from qndsim.protocol import MeasurementRecord, MeasurementSchedule, run_trajectory_gillespie
from qndsim.stats import (
    FitError,
    SurvivalCurve,
    dwell_statistics,
    estimate_survival,
    fit_decay,
    ks_distance,
    time_average,
)

PARAMS = bath_from_gamma(1.0, 0.1)


def make_record(outcomes, dt=1.0, trunc=1):
    outcomes = np.asarray(outcomes, dtype=np.int16)
    schedule = MeasurementSchedule(dt, outcomes.size, ProjectorPartition.fine(trunc))
    return MeasurementRecord(schedule, int(outcomes[0]), outcomes, 0, 0, "synthetic")


class TestEstimateSurvival:
    def test_constant_records_never_decay(self):
        records = [make_record([0] * 10) for _ in range(5)]
        curve = estimate_survival(records, 0)
        assert np.array_equal(curve.survival, np.ones(11))

    def test_wrong_start_drops_immediately(self):
        records = [make_record([1, 0, 0, 0]) for _ in range(5)]
        curve = estimate_survival(records, 0)
        assert curve.survival[0] == 1.0
        assert not curve.survival[1:].any()

    def test_binomial_process_oracle(self):
        # records built from a known per-step leave probability: survival at
        # step i must track (1-p)^i inside 3 binomial sigmas
        rng = np.random.default_rng(99)
        p_leave, steps, n = 0.05, 40, 4000
        records = []
        for _ in range(n):
            outcomes = np.zeros(steps, dtype=np.int16)
            exits = rng.random(steps) < p_leave
            if exits.any():
                outcomes[int(np.argmax(exits)):] = 1
            records.append(make_record(outcomes))
        curve = estimate_survival(records, 0)
        for i in (1, 5, 10, 20, 40):
            expected = (1.0 - p_leave) ** i
            sigma = math.sqrt(expected * (1.0 - expected) / n)
            assert abs(curve.survival[i] - expected) <= 3.0 * sigma

    def test_monotone_and_stderr(self):
        records = [make_record([0, 0, 1, 1]), make_record([0, 1, 1, 1]), make_record([0] * 4)]
        curve = estimate_survival(records, 0)
        assert np.all(np.diff(curve.survival) <= 0.0)
        p = curve.survival
        assert curve.stderr == pytest.approx(np.sqrt(p * (1 - p) / 3.0))

    def test_rejects_empty_and_mixed_schedules(self):
        with pytest.raises(ValueError):
            estimate_survival([], 0)
        with pytest.raises(ValueError):
            estimate_survival([make_record([0, 1]), make_record([0, 1, 1])], 0)


class TestFitDecay:
    def test_exact_exponential_recovered(self):
        times = 0.1 * np.arange(100)
        curve = SurvivalCurve.from_probabilities(times, np.exp(-0.1 * times))
        fit = fit_decay(curve)
        assert abs(fit.rate - 0.1) <= 1e-9

    def test_product_curve_rate(self):
        # the fitted rate of the exact product curve is -ln(single-step
        # factor)/dt, about 0.4% above n_thermal*gamma at these settings
        dt, steps = 0.01, 100
        factor = 1.0 - 0.1 * (1.0 - math.exp(-dt))
        times = dt * np.arange(steps + 1)
        curve = SurvivalCurve.from_probabilities(times, factor ** np.arange(steps + 1))
        fit = fit_decay(curve)
        direct = -math.log(factor) / dt
        assert abs(fit.rate - direct) <= 1e-9
        assert abs(fit.rate - 0.0995) <= 0.01 * 0.0995

    def test_all_ones_is_a_fit_failure(self):
        curve = SurvivalCurve.from_probabilities(np.arange(10.0), np.ones(10))
        with pytest.raises(FitError):
            fit_decay(curve)

    def test_too_few_points_is_a_fit_failure(self):
        curve = SurvivalCurve.from_probabilities(np.arange(5.0), np.exp(-2.0 * np.arange(5.0)))
        with pytest.raises(FitError):
            fit_decay(curve, floor=0.5)

    def test_window_reports_used_range(self):
        times = 0.5 * np.arange(30)
        curve = SurvivalCurve.from_probabilities(times, np.exp(-0.4 * times))
        fit = fit_decay(curve, floor=0.05)
        assert fit.window.floor == 0.05
        assert fit.window.n_points < 30  # deep tail excluded
        assert fit.window.t_min == 0.0


class TestDwellStatistics:
    def test_run_length_encoding(self):
        dwell = dwell_statistics(make_record([0, 0, 1, 1, 1, 0], dt=1.0))
        assert dwell.time_per_bin == pytest.approx([3.0, 3.0])
        assert dwell.dwell_lengths[0].tolist() == [2, 1]
        assert dwell.dwell_lengths[1].tolist() == [3]
        # boundary runs are censored by the record edges
        assert dwell.interior_dwell_lengths[0].size == 0
        assert dwell.interior_dwell_lengths[1].tolist() == [3]

    def test_constant_record_single_dwell(self):
        dwell = dwell_statistics(make_record([1] * 7))
        assert dwell.dwell_lengths[1].tolist() == [7]
        assert dwell.counts.tolist() == [0, 7]

    def test_partition_identities(self):
        record = make_record([0, 1, 1, 0, 0, 0, 1, 0], dt=0.25)
        dwell = dwell_statistics(record)
        assert dwell.counts.sum() == record.outcomes.size
        assert dwell.total_time == record.outcomes.size * 0.25
        assert sum(lengths.sum() for lengths in dwell.dwell_lengths) == record.outcomes.size
        assert dwell.fractions.sum() == 1.0

    def test_long_record_fraction_matches_stationary_oracle(self):
        sched = MeasurementSchedule(0.01, 400_000, ProjectorPartition.fine(1))
        record = run_trajectory_gillespie(PARAMS, sched, 0, 1, (2, 0))
        dwell = dwell_statistics(record)
        pi1 = PARAMS.emission_rate / (PARAMS.emission_rate + PARAMS.absorption_rate)
        assert abs(dwell.fractions[1] - pi1) <= 0.02

    def test_requires_fine_partition(self):
        part = ProjectorPartition(1, ((0, 1),))
        schedule = MeasurementSchedule(1.0, 3, part)
        record = MeasurementRecord(schedule, 0, np.zeros(3, dtype=np.int16), 0, 0, "synthetic")
        with pytest.raises(ValueError):
            dwell_statistics(record)


class TestTimeAverage:
    def test_constant_record(self):
        assert time_average(make_record([0] * 6), 0) == 1.0

    def test_alternating_record(self):
        assert time_average(make_record([0, 1, 0, 1]), 1) == 0.5

    def test_equals_dwell_fraction_exactly(self):
        record = make_record([0, 0, 1, 0, 1, 1, 1, 0, 0, 1, 0])
        dwell = dwell_statistics(record)
        for n in (0, 1):
            assert time_average(record, n) == dwell.fractions[n]


class TestKsDistance:
    def test_identical_samples(self):
        a = np.array([0.3, 1.2, 2.2, 4.0])
        stat, pvalue = ks_distance(a, a)
        assert stat == 0.0
        assert pvalue == 1.0

    def test_disjoint_supports(self):
        stat, _ = ks_distance(np.arange(10.0), np.arange(10.0) + 100.0)
        assert stat == 1.0

    def test_rejects_empty_sample(self):
        with pytest.raises(ValueError):
            ks_distance(np.array([]), np.array([1.0]))

    def test_null_distribution_oracle(self):
        # same-distribution draws: p > 0.01 should hold in >= 98/100 repeats
        rng = np.random.default_rng(7)
        hits = sum(
            ks_distance(rng.exponential(size=10_000), rng.exponential(size=10_000))[1] > 0.01
            for _ in range(100)
        )
        assert hits >= 98
