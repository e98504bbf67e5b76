import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import levyts as lt
from levyts.classify import (FRACTIONAL_LEVY, GAUSSIAN_LEVY, STABLE_LEVY,
                             Thresholds, classify, report_to_dict,
                             report_to_json, run_nstep, variation_pct)


class TestVariationPct:
    def test_identical_vectors(self):
        assert variation_pct(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 0.0

    def test_three_percent_example(self):
        assert variation_pct(np.array([2.0]), np.array([2.06])) == pytest.approx(3.0)

    def test_twenty_percent_example(self):
        v = variation_pct(np.array([1.0, 3.0]), np.array([1.2, 3.6]))
        assert v == pytest.approx(100.0 * 0.8 / 4.0)

    def test_tiny_initial_excluded_from_both_sums(self):
        v = variation_pct(np.array([2.0, 1e-15]), np.array([2.06, 5.0]))
        assert v == pytest.approx(3.0)

    def test_all_zero_initial_raises(self):
        with pytest.raises(ValueError, match="zero"):
            variation_pct(np.zeros(3), np.ones(3))

    def test_layout_mismatch(self):
        with pytest.raises(ValueError, match="layout"):
            variation_pct(np.ones(2), np.ones(3))

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(0.1, 100.0), min_size=1, max_size=6),
           st.lists(st.floats(-100.0, 100.0), min_size=6, max_size=6),
           st.floats(0.01, 1000.0))
    def test_scale_invariance(self, first, last, c):
        first = np.array(first)
        last = np.array(last[: first.size])
        base = variation_pct(first, last)
        scaled = variation_pct(c * first, c * last)
        assert scaled == pytest.approx(base, rel=1e-9)


class TestClassify:
    def test_gaussian_column(self):
        assert classify(1.0, 2.0, 1.98, -0.001) == GAUSSIAN_LEVY

    def test_fractional_column(self):
        assert classify(8.0, 15.0, 1.95, 0.0) == FRACTIONAL_LEVY

    def test_stable_by_variation(self):
        assert classify(30.0, 2.0, 1.95, 0.0) == STABLE_LEVY

    def test_stable_by_heavy_tail(self):
        assert classify(1.0, 1.0, 1.4, 0.07) == STABLE_LEVY

    def test_heavy_tail_needs_both_conditions(self):
        assert classify(1.0, 1.0, 1.4, 0.0) == GAUSSIAN_LEVY
        assert classify(1.0, 1.0, 1.95, 0.07) == GAUSSIAN_LEVY

    def test_monotone_in_variations(self):
        order = {GAUSSIAN_LEVY: 0, FRACTIONAL_LEVY: 1, STABLE_LEVY: 2}
        prev = -1
        for v in (0.5, 2.9, 3.1, 10.0, 19.9, 20.1, 50.0):
            cls = classify(v, 1.0, 2.0, 0.0)
            assert order[cls] >= prev
            prev = order[cls]

    def test_threshold_overrides(self):
        th = Thresholds(small_pct=10.0, large_pct=40.0)
        assert classify(8.0, 9.0, 2.0, 0.0, th) == GAUSSIAN_LEVY
        assert classify(30.0, 9.0, 2.0, 0.0, th) == FRACTIONAL_LEVY

    def test_missing_inputs_listed(self):
        with pytest.raises(ValueError, match="stochastic"):
            classify(np.nan, 1.0, 2.0, 0.0)
        with pytest.raises(ValueError, match="alpha"):
            classify(1.0, 1.0, np.nan, 0.0)
        with pytest.raises(ValueError, match="margin"):
            classify(1.0, 1.0, 2.0, np.nan)

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            Thresholds(small_pct=25.0, large_pct=20.0)
        with pytest.raises(ValueError):
            Thresholds(alpha_heavy=2.5)


@pytest.mark.slow
class TestRunNstep:
    @pytest.fixture(scope="class")
    def small_series(self):
        ts, _, _ = lt.gen_scenario("A", 1.1, 1100, seed=21)
        return ts

    def test_report_structure_and_determinism(self, small_series):
        rep1 = run_nstep(small_series)
        rep2 = run_nstep(small_series)
        assert report_to_json(rep1) == report_to_json(rep2)
        payload = report_to_dict(rep1)
        assert set(payload) == {"series_meta", "steps", "variations",
                                "distribution", "memory_model", "levy_class",
                                "thresholds", "flags"}
        assert len(payload["steps"]) == 6
        step = payload["steps"][0]
        for key in ("theta1", "theta2", "residual", "stable", "normal",
                    "correlations", "memory_model"):
            assert key in step
        assert payload["variations"]["functional_pct_by_step"][0] == 0.0

    def test_step_zero_variation_is_zero(self, small_series):
        rep = run_nstep(small_series)
        assert rep.functional_pct_by_step[0] == 0.0
        assert rep.stochastic_pct_by_step[0] == 0.0

    def test_custom_steps(self, small_series):
        rep = run_nstep(small_series, step_offsets_days=(0.0, 365.0))
        assert len(rep.records) == 2
        assert rep.records[-1].n_obs == len(small_series)

    def test_short_series_rejected(self):
        ts, _, _ = lt.gen_scenario("A", 1.1, 900, seed=0)
        with pytest.raises(ValueError, match="3 years"):
            run_nstep(ts)

    def test_white_noise_classifies_gaussian(self):
        # functional signal + pure white noise: variations stay small
        ts, _, _ = lt.gen_scenario("A", 1.1, 1100, seed=5)
        spec = lt.NoiseModelSpec("pl+wn", a_wh=1.6, b_cl=0.0, beta=1.0)
        noise = lt.gen_noise(spec, 1100, seed=6)
        from levyts.functional import build_design
        X = build_design(noise.epochs, 1)
        truth = lt.FunctionalParams(2.0, 0.0, ((0.4, 0.2),))
        pure = noise.with_values(X @ truth.as_vector() + noise.values)
        rep = run_nstep(pure)
        assert rep.levy_class == GAUSSIAN_LEVY
        assert rep.distribution_verdict == "gaussian"
