import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motionauth.errors import ConfigurationError, EvaluationError
from motionauth.eval import (
    EerSummary,
    ScoreSet,
    SweepGrid,
    compute_eer,
    compute_far_frr,
    rate_curve,
    reduction_percentage,
    reduction_summary,
)
from motionauth.eval import reference

from . import oracles


class TestFarFrr:
    def test_zero_threshold(self):
        assert compute_far_frr(ScoreSet([0.2, 0.9], [0.1, 0.5]), 0.0) == (1.0, 0.0)

    def test_perfect(self):
        assert compute_far_frr(ScoreSet([1, 1], [0, 0]), 0.5) == (0.0, 0.0)

    def test_hand_count(self):
        far, frr = compute_far_frr(ScoreSet([0.9, 0.6, 0.4], [0.7, 0.3, 0.1]), 0.5)
        assert far == pytest.approx(1 / 3) and frr == pytest.approx(1 / 3)

    def test_ties_accept(self):
        assert compute_far_frr(ScoreSet([0.5], [0.5]), 0.5) == (1.0, 0.0)

    def test_errors(self):
        with pytest.raises(EvaluationError):
            compute_far_frr(ScoreSet([], [0.1]), 0.5)
        with pytest.raises(ConfigurationError):
            compute_far_frr(ScoreSet([0.1], [0.1]), 1.5)


class TestEer:
    def test_separated(self):
        assert compute_eer(ScoreSet([0.8, 0.9], [0.1, 0.2])).eer == 0.0

    def test_identical_distributions(self):
        s = np.random.default_rng(0).uniform(size=50)
        assert compute_eer(ScoreSet(s, s)).eer == pytest.approx(0.5)

    def test_exact_crossing_returned(self):
        # FAR = FRR = 1/3 at 0.5 on an observed threshold
        r = compute_eer(ScoreSet([0.9, 0.6, 0.4], [0.7, 0.3, 0.1]))
        assert r.eer == pytest.approx(1 / 3)

    @pytest.mark.parametrize("seed", range(50))
    def test_dense_oracle(self, seed):
        r = np.random.default_rng(seed)
        shift = r.uniform(0, 2)
        gen = 1 / (1 + np.exp(-(r.normal(size=200) + shift)))
        imp = 1 / (1 + np.exp(-r.normal(size=200)))
        assert abs(compute_eer(ScoreSet(gen, imp)).eer - oracles.eer_dense(gen, imp)) < 0.005

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.lists(st.floats(0, 1), min_size=1, max_size=30))
    @settings(max_examples=100, deadline=None)
    def test_monotone_invariance(self, gen, imp):
        base = compute_eer(ScoreSet(gen, imp)).eer
        # rank transform: strictly increasing and exact in floating point
        _, ranks = np.unique(np.concatenate([gen, imp]), return_inverse=True)
        ranks = (ranks + 1.0) / (len(ranks) + 1.0)
        assert compute_eer(ScoreSet(ranks[:len(gen)], ranks[len(gen):])).eer == base
        assert 0.0 <= base <= 1.0

    def test_smooth_transform(self):
        r = np.random.default_rng(8)
        gen, imp = r.uniform(0.2, 1, 100), r.uniform(0, 0.8, 100)
        base = compute_eer(ScoreSet(gen, imp)).eer
        assert compute_eer(ScoreSet(np.sqrt(gen), np.sqrt(imp))).eer == pytest.approx(base, abs=1e-12)

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.lists(st.floats(0, 1), min_size=1, max_size=30))
    @settings(max_examples=50, deadline=None)
    def test_curves_monotone(self, gen, imp):
        _, far, frr = rate_curve(ScoreSet(gen, imp))
        assert np.all(np.diff(far) <= 0) and np.all(np.diff(frr) >= 0)
        assert far[-1] == 0.0 and frr[-1] == 1.0

    def test_threshold_gives_balanced_rates(self):
        r = np.random.default_rng(3)
        s = ScoreSet(r.beta(5, 2, 400), r.beta(2, 5, 400))
        res = compute_eer(s)
        far, frr = compute_far_frr(s, res.threshold_at_eer)
        assert abs(far - frr) < 0.02


class TestSummary:
    def test_mean_of_subjects(self):
        per = {f"u{i}": v for i, v in enumerate(np.random.default_rng(0).uniform(size=41))}
        s = EerSummary.from_subjects(per)
        assert abs(s.mean_eer - sum(per.values()) / 41) < 1e-12
        shuffled = dict(reversed(list(per.items())))
        assert abs(EerSummary.from_subjects(shuffled).mean_eer - s.mean_eer) < 1e-12

    def test_empty(self):
        with pytest.raises(EvaluationError):
            EerSummary.from_subjects({})


class TestReductions:
    def test_equal(self):
        assert reduction_percentage(0.1, 0.1) == 0.0

    def test_published_max(self):
        assert round(reduction_percentage(0.083, 0.053), 2) == 36.14

    def test_fcn_row(self):
        assert round(reduction_percentage(0.121, 0.082), 2) == 32.23

    def test_zero_baseline(self):
        with pytest.raises(EvaluationError):
            reduction_percentage(0.0, 0.0)

    def test_summary_on_toy_grid(self):
        g = SweepGrid("eer", [25, 35], [0, 10, 20])
        for ws, h, v in [(25, 0, 0.2), (25, 10, 0.1), (25, 20, 0.15), (35, 0, 0.1), (35, 10, 0.08)]:
            g.set(ws, h, v)
        s = reduction_summary(g)
        assert s.per_row_best == {25: pytest.approx(50.0), 35: pytest.approx(20.0)}
        assert s.max_reduction == pytest.approx(50.0)
        assert s.mean_per_row_best == pytest.approx(35.0)
        assert s.mean_all_cells == pytest.approx((50 + 25 + 20) / 3)

    def test_published_tables(self):
        tf = reduction_summary(reference.forecast_eer_table("tf"))
        fcn = reduction_summary(reference.forecast_eer_table("fcn"))
        assert round(tf.max_reduction, 2) == reference.MAX_REDUCTION
        assert tf.per_row_best[45] == pytest.approx(reduction_percentage(0.083, 0.053))
        # the published average matches the FCN per-row-best mean
        assert round(fcn.mean_per_row_best, 2) == reference.MEAN_REDUCTION

    def test_grid_without_baseline(self):
        g = SweepGrid("eer", [25], [0, 10])
        g.set(25, 10, 0.1)
        with pytest.raises(EvaluationError):
            reduction_summary(g)
