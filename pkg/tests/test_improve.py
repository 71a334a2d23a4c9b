import numpy as np
import pytest

from fairlift.data import (
    CollegeConfig,
    ExperimentDataset,
    SyntheticConfig,
    generate_college,
    generate_synthetic,
    synthetic_schema,
)
from fairlift.fairness import ThresholdPolicy, ValueModel, mock_evaluate, tf
from fairlift.gam import AdditiveModel, Shape1D
from fairlift.improve import (
    AdjustedScore,
    ShapeAdjustment,
    adjust_prediction,
    college_shade_metrics,
    default_threshold,
    pareto,
    quantile_grid,
    shape_removal_curve,
    sweep_thresholds,
)
from .conftest import hand_built_gam, linear_shape, product_shape

UNIT = ValueModel(1.0, 1.0)


def brute_force_frontier(obj):
    """Oracle: O(n^2) pairwise domination scan."""
    n = len(obj)
    frontier = []
    for i in range(n):
        dominated = False
        for j in range(n):
            if i == j:
                continue
            if (obj[j][0] >= obj[i][0] and obj[j][1] >= obj[i][1]
                    and (obj[j][0] > obj[i][0] or obj[j][1] > obj[i][1])):
                dominated = True
                break
        if not dominated:
            frontier.append(i)
    return frontier


@pytest.fixture()
def gam_teacher():
    """A teacher that IS an additive model, so surgery is exactly checkable."""
    shapes1 = [linear_shape(0, 0.8), linear_shape(1, -0.5), linear_shape(2, 1.1)]
    shapes2 = [product_shape(0, 1, 0.7)]
    return hand_built_gam(shapes1=shapes1, shapes2=shapes2, intercept=0.3)


@pytest.fixture()
def audit_gam():
    shapes1 = [linear_shape(0, 0.4), linear_shape(1, -0.2), linear_shape(2, 0.9)]
    shapes2 = [product_shape(0, 1, 0.2)]
    return hand_built_gam(shapes1=shapes1, shapes2=shapes2, intercept=0.1)


class TestAdjustPrediction:
    def test_alpha_zero_is_identity(self, gam_teacher, audit_gam):
        X = np.random.default_rng(0).standard_normal((100, 3))
        adj = [ShapeAdjustment(1, 0.0)]
        out = adjust_prediction(gam_teacher, gam_teacher, audit_gam, adj, X)
        assert np.array_equal(out, gam_teacher.raw(X))

    def test_full_zero_removal_deletes_shape(self, gam_teacher, audit_gam):
        X = np.random.default_rng(1).standard_normal((100, 3))
        adj = [ShapeAdjustment(1, 1.0, "zero")]
        out = adjust_prediction(gam_teacher, gam_teacher, audit_gam, adj, X)
        without = gam_teacher.raw(X) - gam_teacher.shapes1[1](X[:, 1])
        assert np.allclose(out, without, atol=1e-12)

    def test_full_audit_replacement_substitutes_shape(self, gam_teacher, audit_gam):
        X = np.random.default_rng(2).standard_normal((100, 3))
        adj = [ShapeAdjustment((0, 1), 1.0, "audit")]
        out = adjust_prediction(gam_teacher, gam_teacher, audit_gam, adj, X)
        swapped = (gam_teacher.raw(X)
                   - gam_teacher.shapes2[0](X[:, 0], X[:, 1])
                   + audit_gam.shapes2[0](X[:, 0], X[:, 1]))
        assert np.allclose(out, swapped, atol=1e-12)

    def test_unknown_shape_rejected(self, gam_teacher, audit_gam):
        with pytest.raises(KeyError):
            AdjustedScore(gam_teacher, gam_teacher, audit_gam, [ShapeAdjustment(9, 0.5)])

    def test_alpha_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            ShapeAdjustment(0, 1.5)

    def test_group_flip_invariance_after_full_removal(self):
        # teacher == distilled; the only group-dependent shape is removed
        group_shape = Shape1D(0, np.array([0.0, 1.0]), np.array([-0.6, 0.6]))
        teacher = hand_built_gam(shapes1=[group_shape, linear_shape(1)], intercept=0.2)
        scorer = AdjustedScore(teacher, teacher, None, [ShapeAdjustment(0, 1.0, "zero")])
        rng = np.random.default_rng(3)
        X = np.column_stack([rng.integers(0, 2, 500).astype(float), rng.standard_normal(500)])
        Xflip = X.copy()
        Xflip[:, 0] = 1 - Xflip[:, 0]
        s, sf = scorer.predict_raw(X), scorer.predict_raw(Xflip)
        assert np.allclose(s, sf, atol=1e-12)
        thr = default_threshold(s, 0.5)
        assert np.array_equal(s >= thr, sf >= thr)


class TestSweep:
    def test_group_independent_scores_equal_thresholds_give_tf_100(self):
        rng = np.random.default_rng(4)
        n = 20_000
        X = np.column_stack([
            rng.integers(0, 2, (n, 4)).astype(float),
            rng.standard_normal((n, 5)),
            rng.integers(0, 2, (n, 3)).astype(float),
        ])
        T = rng.integers(0, 2, n).astype(np.int8)
        ds = ExperimentDataset(schema=synthetic_schema(), X=X, T=T, Y=rng.random(n).round())
        score = lambda X: X[:, 6]
        # equal thresholds for both groups, skipping the data-starved tail
        levels = np.quantile(score(ds.X), np.linspace(0.0, 0.9, 7))
        for thr in levels:
            grid = {0: np.array([thr]), 1: np.array([thr])}
            manifold = sweep_thresholds(ds, score, grid, value_model=UNIT)
            assert manifold.entries[0]["tf"] > 93.0

    def test_treat_all_corner(self, synth_small):
        score = lambda X: X[:, 6]
        s = score(synth_small.X)
        grid = {0: np.array([s.min() - 1.0]), 1: np.array([s.min() - 1.0])}
        manifold = sweep_thresholds(synth_small, score, grid, value_model=UNIT)
        e = manifold.entries[0]
        assert e["tf"] == 100.0
        assert e["treat_rate_0"] == 1.0 and e["treat_rate_1"] == 1.0
        # treat-everyone economics equals the treated-arm outcome mean
        treated = synth_small.Y[synth_small.T == 1].mean()
        assert e["econ_mean"] == pytest.approx(treated)

    def test_correlated_score_has_fairer_grid_point(self):
        ds = generate_synthetic(SyntheticConfig(n=30_000, c=1.0, seed=41))
        score = lambda X: np.asarray(ds.true_ite())
        s = ds.true_ite()
        g = ds.groups()
        equal_thr = float(np.quantile(s, 0.5))
        policy = ThresholdPolicy(lambda X: s, equal_thr, ds.schema.group_feature)
        tf_equal = tf(mock_evaluate(ds, policy))
        grid = quantile_grid(s, g, k=11)
        manifold = sweep_thresholds(ds, lambda X: s, grid)
        best = max(e["tf"] for e in manifold.entries)
        assert best > tf_equal

    def test_manifold_determinism(self, synth_small):
        score = lambda X: X[:, 5]
        grid = quantile_grid(score(synth_small.X), synth_small.groups(), k=5)
        a = sweep_thresholds(synth_small, score, grid, value_model=UNIT)
        b = sweep_thresholds(synth_small, score, grid, value_model=UNIT)
        assert a.to_csv() == b.to_csv()

    def test_undefined_of_kept_with_flag(self, synth_small):
        score = lambda X: X[:, 5]
        s = score(synth_small.X)
        grid = {0: np.array([s.max() + 1]), 1: np.array([s.max() + 1])}
        manifold = sweep_thresholds(synth_small, score, grid)
        e = manifold.entries[0]
        assert e["of"] is None
        assert "of_undefined" in e["flags"]

    def test_treat_rate_monotone_in_threshold(self, synth_small):
        score = lambda X: X[:, 5]
        grid = quantile_grid(score(synth_small.X), synth_small.groups(), k=9)
        manifold = sweep_thresholds(synth_small, score, grid)
        by_t1 = {}
        for e in manifold.entries:
            by_t1.setdefault(e["threshold_0"], []).append(e)
        for entries in by_t1.values():
            rates = [e["treat_rate_1"] for e in sorted(entries, key=lambda e: e["threshold_1"])]
            assert all(b <= a + 1e-12 for a, b in zip(rates, rates[1:]))


class TestRemovalCurve:
    def test_alpha_zero_row_matches_unadjusted_policy(self, synth_small, gam_teacher, audit_gam):
        # the hand-built models reference features 0..2 of the wider dataset
        ds = synth_small
        rows = shape_removal_curve(ds, gam_teacher, gam_teacher, audit_gam,
                                   target=1, alphas=(0.0, 0.5), value_model=UNIT)
        s = gam_teacher.raw(ds.X)
        thr = default_threshold(s, float(ds.T.mean()))
        policy = ThresholdPolicy(lambda X: s, thr, ds.schema.group_feature)
        res = mock_evaluate(ds, policy, value_model=UNIT)
        assert rows[0]["tf"] == pytest.approx(tf(res))
        assert rows[0]["econ_mean"] == pytest.approx(res.econ_mean)

    def test_injected_bias_removed_restores_tf(self):
        ds = generate_synthetic(SyntheticConfig(n=40_000, c=0.0, seed=43))
        gf = ds.schema.group_feature
        base_shapes = [linear_shape(5, 1.0), linear_shape(6, 0.8)]
        group_shape = Shape1D(gf, np.array([0.0, 1.0]), np.array([-0.75, 0.75]))
        clean = hand_built_gam(shapes1=base_shapes, intercept=0.0)
        biased = hand_built_gam(shapes1=base_shapes + [group_shape], intercept=0.0)

        s_clean = clean.raw(ds.X)
        thr = default_threshold(s_clean, float(ds.T.mean()))
        tf_clean = tf(mock_evaluate(ds, ThresholdPolicy(lambda X: s_clean, thr, gf)))

        rows = shape_removal_curve(ds, biased, biased, None, target=gf,
                                   alphas=(0.0, 0.5, 1.0), value_model=UNIT)
        assert rows[0]["tf"] < tf_clean - 5.0  # the injected shape hurts fairness
        assert abs(rows[-1]["tf"] - tf_clean) < 1.0  # full removal restores it
        assert rows[0]["tf"] <= rows[1]["tf"] <= rows[2]["tf"] + 1e-9


class TestPareto:
    def test_single_policy(self):
        ps = pareto(np.array([[1.0, 2.0]]))
        assert ps.frontier == [0]

    def test_mutual_nondomination(self):
        ps = pareto(np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]]))
        assert ps.frontier == [0, 1, 2]

    def test_domination(self):
        ps = pareto(np.array([[1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]))
        assert ps.frontier == [0]

    def test_duplicates_both_survive(self):
        ps = pareto(np.array([[1.0, 1.0], [1.0, 1.0], [0.5, 0.5]]))
        assert ps.frontier == [0, 1]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            pareto(np.zeros((0, 2)))

    def test_matches_brute_force_on_random_sets(self):
        rng = np.random.default_rng(7)
        for trial in range(20):
            n = int(rng.integers(1, 60))
            obj = rng.integers(0, 8, size=(n, 2)).astype(float)  # ties common
            assert pareto(obj).frontier == brute_force_frontier(obj)

    def test_brute_force_on_thousand_policies(self):
        rng = np.random.default_rng(8)
        obj = rng.normal(size=(1000, 2))
        assert pareto(obj).frontier == brute_force_frontier(obj)


@pytest.fixture(scope="module")
def college():
    return generate_college(CollegeConfig(n=30_000, seed=5))


class TestCollegeShadeMetrics:

    def test_accept_no_one_has_zero_parity_gap(self, college):
        out = college_shade_metrics(college, resolution=5, budget=1.0)
        never = [p for p in out["policies"] if p["accept_fraction"] == 0.0]
        assert never
        assert never[0]["treatment_parity_gap"] == 0.0
        assert "predictive_parity_undefined" in never[0]["flags"]

    def test_equal_acceptance_rates_gap_near_zero(self, college):
        out = college_shade_metrics(college, resolution=9, budget=1.0)
        diag = [p for p in out["policies"]
                if p["accept_fraction"] > 0.2]
        gaps = [abs(p["treatment_parity_gap"]) for p in diag]
        assert min(gaps) < 0.02  # quantile-matched thresholds exist in the grid

    def test_budget_filters_policies(self, college):
        out = college_shade_metrics(college, resolution=9, budget=0.4)
        assert all(p["accept_fraction"] <= 0.4 + 1e-9 for p in out["policies"])

    def test_frontier_flags_match_indices(self, college):
        out = college_shade_metrics(college, resolution=7, budget=0.5)
        marked = [k for k, p in enumerate(out["policies"]) if p["on_frontier"]]
        assert marked == out["frontier"]
