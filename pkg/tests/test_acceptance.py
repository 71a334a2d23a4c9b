"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line with its measured values.  Expensive artifacts (the per-
correlation model suite) are built once and shared."""

import hashlib
import itertools
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from fairlift.data import (
    CollegeConfig,
    SyntheticConfig,
    generate_college,
    generate_synthetic,
    split,
    synthetic_potential_probs,
    with_group,
)
from fairlift.distill import distill
from fairlift.fairness import (
    ThresholdPolicy,
    ValueModel,
    economic_value,
    mock_evaluate,
    nwo,
    of,
    p_rule,
    tf,
)
from fairlift.gam import Shape1D
from fairlift.improve import (
    college_shade_metrics,
    default_threshold,
    pareto,
    shape_removal_curve,
)
from fairlift.interactions import InteractionQuery, average_score, rank_pairs
from fairlift.models import auc_score, fit_tlearner, ite


CORRELATIONS = (0.0, 0.25, 0.5, 0.75, 1.0)
UNIT_VALUES = ValueModel(1.0, 1.0)

# the four product terms of the outcome formulas, as 0-indexed column pairs:
# (x6,x7), (x10,x11) drive the treated arm; (x5,x7), (x9,x11) the control arm
TRUE_PAIRS = {(5, 6), (9, 10), (4, 6), (8, 10)}


def report(number: int, passed: bool, detail: str):
    print(f"ACCEPTANCE criterion-{number} {'PASS' if passed else 'FAIL'}: {detail}")
    assert passed, detail


@dataclass
class CorrelationRun:
    c: float
    ds: object
    train: object
    audit: object
    test: object
    tl_mlp: object
    tl_gam1: object
    tl_gam2: object
    pairs: list
    mse_mlp: float
    mse_gam1: float
    mse_gam2: float


@pytest.fixture(scope="module")
def table5_suite():
    """MLP + GAM1 + GAM2 T-learners at every correlation level, n=50k."""
    started = time.monotonic()
    runs = []
    for idx, c in enumerate(CORRELATIONS):
        ds = generate_synthetic(SyntheticConfig(n=50_000, c=c, seed=100 + idx))
        train, audit, test = split(ds, (0.6, 0.2, 0.2), seed=1)
        tl_mlp = fit_tlearner(train, kind="mlp", seed=7)
        r0 = rank_pairs(tl_mlp.model0, audit.X, M=50, K=5, seed=5)
        r1 = rank_pairs(tl_mlp.model1, audit.X, M=50, K=5, seed=5)
        pairs = sorted(set(r0.top()) | set(r1.top()))
        tl_gam1 = fit_tlearner(train, kind="gam1", seed=7)
        tl_gam2 = fit_tlearner(train, kind="gam2", hyperparams={"pairs": pairs}, seed=7)
        true = test.true_ite()
        mse = lambda tl: float(np.mean((ite(tl, test.X) - true) ** 2))
        runs.append(CorrelationRun(
            c=c, ds=ds, train=train, audit=audit, test=test,
            tl_mlp=tl_mlp, tl_gam1=tl_gam1, tl_gam2=tl_gam2, pairs=pairs,
            mse_mlp=mse(tl_mlp), mse_gam1=mse(tl_gam1), mse_gam2=mse(tl_gam2),
        ))
    elapsed = time.monotonic() - started
    return runs, elapsed


def test_criterion_1_synthetic_ite_mse_pattern(table5_suite):
    runs, elapsed = table5_suite
    lines = []
    ok = True
    for r in runs:
        ok &= r.mse_gam2 <= 0.02
        ok &= r.mse_gam1 >= 2.0 * r.mse_gam2
        lines.append(f"c={r.c}: gam2={r.mse_gam2:.4f} gam1={r.mse_gam1:.4f} "
                     f"mlp={r.mse_mlp:.4f}")
    ok &= elapsed <= 600.0
    report(1, ok, "; ".join(lines) + f"; elapsed={elapsed:.0f}s (cap 600s)")


def test_criterion_2_interaction_ground_truth():
    hits_per_seed = []
    for seed in range(10):
        ds = generate_synthetic(SyntheticConfig(n=20_000, c=0.5, seed=500 + seed))
        tl = fit_tlearner(ds, kind="mlp", seed=seed)
        r0 = rank_pairs(tl.model0, ds.X, M=50, K=66, seed=seed)
        r1 = rank_pairs(tl.model1, ds.X, M=50, K=66, seed=seed)
        combined = {}
        for s in itertools.chain(r0.all_scores, r1.all_scores):
            combined[s.pair] = combined.get(s.pair, 0.0) + 0.5 * s.score
        top5 = [p for p, _ in sorted(combined.items(), key=lambda kv: (-kv[1], kv[0]))[:5]]
        hits_per_seed.append(len(TRUE_PAIRS & set(top5)))
    good = sum(1 for h in hits_per_seed if h >= 3)
    report(2, good >= 8,
           f"seeds with >=3 of 4 true pairs in top-5: {good}/10 (hits {hits_per_seed})")


def test_criterion_3_interaction_exactness():
    rng = np.random.default_rng(42)
    d = 6
    basis = [np.sin, np.tanh, np.square, lambda v: np.abs(v), lambda v: v]
    worst_additive = 0.0
    for _ in range(100):
        picks = rng.integers(0, len(basis), size=d)
        coefs = rng.normal(size=d)

        def f(pts, picks=picks, coefs=coefs):
            return sum(coefs[k] * basis[picks[k]](pts[:, k]) for k in range(d))

        target = rng.normal(size=d)
        baseline = rng.normal(size=d)
        q = InteractionQuery(target, baseline)
        for i in range(d):
            for j in range(i + 1, d):
                worst_additive = max(worst_additive, abs(average_score(f, q, (i, j))))
    additive_ok = worst_additive < 1e-9

    worst_quad = 0.0
    for _ in range(25):
        A = rng.normal(size=(8, 8))
        A = (A + A.T) / 2

        def f(pts, A=A):
            return np.einsum("ni,ij,nj->n", pts, A, pts)

        q = InteractionQuery(rng.normal(size=8), rng.normal(size=8))
        for i in range(8):
            for j in range(i + 1, 8):
                expected = (2 * A[i, j]) ** 2
                got = average_score(f, q, (i, j))
                denom = max(abs(expected), 1e-12)
                worst_quad = max(worst_quad, abs(got - expected) / denom)
    quad_ok = worst_quad < 1e-9
    report(3, additive_ok and quad_ok,
           f"additive worst score {worst_additive:.2e} (<1e-9); "
           f"quadratic worst rel err {worst_quad:.2e} (<1e-9)")


def test_criterion_4_distillation_fidelity(table5_suite):
    runs, _ = table5_suite
    run = next(r for r in runs if r.c == 0.5)
    self_res = distill(run.tl_gam2.model1, run.audit, K=10, seed=3)
    mlp_res = distill(run.tl_mlp.model1, run.audit, K=10, seed=3)
    ok = self_res.fidelity >= 0.99 and mlp_res.fidelity >= 0.90
    report(4, ok, f"GAM2 self-distillation fidelity {self_res.fidelity:.4f} (>=0.99); "
                  f"MLP-teacher fidelity {mlp_res.fidelity:.4f} (>=0.90, K=10)")


def test_criterion_5_mock_experiment_unbiasedness():
    rng = np.random.default_rng(2024)
    levels = rng.uniform(0.1, 0.9, size=(20, 2))
    vm = ValueModel(10.0, 12.0, cost_treated=1.0)

    def score_fn(X):
        p0, p1 = synthetic_potential_probs(X)
        return p1 - p0

    cells = passes = 0
    for rep in range(100):
        ds = generate_synthetic(SyntheticConfig(n=100_000, c=0.5, seed=3000 + rep))
        s = score_fn(ds.X)
        g = ds.groups()
        treated = ds.T == 1
        for k in range(20):
            thr0 = np.quantile(s[g == 0], levels[k, 0])
            thr1 = np.quantile(s[g == 1], levels[k, 1])
            decisions = s >= np.where(g == 1, thr1, thr0)
            ok = True
            for grp in (0, 1):
                dec = decisions & (g == grp)
                # mock treat rate equals the per-group decision rate exactly
                matched = dec & treated
                truth = ds.Y1[dec].mean()
                est = ds.Y[matched].mean()
                se = ds.Y1[dec].std(ddof=1) / np.sqrt(matched.sum())
                ok &= abs(est - truth) <= 3 * se
            mean, se_e = economic_value(ds, decisions, vm)
            truth_e = float(np.where(decisions, vm.value(1, ds.Y1),
                                     vm.value(0, ds.Y0)).mean())
            ok &= abs(mean - truth_e) <= 3 * se_e
            cells += 1
            passes += ok
    rate = passes / cells
    report(5, rate >= 0.95, f"{passes}/{cells} (policy, seed) cells within 3 SE "
                            f"({100 * rate:.1f}%, need >=95%)")


def test_criterion_6_college_pareto_frontier():
    started = time.monotonic()
    cfg = CollegeConfig(n=50_000, seed=17)
    ds = generate_college(cfg)
    out = college_shade_metrics(ds, resolution=41, budget=cfg.budget)
    elapsed = time.monotonic() - started
    frontier = [out["policies"][k] for k in out["frontier"]]
    tp_ok = any(abs(p["treatment_parity_gap"]) < 0.01 for p in frontier)
    nwo_count = sum(1 for p in frontier if p["nwo"] is not None and p["nwo"] >= 98.0)
    pp_ok = not any(
        p["predictive_parity_gap"] is not None and abs(p["predictive_parity_gap"]) < 0.01
        for p in frontier
    )
    ok = tp_ok and nwo_count >= 5 and pp_ok and elapsed <= 120.0
    report(6, ok, f"frontier size {len(frontier)}; treatment-parity<0.01 on frontier: "
                  f"{tp_ok}; NWO>=98 count {nwo_count} (>=5); no frontier policy with "
                  f"|predictive-parity|<0.01: {pp_ok}; elapsed={elapsed:.0f}s (cap 120s)")


def test_criterion_7_controlled_bias_removal():
    from .conftest import hand_built_gam, linear_shape

    ds = generate_synthetic(SyntheticConfig(n=50_000, c=0.0, seed=71))
    gf = ds.schema.group_feature
    base_shapes = [linear_shape(4, 0.9), linear_shape(6, 0.7), linear_shape(8, 1.1)]
    beta = 0.6
    group_shape = Shape1D(gf, np.array([0.0, 1.0]), np.array([-beta / 2, beta / 2]))
    clean = hand_built_gam(shapes1=base_shapes)
    biased = hand_built_gam(shapes1=base_shapes + [group_shape])

    s_clean = clean.raw(ds.X)
    thr = default_threshold(s_clean, float(ds.T.mean()))
    tf_clean = tf(mock_evaluate(ds, ThresholdPolicy(lambda X, s=s_clean: s, thr, gf)))

    alphas = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
    rows = shape_removal_curve(ds, biased, biased, None, target=gf,
                               alphas=alphas, replacement="zero",
                               value_model=UNIT_VALUES)
    tfs = [r["tf"] for r in rows]
    restore = abs(tfs[-1] - tf_clean)
    rho = float(stats.spearmanr(alphas, tfs).statistic)
    e0, band = rows[0]["econ_mean"], 2 * 1.96 * rows[0]["econ_se"]
    econ_dev = max(abs(r["econ_mean"] - e0) for r in rows)
    ok = restore < 1.0 and rho >= 0.9 and econ_dev <= band
    report(7, ok, f"TF at alpha=1 within {restore:.2f} of clean baseline (<1); "
                  f"spearman(alpha, TF)={rho:.3f} (>=0.9); "
                  f"econ dev {econ_dev:.4f} <= {band:.4f}")


def test_criterion_8_fairness_vs_correlation_trend(table5_suite):
    runs, _ = table5_suite
    tf_x3, tf_x4, of_x4 = {}, {}, {}
    for r in runs:
        scores = ite(r.tl_mlp, r.ds.X)
        thr = default_threshold(scores, float(r.ds.T.mean()))
        res3 = mock_evaluate(r.ds, ThresholdPolicy(
            lambda X, s=scores: s, thr, r.ds.schema.group_feature))
        ds4 = with_group(r.ds, "x4")
        res4 = mock_evaluate(ds4, ThresholdPolicy(
            lambda X, s=scores: s, thr, ds4.schema.group_feature))
        tf_x3[r.c] = tf(res3)
        tf_x4[r.c] = tf(res4)
        of_x4[r.c] = of(res4)
    drop = tf_x3[0.0] - tf_x3[1.0]
    x4_floor = min(min(tf_x4.values()), min(of_x4.values()))
    ok = drop >= 5.0 and x4_floor >= 90.0
    report(8, ok, f"TF_x3 drop c=0->1: {drop:.1f} points (>=5); "
                  f"min TF/OF for x4 across c: {x4_floor:.1f} (>=90)")


def brute_force_frontier(obj):
    out = []
    for i in range(len(obj)):
        if not any(
            obj[j][0] >= obj[i][0] and obj[j][1] >= obj[i][1]
            and (obj[j][0] > obj[i][0] or obj[j][1] > obj[i][1])
            for j in range(len(obj)) if j != i
        ):
            out.append(i)
    return out


def test_criterion_9_metric_unit_suite():
    checks = []
    # p%-rule
    checks.append(p_rule(0.1, 0.1) == 100.0)
    checks.append(abs(p_rule(0.08, 0.10) - 80.0) < 1e-12)
    checks.append(p_rule(0.0, 0.2) == 0.0)
    # NWO clamp via raw ratios
    from .test_fairness import make_result

    checks.append(nwo(make_result((0.5, 0.5), (0.04, 0.10)),
                      make_result((0.5, 0.5), (0.05, 0.10))) == pytest.approx(80.0))
    checks.append(nwo(make_result((0.5, 0.5), (0.06, 0.10)),
                      make_result((0.5, 0.5), (0.05, 0.10))) == 100.0)
    # AUC pairwise oracle
    def brute_auc(y, s):
        pos = [v for v, t in zip(s, y) if t == 1]
        neg = [v for v, t in zip(s, y) if t == 0]
        tot = sum(1.0 if p > q else 0.5 if p == q else 0.0
                  for p in pos for q in neg)
        return tot / (len(pos) * len(neg))

    rng = np.random.default_rng(9)
    auc_ok = auc_score([0, 0, 1, 1], [0.1, 0.4, 0.35, 0.8]) == 0.75
    for _ in range(50):
        y = rng.integers(0, 2, size=25)
        if y.min() == y.max():
            continue
        s = rng.integers(0, 6, size=25).astype(float)
        auc_ok &= abs(auc_score(y, s) - brute_auc(y, s)) < 1e-12
    checks.append(auc_ok)
    # Pareto brute-force equivalence on random policy sets up to 10^3
    pareto_ok = True
    for trial in range(10):
        n = 1000 if trial == 0 else int(rng.integers(2, 400))
        obj = rng.normal(size=(n, 2))
        if trial % 2 == 0:
            obj = obj.round(1)  # force ties
        pareto_ok &= pareto(obj).frontier == brute_force_frontier(obj)
    checks.append(pareto_ok)
    report(9, all(checks),
           f"p-rule/NWO/AUC-oracle/Pareto-brute-force checks: {sum(checks)}/{len(checks)} ok "
           "(full [TRIVIAL] coverage lives in the per-module test files)")


def test_criterion_10_cli_http_determinism(tmp_path):
    from click.testing import CliRunner
    from fastapi.testclient import TestClient

    from fairlift.cli import main
    from fairlift.service import create_app

    runner = CliRunner()

    def run(args):
        res = runner.invoke(main, args, catch_exceptions=False)
        assert res.exit_code == 0, res.output
        return res

    def tree_hash(base: Path):
        return {
            p.relative_to(base).as_posix(): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(base.rglob("*")) if p.is_file()
        }

    gen_args = ["generate", "--kind", "synthetic", "--n", "2000", "--c", "0.5",
                "--seed", "7"]
    run(gen_args + ["--out", str(tmp_path / "a")])
    run(gen_args + ["--out", str(tmp_path / "b")])
    generate_ok = tree_hash(tmp_path / "a") == tree_hash(tmp_path / "b")

    for rep in ("m1", "m2"):
        run(["fit", "--data", str(tmp_path / "a"), "--kind", "mlp", "--epochs", "5",
             "--seed", "3", "--out", str(tmp_path / f"{rep}.json")])
    fit_ok = ((tmp_path / "m1.json").read_bytes() == (tmp_path / "m2.json").read_bytes())

    for rep in ("s1.csv", "s2.csv"):
        run(["sweep", "--data", str(tmp_path / "a"), "--model", str(tmp_path / "m1.json"),
             "--resolution", "4", "--out", str(tmp_path / rep)])
    sweep_ok = ((tmp_path / "s1.csv").read_bytes() == (tmp_path / "s2.csv").read_bytes())

    client = TestClient(create_app())
    resp = client.post("/datasets/generate", json={
        "kind": "synthetic", "config": {"n": 2000, "c": 0.5, "seed": 7},
    }).json()
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    cross_ok = resp["checksum"] == manifest["checksum"]

    ok = generate_ok and fit_ok and sweep_ok and cross_ok
    report(10, ok, f"generate byte-identical: {generate_ok}; fit byte-identical: "
                   f"{fit_ok}; sweep byte-identical: {sweep_ok}; "
                   f"HTTP/CLI checksum agreement: {cross_ok}")
