"""Post-hoc policy improvement: threshold sweeps and sensitive-shape surgery.

Two levers are explored.  Per-group thresholds trace out a manifold of
(treatment fairness, outcome fairness, economic value) triples; and a
blackbox's learned dependence on a sensitive shape can be attenuated through
its distilled surrogate, either toward zero or toward the audit model's
version of that shape.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .data import ExperimentDataset
from .fairness import (
    MockExperimentResult,
    ThresholdPolicy,
    UndefinedMetricError,
    ValueModel,
    mock_evaluate,
    natural_outcome_result,
    nwo,
    of,
    tf,
)
from .gam import AdditiveModel

__all__ = [
    "ShapeAdjustment",
    "AdjustedScore",
    "adjust_prediction",
    "default_threshold",
    "quantile_grid",
    "PolicyManifold",
    "sweep_thresholds",
    "shape_removal_curve",
    "ParetoSet",
    "pareto",
    "college_shade_metrics",
]

ZERO = "zero"
AUDIT = "audit"


@dataclass(frozen=True)
class ShapeAdjustment:
    """Remove a fraction alpha of one distilled shape, optionally swapping in
    the audit model's shape instead of the zero function."""

    target: int | tuple[int, int]
    alpha: float
    replacement: str = ZERO

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError("alpha must lie in [0, 1]")
        if self.replacement not in (ZERO, AUDIT):
            raise ValueError(f"unknown replacement {self.replacement!r}")
        if isinstance(self.target, list):
            object.__setattr__(self, "target", tuple(self.target))

    def to_dict(self):
        t = list(self.target) if isinstance(self.target, tuple) else self.target
        return {"target": t, "alpha": self.alpha, "replacement": self.replacement}

    @classmethod
    def from_dict(cls, obj):
        t = obj["target"]
        return cls(tuple(t) if isinstance(t, list) else t,
                   obj["alpha"], obj.get("replacement", ZERO))


class AdjustedScore:
    """Teacher raw score with distilled shapes attenuated or swapped.

    adjusted(x) = teacher_raw(x) - sum alpha * f_distilled(x)
                                 + sum alpha * f_replacement(x)
    so the blackbox is only ever modified through its distilled decomposition.
    """

    def __init__(self, teacher, distilled: AdditiveModel, audit: AdditiveModel | None,
                 adjustments: list[ShapeAdjustment]):
        for adj in adjustments:
            distilled.shape_for(adj.target)  # raises on unknown shape ids
            if adj.replacement == AUDIT:
                if audit is None:
                    raise ValueError("audit model required for audit replacement")
                audit.shape_for(adj.target)
        self.teacher = teacher
        self.distilled = distilled
        self.audit = audit
        self.adjustments = list(adjustments)

    def predict_raw(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if hasattr(self.teacher, "predict_raw"):
            out = np.asarray(self.teacher.predict_raw(X), dtype=np.float64).copy()
        elif hasattr(self.teacher, "raw"):
            out = np.asarray(self.teacher.raw(X), dtype=np.float64).copy()
        else:
            out = np.asarray(self.teacher(X), dtype=np.float64).copy()
        for adj in self.adjustments:
            if adj.alpha == 0.0:
                continue
            out -= adj.alpha * self.distilled.eval_shape(adj.target, X)
            if adj.replacement == AUDIT:
                out += adj.alpha * self.audit.eval_shape(adj.target, X)
        return out

    __call__ = predict_raw


def adjust_prediction(teacher, distilled: AdditiveModel, audit: AdditiveModel | None,
                      adjustments: list[ShapeAdjustment], X: np.ndarray) -> np.ndarray:
    """Per-row adjusted raw score for the given shape adjustments."""
    return AdjustedScore(teacher, distilled, audit, adjustments).predict_raw(X)


def default_threshold(scores: np.ndarray, treat_fraction: float) -> float:
    """Cutoff putting ~treat_fraction of the scores at or above it.

    Used as the default operating point: the policy then treats the same
    fraction as the original experiment's treated arm, which keeps reports
    comparable across score adjustments.
    """
    if not (0.0 <= treat_fraction <= 1.0):
        raise ValueError("treat_fraction must lie in [0, 1]")
    s = np.asarray(scores, dtype=np.float64)
    if treat_fraction == 0.0:
        return float(s.max()) + 1.0
    return float(np.quantile(s, 1.0 - treat_fraction))


def quantile_grid(scores: np.ndarray, groups: np.ndarray, k: int = 41) -> dict[int, np.ndarray]:
    """Per-group threshold candidates at evenly spaced quantiles of the score."""
    s = np.asarray(scores, dtype=np.float64)
    g = np.asarray(groups)
    qs = np.linspace(0.0, 1.0, k)
    out = {}
    for grp in (0, 1):
        vals = s[g == grp]
        # q=1 would treat only the max row; shift past it so the corner is treat-none
        thr = np.quantile(vals, qs)
        thr[-1] = vals.max() + 1.0
        out[grp] = thr
    return out


@dataclass
class PolicyManifold:
    """One record per grid point: thresholds, fairness metrics, economics."""

    entries: list[dict]
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["threshold_0", "threshold_1", "treat_rate_0", "treat_rate_1",
                "tf", "of", "nwo", "econ_mean", "econ_se", "flags"]
        writer = csv.writer(buf)
        writer.writerow(cols)
        for e in self.entries:
            writer.writerow([
                repr(e["threshold_0"]), repr(e["threshold_1"]),
                repr(e["treat_rate_0"]), repr(e["treat_rate_1"]),
                "" if e["tf"] is None else repr(e["tf"]),
                "" if e["of"] is None else repr(e["of"]),
                "" if e["nwo"] is None else repr(e["nwo"]),
                "" if e["econ_mean"] is None else repr(e["econ_mean"]),
                "" if e["econ_se"] is None else repr(e["econ_se"]),
                ";".join(e["flags"]),
            ])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"version": 1, "metadata": self.metadata, "entries": self.entries})


def sweep_thresholds(
    ds: ExperimentDataset,
    score,
    grid: dict[int, np.ndarray],
    value_model: ValueModel | None = None,
    benchmark=None,
) -> PolicyManifold:
    """Mock-evaluate a threshold policy at every point of a per-group grid.

    Points with undefined outcome fairness are kept in the manifold with a
    flag rather than dropped.  Entry order is fixed: group-0 threshold major.
    """
    if not len(grid.get(0, ())) or not len(grid.get(1, ())):
        raise ValueError("grid must be nonempty for both groups")
    scores = np.asarray(score(ds.X) if callable(score) else score, dtype=np.float64)
    gf = ds.schema.group_feature
    bench = natural_outcome_result(ds) if benchmark == "never-treat" else benchmark
    entries = []
    for t0 in grid[0]:
        for t1 in grid[1]:
            policy = ThresholdPolicy(lambda X, s=scores: s, {0: t0, 1: t1}, gf)
            res = mock_evaluate(ds, policy, value_model=value_model)
            entry = {
                "threshold_0": float(t0),
                "threshold_1": float(t1),
                "treat_rate_0": res.treat_rate[0],
                "treat_rate_1": res.treat_rate[1],
                "tf": tf(res),
                "of": None,
                "nwo": None,
                "econ_mean": res.econ_mean,
                "econ_se": res.econ_se,
                "flags": sorted(res.flags),
            }
            try:
                entry["of"] = of(res)
            except UndefinedMetricError:
                if "of_undefined" not in entry["flags"]:
                    entry["flags"].append("of_undefined")
            if bench is not None and entry["of"] is not None:
                try:
                    entry["nwo"] = nwo(res, bench)
                except UndefinedMetricError:
                    entry["flags"].append("nwo_undefined")
            entries.append(entry)
    meta = {"grid_sizes": [len(grid[0]), len(grid[1])], "n": ds.n}
    return PolicyManifold(entries=entries, metadata=meta)


def shape_removal_curve(
    ds: ExperimentDataset,
    teacher,
    distilled: AdditiveModel,
    audit: AdditiveModel | None,
    target,
    alphas=(0.0, 0.2, 0.4, 0.6, 0.8, 1.0),
    replacement: str = ZERO,
    value_model: ValueModel | None = None,
) -> list[dict]:
    """TF/OF/economics as a sensitive shape is progressively removed.

    Each alpha rebuilds the adjusted score and operates it at the default
    threshold (same treated fraction as the experiment), so rows in the
    curve differ only through the adjustment.
    """
    rate = float(ds.T.mean())
    gf = ds.schema.group_feature
    rows = []
    for alpha in alphas:
        adj = [ShapeAdjustment(target, float(alpha), replacement)]
        scorer = AdjustedScore(teacher, distilled, audit, adj)
        s = scorer.predict_raw(ds.X)
        thr = default_threshold(s, rate)
        policy = ThresholdPolicy(lambda X, s=s: s, thr, gf)
        res = mock_evaluate(ds, policy, value_model=value_model)
        row = {
            "alpha": float(alpha),
            "tf": tf(res),
            "of": None,
            "econ_mean": res.econ_mean,
            "econ_se": res.econ_se,
            "flags": sorted(res.flags),
        }
        try:
            row["of"] = of(res)
        except UndefinedMetricError:
            pass
        rows.append(row)
    return rows


@dataclass
class ParetoSet:
    """Objective pairs plus the indices of the nondominated policies."""

    objectives: np.ndarray  # (n, 2), both maximized
    frontier: list[int]     # indices into objectives, in input order


def pareto(objectives: np.ndarray) -> ParetoSet:
    """Exact nondominated set for two maximized objectives, stable order.

    A point is dominated if some other point is >= in both coordinates and
    strictly greater in at least one.
    """
    obj = np.asarray(objectives, dtype=np.float64)
    if obj.ndim != 2 or obj.shape[1] != 2 or obj.shape[0] == 0:
        raise ValueError("objectives must be a nonempty (n, 2) array")
    n = obj.shape[0]
    # Sort by first objective desc, second desc; sweep tracking the best second
    # seen in strictly earlier (strictly larger first-objective) tiers.
    order = np.lexsort((-obj[:, 1], -obj[:, 0]))
    dominated = np.zeros(n, dtype=bool)
    best_second = -np.inf
    i = 0
    while i < n:
        j = i
        tier = []
        while j < n and obj[order[j], 0] == obj[order[i], 0]:
            tier.append(order[j])
            j += 1
        tier_best = max(obj[idx, 1] for idx in tier)
        for idx in tier:
            # an earlier tier point with >= second objective dominates (strict first);
            # a same-tier point dominates only with a strictly larger second.
            if obj[idx, 1] <= best_second or obj[idx, 1] < tier_best:
                dominated[idx] = True
        best_second = max(best_second, tier_best)
        i = j
    frontier = [int(k) for k in range(n) if not dominated[k]]
    return ParetoSet(objectives=obj, frontier=frontier)


def college_shade_metrics(
    ds: ExperimentDataset,
    resolution: int = 41,
    budget: float = 1.0,
    score=None,
) -> dict:
    """Sweep per-group admission thresholds and shade each feasible policy.

    The default score is the observed test score.  Policies whose overall
    acceptance fraction exceeds the budget are excluded.  For each feasible
    policy the mock experiment estimates total graduates; minority admits are
    exact counts.  Shading metrics: signed treatment-parity gap (majority
    rate minus minority rate), signed predictive-parity gap (graduation rate
    among admitted, majority minus minority), and no-worse-off versus the
    accept-no-one benchmark.
    """
    gf = ds.schema.group_feature
    g = ds.groups()
    s = np.asarray(score(ds.X) if callable(score) else (
        score if score is not None else ds.X[:, 1 - gf]), dtype=np.float64)
    T = ds.T.astype(bool)
    bench = natural_outcome_result(ds)
    grid = quantile_grid(s, g, k=resolution)
    n = ds.n

    policies = []
    for t0 in grid[0]:
        for t1 in grid[1]:
            cut = np.where(g == 1, t1, t0)
            D = s >= cut
            accept_fraction = float(D.mean())
            if accept_fraction > budget + 1e-12:
                continue
            rate0 = float(D[g == 0].mean())
            rate1 = float(D[g == 1].mean())
            minority_admits = int((D & (g == 1)).sum())

            m1 = D & T
            m0 = ~D & ~T
            mean1 = float(ds.Y[m1].mean()) if m1.any() else 0.0
            mean0 = float(ds.Y[m0].mean()) if m0.any() else 0.0
            graduates = n * (accept_fraction * mean1 + (1 - accept_fraction) * mean0)

            flags = []
            # graduation rate among admitted, estimated from matched treated rows
            adm_grad = {}
            for grp in (0, 1):
                mm = m1 & (g == grp)
                adm_grad[grp] = float(ds.Y[mm].mean()) if mm.any() else None
            if adm_grad[0] is not None and adm_grad[1] is not None:
                pp_gap = adm_grad[0] - adm_grad[1]
            else:
                pp_gap = None
                flags.append("predictive_parity_undefined")

            nwo_v = None
            res = MockExperimentResult(
                treat_rate={0: rate0, 1: rate1},
                outcome_mean=adm_grad,
                matched_treated={0: int((m1 & (g == 0)).sum()), 1: int((m1 & (g == 1)).sum())},
                matched_control={0: int((m0 & (g == 0)).sum()), 1: int((m0 & (g == 1)).sum())},
                group_sizes={0: int((g == 0).sum()), 1: int((g == 1).sum())},
            )
            try:
                nwo_v = nwo(res, bench)
            except UndefinedMetricError:
                flags.append("nwo_undefined")

            policies.append({
                "threshold_0": float(t0),
                "threshold_1": float(t1),
                "accept_fraction": accept_fraction,
                "graduates": float(graduates),
                "minority_admits": minority_admits,
                "treatment_parity_gap": rate0 - rate1,
                "predictive_parity_gap": pp_gap,
                "nwo": nwo_v,
                "flags": flags,
            })

    objectives = np.array([[p["graduates"], p["minority_admits"]] for p in policies])
    front = pareto(objectives)
    for k, p in enumerate(policies):
        p["on_frontier"] = k in set(front.frontier)
    return {"policies": policies, "frontier": front.frontier}
