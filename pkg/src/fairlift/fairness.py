"""Mock-experiment evaluation of decision policies and the fairness metrics.

A decision policy maps covariates to a binary treatment decision.  On
randomized-experiment data, evaluating it on the rows whose actual treatment
matches the decision ("the mock experiment") gives unbiased estimates of
what deploying the policy would do.  Treatment and outcome fairness are the
two-group ratio rule applied to per-group treat rates and treated-outcome
means; no-worse-off compares outcome fairness against a benchmark policy,
capped at 100%.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import ExperimentDataset

__all__ = [
    "UndefinedMetricError",
    "ValueModel",
    "BLOOD_DONATION_VALUES",
    "REFERRAL_VALUES",
    "DecisionPolicy",
    "ThresholdPolicy",
    "ConstantPolicy",
    "MockExperimentResult",
    "FairnessReport",
    "p_rule",
    "mock_evaluate",
    "tf",
    "of",
    "nwo",
    "economic_value",
    "natural_outcome_result",
    "evaluate_policy",
]


class UndefinedMetricError(ValueError):
    """A metric's defining ratio is 0/0 or a required subset is empty."""


@dataclass(frozen=True)
class ValueModel:
    """Per-person currency value of an (treatment, outcome) cell.

    value = unit_value * outcome - cost, with treated/control variants.
    """

    outcome_value_treated: float
    outcome_value_control: float
    cost_treated: float = 0.0
    cost_control: float = 0.0
    currency: str = ""

    def value(self, treated: bool | int, y: np.ndarray | float):
        if treated:
            return self.outcome_value_treated * np.asarray(y, dtype=np.float64) - self.cost_treated
        return self.outcome_value_control * np.asarray(y, dtype=np.float64) - self.cost_control

    def to_dict(self):
        return {
            "outcome_value_treated": self.outcome_value_treated,
            "outcome_value_control": self.outcome_value_control,
            "cost_treated": self.cost_treated,
            "cost_control": self.cost_control,
            "currency": self.currency,
        }

    @classmethod
    def from_dict(cls, obj):
        return cls(**obj)


# A 200ml donation is valued at 220 RMB, the coupon costs 40 RMB and is only
# redeemed by donors, the invitation message costs 1 RMB.
BLOOD_DONATION_VALUES = ValueModel(
    outcome_value_treated=220.0 - 40.0,
    outcome_value_control=220.0,
    cost_treated=1.0,
    currency="RMB",
)

# Average gain per referral: $3.93 untreated, $3.72 when a gift was offered.
REFERRAL_VALUES = ValueModel(
    outcome_value_treated=3.72,
    outcome_value_control=3.93,
    currency="USD",
)

UNIT_VALUES = ValueModel(1.0, 1.0)


class DecisionPolicy:
    """Maps covariates to a binary decision; never reads T or Y."""

    def decide(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": type(self).__name__}


class ThresholdPolicy(DecisionPolicy):
    """decide(x) = 1 iff score(x) >= threshold[group(x)].

    ``thresholds`` maps each group value (0/1) of the audited sensitive
    feature to its own cutoff; a single float applies to both groups.
    """

    def __init__(self, score, thresholds, group_feature: int):
        self.score = score
        if isinstance(thresholds, (int, float)):
            thresholds = {0: float(thresholds), 1: float(thresholds)}
        self.thresholds = {int(g): float(t) for g, t in thresholds.items()}
        self.group_feature = group_feature

    def decide(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        s = np.asarray(self.score(X), dtype=np.float64)
        g = X[:, self.group_feature].astype(np.int64)
        cut = np.empty(len(s))
        for v in np.unique(g):
            cut[g == v] = self.thresholds.get(int(v), np.inf)
        return (s >= cut).astype(np.int8)

    def describe(self) -> dict:
        return {"kind": "threshold", "thresholds": dict(self.thresholds),
                "group_feature": self.group_feature}


class ConstantPolicy(DecisionPolicy):
    def __init__(self, decision: int):
        self.decision = int(decision)

    def decide(self, X: np.ndarray) -> np.ndarray:
        return np.full(np.asarray(X).shape[0], self.decision, dtype=np.int8)

    def describe(self) -> dict:
        return {"kind": "constant", "decision": self.decision}


@dataclass
class MockExperimentResult:
    """Per-group statistics of one policy evaluated by the mock experiment."""

    treat_rate: dict[int, float]
    outcome_mean: dict[int, float | None]
    matched_treated: dict[int, int]
    matched_control: dict[int, int]
    group_sizes: dict[int, int]
    econ_mean: float | None = None
    econ_se: float | None = None
    flags: set[str] = field(default_factory=set)


def p_rule(a: float, b: float) -> float:
    """100 * min(a, b) / max(a, b); undefined at 0/0."""
    if a < 0 or b < 0:
        raise ValueError("p_rule arguments must be nonnegative")
    if a == 0 and b == 0:
        raise UndefinedMetricError("p_rule undefined for (0, 0)")
    # ratio first: min/max <= 1.0 exactly, so the result never exceeds 100
    return 100.0 * (min(a, b) / max(a, b))


def economic_value(ds: ExperimentDataset, decisions: np.ndarray, value_model: ValueModel):
    """Per-person value of a policy from its mock-experiment matched subset.

    Matched treated rows are valued under the treated model and matched
    control rows under the control model, weighted by the policy's own
    treat/no-treat proportions; the standard error combines both strata.
    """
    D = np.asarray(decisions).astype(bool)
    T = ds.T.astype(bool)
    m1 = D & T
    m0 = ~D & ~T
    w1 = float(D.mean())
    parts = []
    if w1 > 0:
        if not m1.any():
            raise UndefinedMetricError("no matched treated rows")
        v = value_model.value(1, ds.Y[m1])
        parts.append((w1, float(v.mean()), float(v.std(ddof=1)) if len(v) > 1 else 0.0, len(v)))
    if w1 < 1:
        if not m0.any():
            raise UndefinedMetricError("no matched control rows")
        v = value_model.value(0, ds.Y[m0])
        parts.append((1 - w1, float(v.mean()), float(v.std(ddof=1)) if len(v) > 1 else 0.0, len(v)))
    mean = sum(w * m for w, m, _, _ in parts)
    var = sum(w * w * s * s / k for w, _, s, k in parts)
    return float(mean), float(np.sqrt(var))


def mock_evaluate(
    ds: ExperimentDataset,
    policy: DecisionPolicy,
    value_model: ValueModel | None = None,
) -> MockExperimentResult:
    """Evaluate a policy on the rows whose actual treatment matches it.

    Randomized assignment makes the matched subset an unbiased sample, so
    per-group treat rates, treated-outcome means, and economic value estimate
    the policy's deployment behavior.
    """
    D = np.asarray(policy.decide(ds.X)).astype(bool)
    g = ds.groups()
    T = ds.T.astype(bool)
    result = MockExperimentResult({}, {}, {}, {}, {})
    for grp in (0, 1):
        mask = g == grp
        if not mask.any():
            raise ValueError(f"group {grp} is empty")
        result.group_sizes[grp] = int(mask.sum())
        result.treat_rate[grp] = float(D[mask].mean())
        mt = mask & D & T
        mc = mask & ~D & ~T
        result.matched_treated[grp] = int(mt.sum())
        result.matched_control[grp] = int(mc.sum())
        if mt.any():
            result.outcome_mean[grp] = float(ds.Y[mt].mean())
        else:
            result.outcome_mean[grp] = None
            result.flags.add(f"outcome_undefined_group_{grp}")
    if value_model is not None:
        try:
            result.econ_mean, result.econ_se = economic_value(ds, D, value_model)
        except UndefinedMetricError:
            result.flags.add("econ_undefined")
    return result


def tf(result: MockExperimentResult) -> float:
    """Treatment fairness: ratio rule on the two groups' treat rates.

    Both rates zero means the groups are treated identically, so 100.
    """
    a, b = result.treat_rate[0], result.treat_rate[1]
    if a == 0 and b == 0:
        return 100.0
    return p_rule(a, b)


def of(result: MockExperimentResult) -> float:
    """Outcome fairness: ratio rule on per-group treated-outcome means."""
    a, b = result.outcome_mean[0], result.outcome_mean[1]
    if a is None or b is None:
        raise UndefinedMetricError("outcome mean undefined for a group")
    return p_rule(a, b)


def nwo(result_b: MockExperimentResult, result_a: MockExperimentResult) -> float:
    """No-worse-off: min(OF_B / OF_A, 100%)."""
    of_b = of(result_b)
    of_a = of(result_a)
    if of_a == 0:
        raise UndefinedMetricError("benchmark outcome fairness is zero")
    return min(of_b / of_a, 1.0) * 100.0


def natural_outcome_result(ds: ExperimentDataset) -> MockExperimentResult:
    """The never-treat benchmark: per-group natural outcomes from the control arm."""
    g = ds.groups()
    T = ds.T.astype(bool)
    result = MockExperimentResult({}, {}, {}, {}, {})
    for grp in (0, 1):
        mask = (g == grp) & ~T
        result.group_sizes[grp] = int((g == grp).sum())
        result.treat_rate[grp] = 0.0
        result.matched_treated[grp] = 0
        result.matched_control[grp] = int(mask.sum())
        result.outcome_mean[grp] = float(ds.Y[mask].mean()) if mask.any() else None
    return result


@dataclass
class FairnessReport:
    """TF/OF/NWO percentages, economic value with uncertainty, diagnostics.

    Undefined metrics are None with a matching flag; they are never encoded
    as 0 or 100.
    """

    tf: float | None
    of: float | None
    nwo: float | None
    econ_mean: float | None
    econ_se: float | None
    flags: list[str]
    diagnostics: dict

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "tf": self.tf,
            "of": self.of,
            "nwo": self.nwo,
            "econ_mean": self.econ_mean,
            "econ_se": self.econ_se,
            "econ_ci95": (
                None if self.econ_mean is None
                else [self.econ_mean - 1.96 * self.econ_se, self.econ_mean + 1.96 * self.econ_se]
            ),
            "flags": sorted(self.flags),
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def evaluate_policy(
    ds: ExperimentDataset,
    policy: DecisionPolicy,
    value_model: ValueModel | None = None,
    benchmark: MockExperimentResult | str | None = "never-treat",
) -> FairnessReport:
    """Full fairness report for one policy: TF, OF, NWO vs benchmark, economics."""
    result = mock_evaluate(ds, policy, value_model=value_model)
    flags = sorted(result.flags)
    tf_v: float | None = tf(result)
    try:
        of_v = of(result)
    except UndefinedMetricError:
        of_v = None
        if "of_undefined" not in flags:
            flags.append("of_undefined")
    nwo_v = None
    if benchmark is not None:
        bench = natural_outcome_result(ds) if benchmark == "never-treat" else benchmark
        try:
            nwo_v = nwo(result, bench)
        except UndefinedMetricError:
            flags.append("nwo_undefined")
    diagnostics = {
        "treat_rate": {str(k): v for k, v in result.treat_rate.items()},
        "outcome_mean": {str(k): v for k, v in result.outcome_mean.items()},
        "matched_treated": {str(k): v for k, v in result.matched_treated.items()},
        "matched_control": {str(k): v for k, v in result.matched_control.items()},
        "group_sizes": {str(k): v for k, v in result.group_sizes.items()},
        "policy": policy.describe(),
    }
    return FairnessReport(
        tf=tf_v, of=of_v, nwo=nwo_v,
        econ_mean=result.econ_mean, econ_se=result.econ_se,
        flags=sorted(set(flags)), diagnostics=diagnostics,
    )
