"""Pairwise feature-interaction scores from secant second differences.

For a feature pair (i, j), a target point x* and a baseline x', the score is
the squared mixed double difference of the model's raw output, scaled by
1/(h_i h_j) with h = x* - x'.  It is zero exactly when the pair enters the
model additively, and equals the squared mixed second derivative for
quadratic models.  Scores are averaged over the two natural context vectors
(x* and x') and over many sampled queries, then ranked to pick the pairs a
bivariate additive model should include.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "InteractionQuery",
    "InteractionScore",
    "InteractionRanking",
    "pairwise_score",
    "average_score",
    "rank_pairs",
    "default_baseline",
]


@dataclass(frozen=True)
class InteractionQuery:
    """A target/baseline pair of covariate vectors sharing one schema."""

    target: np.ndarray
    baseline: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.target, dtype=np.float64)
        b = np.asarray(self.baseline, dtype=np.float64)
        if t.shape != b.shape or t.ndim != 1:
            raise ValueError("target and baseline must be 1D vectors of equal length")
        object.__setattr__(self, "target", t)
        object.__setattr__(self, "baseline", b)

    def h(self, i: int) -> float:
        return float(self.target[i] - self.baseline[i])


@dataclass(frozen=True)
class InteractionScore:
    pair: tuple[int, int]
    score: float


@dataclass
class InteractionRanking:
    scores: list[InteractionScore]  # the top-K entries, descending
    all_scores: list[InteractionScore]  # every defined pair, descending
    draws: int
    undefined_draws: dict[tuple[int, int], int]
    excluded: list[tuple[int, int]] = field(default_factory=list)

    def top(self, k: int | None = None) -> list[tuple[int, int]]:
        return [s.pair for s in (self.scores if k is None else self.all_scores[:k])]

    def to_json(self, feature_names=None) -> str:
        name = (lambda i: feature_names[i]) if feature_names else (lambda i: f"f{i}")
        return json.dumps({
            "version": 1,
            "draws": self.draws,
            "pairs": [
                {
                    "i": s.pair[0],
                    "j": s.pair[1],
                    "name_i": name(s.pair[0]),
                    "name_j": name(s.pair[1]),
                    "mean_score": s.score,
                    "undefined_draws": self.undefined_draws.get(s.pair, 0),
                }
                for s in self.scores
            ],
            "excluded": [list(p) for p in self.excluded],
        })


def _as_raw_fn(f):
    if hasattr(f, "predict_raw"):
        return f.predict_raw
    if hasattr(f, "raw"):
        return f.raw
    return f


def pairwise_score(f, q: InteractionQuery, pair: tuple[int, int], context: np.ndarray) -> float:
    """Squared scaled double difference of the raw output for one pair.

    Raises on a degenerate query (h_i or h_j zero); callers that sweep many
    queries must skip such pairs rather than record a zero.
    """
    raw = _as_raw_fn(f)
    i, j = pair
    hi, hj = q.h(i), q.h(j)
    if hi == 0.0 or hj == 0.0:
        raise ValueError(f"pair ({i}, {j}) has a zero target-baseline gap")
    context = np.asarray(context, dtype=np.float64)
    pts = np.tile(context, (4, 1))
    pts[0, i], pts[0, j] = q.target[i], q.target[j]
    pts[1, i], pts[1, j] = q.baseline[i], q.target[j]
    pts[2, i], pts[2, j] = q.target[i], q.baseline[j]
    pts[3, i], pts[3, j] = q.baseline[i], q.baseline[j]
    v = np.asarray(raw(pts), dtype=np.float64)
    dd = (v[0] - v[1] - v[2] + v[3]) / (hi * hj)
    return float(dd * dd)


def average_score(f, q: InteractionQuery, pair: tuple[int, int]) -> float:
    """Mean of the pair score over the two contexts (target and baseline)."""
    return 0.5 * (pairwise_score(f, q, pair, q.target)
                  + pairwise_score(f, q, pair, q.baseline))


def default_baseline(X: np.ndarray) -> np.ndarray:
    """Feature-wise median for continuous columns, mode for binary ones.

    The all-zeros vector is meaningless for standardized or categorical
    features, so a data-derived reference point is used instead.
    """
    X = np.asarray(X, dtype=np.float64)
    base = np.empty(X.shape[1])
    for jcol in range(X.shape[1]):
        col = X[:, jcol]
        uniq = np.unique(col)
        if len(uniq) <= 2:
            counts = [(col == u).sum() for u in uniq]
            base[jcol] = uniq[int(np.argmax(counts))]
        else:
            base[jcol] = np.median(col)
    return base


def rank_pairs(
    f,
    X_validation: np.ndarray,
    M: int = 50,
    K: int = 10,
    seed: int = 0,
    baseline: str | np.ndarray = "median",
) -> InteractionRanking:
    """Rank all feature pairs by the mean two-context score over M draws.

    Each draw samples a target row from the validation set; the baseline is
    the median/mode point by default, or per-draw sampled rows when
    ``baseline="paired"``.  Pairs whose gap h is zero in a draw are skipped
    for that draw; pairs undefined in every draw are excluded and reported.
    """
    X = np.asarray(X_validation, dtype=np.float64)
    n, d = X.shape
    if M < 1:
        raise ValueError("M must be at least 1")
    pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    if K > len(pairs):
        raise ValueError(f"K={K} exceeds the {len(pairs)} available pairs")
    raw = _as_raw_fn(f)
    rng = np.random.default_rng(seed)

    targets = X[rng.integers(0, n, size=M)]
    if isinstance(baseline, str) and baseline == "median":
        baselines = np.tile(default_baseline(X), (M, 1))
    elif isinstance(baseline, str) and baseline == "paired":
        baselines = X[rng.integers(0, n, size=M)]
    else:
        baselines = np.tile(np.asarray(baseline, dtype=np.float64), (M, 1))

    # One batched evaluation: M draws x 2 contexts x P pairs x 4 corner points.
    P = len(pairs)
    batch, meta = [], []
    for m in range(M):
        xs, xb = targets[m], baselines[m]
        h = xs - xb
        for ctx_id, ctx in ((0, xs), (1, xb)):
            for p, (i, j) in enumerate(pairs):
                if h[i] == 0.0 or h[j] == 0.0:
                    continue
                pts = np.tile(ctx, (4, 1))
                pts[0, i], pts[0, j] = xs[i], xs[j]
                pts[1, i], pts[1, j] = xb[i], xs[j]
                pts[2, i], pts[2, j] = xs[i], xb[j]
                pts[3, i], pts[3, j] = xb[i], xb[j]
                batch.append(pts)
                meta.append((m, ctx_id, p, h[i] * h[j]))
    sums = np.zeros(P)
    defined = np.zeros((M, P), dtype=bool)
    if batch:
        values = np.asarray(raw(np.concatenate(batch, axis=0)), dtype=np.float64)
        values = values.reshape(-1, 4)
        half = np.zeros((M, P))  # per-draw sum over the two contexts
        for (m, _ctx, p, hh), v in zip(meta, values):
            dd = (v[0] - v[1] - v[2] + v[3]) / hh
            half[m, p] += 0.5 * dd * dd
            defined[m, p] = True
        with np.errstate(invalid="ignore"):
            counts = defined.sum(axis=0)
            sums = np.where(counts > 0, half.sum(axis=0) / np.maximum(counts, 1), np.nan)

    undefined_draws = {}
    scores, excluded = [], []
    for p, pair in enumerate(pairs):
        miss = int(M - defined[:, p].sum())
        if miss:
            undefined_draws[pair] = miss
        if miss == M:
            excluded.append(pair)
        else:
            scores.append(InteractionScore(pair, float(sums[p])))
    scores.sort(key=lambda s: (-s.score, s.pair))
    return InteractionRanking(scores=scores[:K], all_scores=scores, draws=M,
                              undefined_draws=undefined_draws, excluded=excluded)
