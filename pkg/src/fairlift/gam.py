"""Additive models with trainable univariate and bivariate shape functions.

Shapes are piecewise-linear knot vectors (1D) and bilinear grids (2D) placed
at empirical quantiles of the fitting data.  All shapes plus the intercept
are optimized jointly with AdaGrad; the model is linear in its parameters,
so the training objective is convex and the fitted decomposition is made
unique by marginal purification (2D shapes transfer their per-axis means to
the 1D shapes) followed by mean-centering into the intercept.

Bivariate axis knots are a subset of the univariate knots, which makes the
purification transfer exact: the model's raw output is unchanged bit-for-bit
up to float addition.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Shape1D",
    "Shape2D",
    "AdditiveModel",
    "GamHyperparams",
    "GamPredictor",
    "VarianceAttribution",
    "fit_gam",
    "predict_gam",
    "variance_attribution",
    "export_shapes",
    "import_shapes",
]

LOGIT = "logit"
IDENTITY = "identity"

KNOTS_1D = 32
KNOTS_2D = 16


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


@dataclass
class GamHyperparams:
    lr: float = 0.1
    epochs: int = 300
    batch: int = 512
    l2: float = 1e-4
    smoothness: float = 1e-3


@dataclass
class Shape1D:
    """Piecewise-linear function of one feature; constant beyond the knots."""

    feature: int
    knots: np.ndarray
    values: np.ndarray

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=np.float64), self.knots, self.values)


@dataclass
class Shape2D:
    """Bilinear grid over a feature pair (i < j); clamped beyond the knots."""

    features: tuple[int, int]
    knots_i: np.ndarray
    knots_j: np.ndarray
    grid: np.ndarray  # (len(knots_i), len(knots_j))

    def __call__(self, xi: np.ndarray, xj: np.ndarray) -> np.ndarray:
        ai, wi = _locate(np.asarray(xi, dtype=np.float64), self.knots_i)
        aj, wj = _locate(np.asarray(xj, dtype=np.float64), self.knots_j)
        bi = ai + (1 if len(self.knots_i) > 1 else 0)
        bj = aj + (1 if len(self.knots_j) > 1 else 0)
        g = self.grid
        return ((1 - wi) * (1 - wj) * g[ai, aj] + (1 - wi) * wj * g[ai, bj]
                + wi * (1 - wj) * g[bi, aj] + wi * wj * g[bi, bj])


@dataclass
class Histogram:
    feature: int
    edges: np.ndarray
    counts: np.ndarray


@dataclass
class AdditiveModel:
    """Intercept + sum of 1D shapes + sum of selected 2D shapes, through a link."""

    intercept: float
    shapes1: list[Shape1D]
    shapes2: list[Shape2D]
    link: str = LOGIT
    feature_names: list[str] | None = None
    density: list[Histogram] = field(default_factory=list)
    train_loss_: float | None = None

    def __post_init__(self):
        pairs = [s.features for s in self.shapes2]
        if len(set(pairs)) != len(pairs):
            raise ValueError("duplicate feature pairs in shapes2")
        for i, j in pairs:
            if not i < j:
                raise ValueError("2D shape features must be ordered i < j")

    def raw(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("X must be a 2D matrix")
        needed = max(
            [s.feature for s in self.shapes1] + [j for _, j in (s.features for s in self.shapes2)],
            default=-1,
        )
        if X.shape[1] <= needed:
            raise ValueError(f"X has {X.shape[1]} columns; model references feature {needed}")
        out = np.full(X.shape[0], self.intercept, dtype=np.float64)
        for s in self.shapes1:
            out += s(X[:, s.feature])
        for s in self.shapes2:
            i, j = s.features
            out += s(X[:, i], X[:, j])
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        raw = self.raw(X)
        return _sigmoid(raw) if self.link == LOGIT else raw

    def shape_for(self, target) -> Shape1D | Shape2D:
        """Look up a shape by feature index or (i, j) pair."""
        if isinstance(target, (tuple, list)):
            key = (min(target), max(target))
            for s in self.shapes2:
                if s.features == key:
                    return s
            raise KeyError(f"no 2D shape for pair {key}")
        for s in self.shapes1:
            if s.feature == target:
                return s
        raise KeyError(f"no 1D shape for feature {target}")

    def eval_shape(self, target, X: np.ndarray) -> np.ndarray:
        s = self.shape_for(target)
        X = np.asarray(X, dtype=np.float64)
        if isinstance(s, Shape1D):
            return s(X[:, s.feature])
        i, j = s.features
        return s(X[:, i], X[:, j])


# -- knot placement and interpolation -----------------------------------------


def _quantile_knots(x: np.ndarray, b: int) -> np.ndarray:
    """Quantile-placed knots, deduplicated.

    Discrete columns (few unique values) get one knot per level.  Continuous
    columns use quantiles with the extreme 1% trimmed off each end so no
    segment is data-starved; the shape extrapolates as a constant beyond.
    """
    uniq = np.unique(x)
    if len(uniq) <= b:
        return uniq
    qs = np.linspace(0.01, 0.99, b)
    return np.unique(np.quantile(x, qs))


def _subknots(knots: np.ndarray, b: int) -> np.ndarray:
    """At most ``b`` knots picked from an existing vector, endpoints included."""
    if len(knots) <= b:
        return knots
    idx = np.unique(np.round(np.linspace(0, len(knots) - 1, b)).astype(int))
    return knots[idx]


def _locate(x: np.ndarray, knots: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Segment index and within-segment weight; clamped for extrapolation."""
    b = len(knots)
    if b == 1:
        return np.zeros(len(x), dtype=np.int64), np.zeros(len(x))
    idx = np.clip(np.searchsorted(knots, x, side="right") - 1, 0, b - 2)
    width = knots[idx + 1] - knots[idx]
    w = np.clip((x - knots[idx]) / width, 0.0, 1.0)
    return idx, w


class _Design:
    """Precomputed interpolation indices/weights for a fixed dataset.

    Parameters live in one flat vector: first all 1D knot values
    (feature-major), then all 2D grids (row-major).  The raw score of a row
    is the intercept plus a weighted gather over this vector, so the data
    gradient is a single scatter-add (bincount).
    """

    def __init__(self, X, pairs, knots1, knots2_axes):
        n, d = X.shape
        self.n, self.d = n, d
        self.pairs = pairs
        self.knots1 = knots1
        self.knots2_axes = knots2_axes  # per pair: (knots_i, knots_j)

        self.off1 = np.zeros(d, dtype=np.int64)
        pos = 0
        for f in range(d):
            self.off1[f] = pos
            pos += len(knots1[f])
        self.n1 = pos
        self.off2 = np.zeros(len(pairs), dtype=np.int64)
        for p, (ki, kj) in enumerate(knots2_axes):
            self.off2[p] = pos
            pos += len(ki) * len(kj)
        self.n_params = pos

        idx_a = np.empty((n, d), dtype=np.int64)
        idx_b = np.empty((n, d), dtype=np.int64)
        w = np.empty((n, d))
        for f in range(d):
            k = knots1[f]
            a, wf = _locate(X[:, f], k)
            idx_a[:, f] = self.off1[f] + a
            idx_b[:, f] = idx_a[:, f] + (1 if len(k) > 1 else 0)
            w[:, f] = wf
        self.g1_idx = np.concatenate([idx_a, idx_b], axis=1)
        self.g1_w = np.concatenate([1.0 - w, w], axis=1)

        corner_idx, corner_w = [], []
        for p, (i, j) in enumerate(pairs):
            ki, kj = knots2_axes[p]
            ai, wi = _locate(X[:, i], ki)
            aj, wj = _locate(X[:, j], kj)
            bi = ai + (1 if len(ki) > 1 else 0)
            bj = aj + (1 if len(kj) > 1 else 0)
            base = self.off2[p]
            bj_len = len(kj)
            corner_idx.append(np.stack([
                base + ai * bj_len + aj,
                base + ai * bj_len + bj,
                base + bi * bj_len + aj,
                base + bi * bj_len + bj,
            ], axis=1))
            corner_w.append(np.stack([
                (1 - wi) * (1 - wj), (1 - wi) * wj, wi * (1 - wj), wi * wj,
            ], axis=1))
        if pairs:
            self.g2_idx = np.concatenate(corner_idx, axis=1)
            self.g2_w = np.concatenate(corner_w, axis=1)
        else:
            self.g2_idx = np.empty((n, 0), dtype=np.int64)
            self.g2_w = np.empty((n, 0))
        self.gather_idx = np.concatenate([self.g1_idx, self.g2_idx], axis=1)
        self.gather_w = np.concatenate([self.g1_w, self.g2_w], axis=1)

        self.inv_h1 = [
            1.0 / np.diff(k) if len(k) > 1 else np.empty(0) for k in knots1
        ]
        self.inv_h2 = [
            (
                1.0 / np.diff(ki) if len(ki) > 1 else np.empty(0),
                1.0 / np.diff(kj) if len(kj) > 1 else np.empty(0),
            )
            for ki, kj in knots2_axes
        ]

    def raw(self, theta, intercept, rows=None):
        gi = self.gather_idx if rows is None else self.gather_idx[rows]
        gw = self.gather_w if rows is None else self.gather_w[rows]
        return intercept + (theta[gi] * gw).sum(axis=1)

    def scatter_grad(self, gz, rows):
        gi = self.gather_idx[rows]
        gw = self.gather_w[rows]
        return np.bincount(gi.ravel(), weights=(gz[:, None] * gw).ravel(),
                           minlength=self.n_params)

    def shape_means(self, theta) -> tuple[np.ndarray, np.ndarray]:
        """Training-set mean output of every 1D and 2D shape."""
        d, P = self.d, len(self.pairs)
        means1 = np.empty(d)
        for f in range(d):
            cols = [f, d + f]
            means1[f] = (theta[self.g1_idx[:, cols]] * self.g1_w[:, cols]).sum(axis=1).mean()
        means2 = np.empty(P)
        for p in range(P):
            cols = slice(4 * p, 4 * p + 4)
            means2[p] = (theta[self.g2_idx[:, cols]] * self.g2_w[:, cols]).sum(axis=1).mean()
        return means1, means2

    def grid_mass(self, p: int) -> np.ndarray:
        """Total bilinear corner mass each grid node receives from the data."""
        ki, kj = self.knots2_axes[p]
        size = len(ki) * len(kj)
        cols = slice(4 * p, 4 * p + 4)
        local = self.g2_idx[:, cols] - self.off2[p]
        return np.bincount(local.ravel(), weights=self.g2_w[:, cols].ravel(),
                           minlength=size).reshape(len(ki), len(kj))


def _curvature(v, inv_h, pen_grad, mu, axis=None):
    """Squared discrete second derivative of knot values, spacing-aware.

    Plain second differences would penalize linear shapes at unevenly spaced
    quantile knots; dividing by the knot gaps makes the penalty vanish on any
    linear function.  Accumulates the gradient in-place, returns the penalty.
    """
    if axis == 0:
        slopes = (v[1:] - v[:-1]) * inv_h[:, None]
        dd = slopes[1:] - slopes[:-1]
        pen_grad[2:] += 2 * mu * dd * inv_h[1:, None]
        pen_grad[1:-1] -= 2 * mu * dd * (inv_h[1:] + inv_h[:-1])[:, None]
        pen_grad[:-2] += 2 * mu * dd * inv_h[:-1, None]
    else:
        slopes = (v[..., 1:] - v[..., :-1]) * inv_h
        dd = slopes[..., 1:] - slopes[..., :-1]
        pen_grad[..., 2:] += 2 * mu * dd * inv_h[1:]
        pen_grad[..., 1:-1] -= 2 * mu * dd * (inv_h[1:] + inv_h[:-1])
        pen_grad[..., :-2] += 2 * mu * dd * inv_h[:-1]
    return mu * float((dd * dd).sum())


def _penalty_and_grad(theta, design, hp):
    """L2 on knot values plus curvature smoothness along every shape axis."""
    pen = hp.l2 * float(theta @ theta)
    grad = 2.0 * hp.l2 * theta
    mu = hp.smoothness
    if mu > 0:
        for f in range(design.d):
            b = len(design.knots1[f])
            if b < 3:
                continue
            v = theta[design.off1[f] : design.off1[f] + b]
            g = grad[design.off1[f] : design.off1[f] + b]
            pen += _curvature(v, design.inv_h1[f], g, mu)
        for p in range(len(design.pairs)):
            ki, kj = design.knots2_axes[p]
            bi, bj = len(ki), len(kj)
            off = design.off2[p]
            G = theta[off : off + bi * bj].reshape(bi, bj)
            Gg = grad[off : off + bi * bj].reshape(bi, bj)
            inv_hi, inv_hj = design.inv_h2[p]
            if bi >= 3:
                pen += _curvature(G, inv_hi, Gg, mu, axis=0)
            if bj >= 3:
                pen += _curvature(G, inv_hj, Gg, mu)
    return pen, grad


def _data_loss_grad(raw, y, link):
    if link == LOGIT:
        p = _sigmoid(raw)
        eps = 1e-12
        loss = -np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps))
        return float(loss), (p - y) / len(y)
    r = raw - y
    return float(np.mean(r * r)), 2.0 * r / len(y)


def _training_loss(theta, intercept, design, y, link, hp, rows=None):
    """Batch data loss plus penalties; the quantity the gradient check probes."""
    raw = design.raw(theta, intercept, rows)
    yb = y if rows is None else y[rows]
    loss, _ = _data_loss_grad(raw, yb, link)
    pen, _ = _penalty_and_grad(theta, design, hp)
    return loss + pen


def _training_grad(theta, intercept, design, y, link, hp, rows):
    raw = design.raw(theta, intercept, rows)
    _, gz = _data_loss_grad(raw, y[rows], link)
    grad = design.scatter_grad(gz, rows)
    _, gpen = _penalty_and_grad(theta, design, hp)
    return grad + gpen, float(gz.sum())


def _purify(theta, design, max_sweeps=500, tol=1e-12):
    """Zero every 2D shape's per-axis data-weighted conditional means.

    Returns per-pair transfer vectors for both axes; adding the transfers to
    the matching 1D shapes reproduces the original raw scores exactly because
    2D axis knots are a subset of the 1D knots.
    """
    transfers = []
    for p in range(len(design.pairs)):
        ki, kj = design.knots2_axes[p]
        bi, bj = len(ki), len(kj)
        off = design.off2[p]
        G = theta[off : off + bi * bj].reshape(bi, bj)
        M = design.grid_mass(p)
        row_mass = M.sum(axis=1)
        col_mass = M.sum(axis=0)
        rows_ok = row_mass > 0
        cols_ok = col_mass > 0
        ti = np.zeros(bi)
        tj = np.zeros(bj)
        for _ in range(max_sweeps):
            mu_i = np.zeros(bi)
            mu_i[rows_ok] = (M * G).sum(axis=1)[rows_ok] / row_mass[rows_ok]
            G -= mu_i[:, None]
            ti += mu_i
            mu_j = np.zeros(bj)
            mu_j[cols_ok] = (M * G).sum(axis=0)[cols_ok] / col_mass[cols_ok]
            G -= mu_j[None, :]
            tj += mu_j
            if max(np.abs(mu_i).max(initial=0.0), np.abs(mu_j).max(initial=0.0)) < tol:
                break
        transfers.append((ti, tj))
    return transfers


def fit_gam(
    X: np.ndarray,
    y: np.ndarray,
    pairs: list[tuple[int, int]] | tuple = (),
    link: str = LOGIT,
    hyperparams: GamHyperparams | None = None,
    seed: int = 0,
    feature_names: list[str] | None = None,
) -> AdditiveModel:
    """Jointly fit intercept, all 1D shapes, and the given 2D pair shapes.

    ``y`` is the training target: observed outcomes for an audit fit (logit
    link) or a teacher's raw scores for a distillation fit (identity link).
    Pairs touching a constant feature are dropped with a warning.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("X must be a nonempty (n, d) matrix")
    if y.shape != (X.shape[0],):
        raise ValueError("y must have one entry per row of X")
    if link not in (LOGIT, IDENTITY):
        raise ValueError(f"unknown link {link!r}")
    hp = hyperparams or GamHyperparams()
    n, d = X.shape

    knots1 = [_quantile_knots(X[:, f], KNOTS_1D) for f in range(d)]
    clean_pairs = []
    for i, j in pairs:
        i, j = int(min(i, j)), int(max(i, j))
        if i == j or not (0 <= i < d and 0 <= j < d):
            raise ValueError(f"invalid feature pair ({i}, {j})")
        if len(knots1[i]) < 2 or len(knots1[j]) < 2:
            warnings.warn(f"dropping pair ({i}, {j}): constant feature")
            continue
        if (i, j) not in clean_pairs:
            clean_pairs.append((i, j))
    knots2_axes = [
        (_subknots(knots1[i], KNOTS_2D), _subknots(knots1[j], KNOTS_2D))
        for i, j in clean_pairs
    ]

    design = _Design(X, clean_pairs, knots1, knots2_axes)
    theta = np.zeros(design.n_params)
    if link == LOGIT:
        p_bar = float(np.clip(y.mean(), 1e-6, 1 - 1e-6))
        intercept = float(np.log(p_bar / (1 - p_bar)))
    else:
        intercept = float(y.mean())

    rng = np.random.default_rng(seed)
    acc = np.zeros_like(theta)
    acc0 = 0.0
    eps = 1e-10
    for _ in range(hp.epochs):
        order = rng.permutation(n)
        for start in range(0, n, hp.batch):
            rows = order[start : start + hp.batch]
            grad, g0 = _training_grad(theta, intercept, design, y, link, hp, rows)
            acc += grad * grad
            acc0 += g0 * g0
            theta -= hp.lr * grad / np.sqrt(acc + eps)
            intercept -= hp.lr * g0 / np.sqrt(acc0 + eps)

    # Unique decomposition: purify 2D shapes into 1D, then center into intercept.
    transfers = _purify(theta, design)
    for p, (i, j) in enumerate(clean_pairs):
        ki, kj = knots2_axes[p]
        ti, tj = transfers[p]
        vi = theta[design.off1[i] : design.off1[i] + len(knots1[i])]
        vi += np.interp(knots1[i], ki, ti)
        vj = theta[design.off1[j] : design.off1[j] + len(knots1[j])]
        vj += np.interp(knots1[j], kj, tj)
    means1, means2 = design.shape_means(theta)
    for f in range(d):
        theta[design.off1[f] : design.off1[f] + len(knots1[f])] -= means1[f]
    for p in range(len(clean_pairs)):
        ki, kj = knots2_axes[p]
        theta[design.off2[p] : design.off2[p] + len(ki) * len(kj)] -= means2[p]
    intercept += float(means1.sum() + means2.sum())

    shapes1 = [
        Shape1D(f, knots1[f], theta[design.off1[f] : design.off1[f] + len(knots1[f])].copy())
        for f in range(d)
    ]
    shapes2 = []
    for p, (i, j) in enumerate(clean_pairs):
        ki, kj = knots2_axes[p]
        grid = theta[design.off2[p] : design.off2[p] + len(ki) * len(kj)].reshape(len(ki), len(kj))
        shapes2.append(Shape2D((i, j), ki, kj, grid.copy()))

    density = []
    for f in range(d):
        uniq = np.unique(X[:, f])
        bins = min(KNOTS_1D, len(uniq)) if len(uniq) > 1 else 1
        counts, edges = np.histogram(X[:, f], bins=bins)
        density.append(Histogram(f, edges, counts))

    model = AdditiveModel(
        intercept=float(intercept),
        shapes1=shapes1,
        shapes2=shapes2,
        link=link,
        feature_names=list(feature_names) if feature_names else None,
        density=density,
    )
    model.train_loss_ = _training_loss(theta, intercept, design, y, link, hp)
    return model


def predict_gam(m: AdditiveModel, X: np.ndarray) -> np.ndarray:
    """Link-inverse of the additive raw score, per row."""
    return m.predict(X)


def marginal_purity(m: AdditiveModel, X: np.ndarray) -> float:
    """Worst data-weighted per-axis conditional mean over all 2D shapes.

    Uses the same node-mass estimator the fitter purifies with, so a freshly
    fitted model reports ~0: 2D shapes carry no 1D effect.
    """
    X = np.asarray(X, dtype=np.float64)
    worst = 0.0
    for s in m.shapes2:
        i, j = s.features
        ai, wi = _locate(X[:, i], s.knots_i)
        aj, wj = _locate(X[:, j], s.knots_j)
        bi = ai + (1 if len(s.knots_i) > 1 else 0)
        bj = aj + (1 if len(s.knots_j) > 1 else 0)
        size_i, size_j = len(s.knots_i), len(s.knots_j)
        M = np.zeros((size_i, size_j))
        for a, b, w in (
            (ai, aj, (1 - wi) * (1 - wj)),
            (ai, bj, (1 - wi) * wj),
            (bi, aj, wi * (1 - wj)),
            (bi, bj, wi * wj),
        ):
            np.add.at(M, (a, b), w)
        row_mass = M.sum(axis=1)
        col_mass = M.sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            mu_i = np.where(row_mass > 0, (M * s.grid).sum(axis=1) / row_mass, 0.0)
            mu_j = np.where(col_mass > 0, (M * s.grid).sum(axis=0) / col_mass, 0.0)
        worst = max(worst, float(np.abs(mu_i).max(initial=0.0)),
                    float(np.abs(mu_j).max(initial=0.0)))
    return worst


@dataclass
class VarianceAttribution:
    """Fraction of raw-score variance carried by each shape.

    Shares are Var(shape output)/Var(raw score) over a reference set; under
    correlated features they need not sum to 1.
    """

    shares1: dict[int, float]
    shares2: dict[tuple[int, int], float]


def variance_attribution(m: AdditiveModel, X_ref: np.ndarray) -> VarianceAttribution:
    X_ref = np.asarray(X_ref, dtype=np.float64)
    if X_ref.shape[0] == 0:
        raise ValueError("reference set must be nonempty")
    total = float(np.var(m.raw(X_ref)))
    if total <= 0:
        raise ValueError("raw score has zero variance on the reference set")
    shares1 = {
        s.feature: float(np.var(s(X_ref[:, s.feature]))) / total for s in m.shapes1
    }
    shares2 = {
        s.features: float(np.var(s(X_ref[:, s.features[0]], X_ref[:, s.features[1]]))) / total
        for s in m.shapes2
    }
    return VarianceAttribution(shares1, shares2)


# -- structured shape dump -----------------------------------------------------


def export_shapes(m: AdditiveModel) -> str:
    """Lossless, versioned JSON dump of knots, values, and density histograms."""
    obj = {
        "version": 1,
        "link": m.link,
        "intercept": m.intercept,
        "feature_names": m.feature_names,
        "shapes1": [
            {"feature": s.feature, "knots": s.knots.tolist(), "values": s.values.tolist()}
            for s in m.shapes1
        ],
        "shapes2": [
            {
                "features": list(s.features),
                "knots_i": s.knots_i.tolist(),
                "knots_j": s.knots_j.tolist(),
                "grid": s.grid.tolist(),
            }
            for s in m.shapes2
        ],
        "density": [
            {"feature": h.feature, "edges": h.edges.tolist(), "counts": h.counts.tolist()}
            for h in m.density
        ],
    }
    return json.dumps(obj)


def import_shapes(text: str) -> AdditiveModel:
    obj = json.loads(text)
    if obj.get("version") != 1:
        raise ValueError(f"unsupported shape dump version {obj.get('version')!r}")
    return AdditiveModel(
        intercept=obj["intercept"],
        shapes1=[
            Shape1D(s["feature"], np.asarray(s["knots"]), np.asarray(s["values"]))
            for s in obj["shapes1"]
        ],
        shapes2=[
            Shape2D(tuple(s["features"]), np.asarray(s["knots_i"]),
                    np.asarray(s["knots_j"]), np.asarray(s["grid"]))
            for s in obj["shapes2"]
        ],
        link=obj["link"],
        feature_names=obj["feature_names"],
        density=[
            Histogram(h["feature"], np.asarray(h["edges"]), np.asarray(h["counts"]))
            for h in obj["density"]
        ],
    )


class GamPredictor:
    """Predictor-interface wrapper so additive models slot into T-learners."""

    def __init__(self, pairs=(), link=LOGIT, seed=0, hyperparams: dict | None = None):
        self.pairs = [tuple(p) for p in pairs]
        self.link = link
        self.seed = seed
        self.hp = GamHyperparams(**hyperparams) if hyperparams else GamHyperparams()
        self.model_: AdditiveModel | None = None

    def fit(self, X, y):
        self.model_ = fit_gam(X, y, pairs=self.pairs, link=self.link,
                              hyperparams=self.hp, seed=self.seed)
        return self

    def predict_raw(self, X):
        return self.model_.raw(np.asarray(X, dtype=np.float64))

    def predict(self, X):
        return self.model_.predict(np.asarray(X, dtype=np.float64))

    def to_dict(self):
        return {
            "kind": "gam",
            "link": self.link,
            "seed": self.seed,
            "pairs": [list(p) for p in self.pairs],
            "hyperparams": vars(self.hp),
            "model": export_shapes(self.model_),
        }

    @classmethod
    def from_dict(cls, obj):
        gp = cls(pairs=[tuple(p) for p in obj["pairs"]], link=obj["link"],
                 seed=obj["seed"], hyperparams=obj["hyperparams"])
        gp.model_ = import_shapes(obj["model"])
        return gp
