"""Outcome predictors and the two-model treatment-effect learner.

Two blackbox stand-ins are provided for distillation experiments: an
L2-regularized linear model and a one-hidden-layer network trained with
AdaGrad.  Both expose calibrated probabilities through ``predict`` and the
pre-link score through ``predict_raw``.
"""

from __future__ import annotations

import json
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import optimize

from .data import ExperimentDataset, FeatureSchema, kind_cardinality

__all__ = [
    "Predictor",
    "LinearPredictor",
    "MLPPredictor",
    "ConstantPredictor",
    "TLearner",
    "fit_tlearner",
    "ite",
    "auc",
    "auc_score",
    "save_model",
    "load_model",
]

LOGIT = "logit"
IDENTITY = "identity"

_RAW_CLIP = 30.0  # keeps logits finite when a probability saturates


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


class FeatureMap:
    """Standardizes continuous columns and one-hot encodes categoricals.

    Statistics come from the fitting split only; binary columns pass through.
    """

    def __init__(self, schema: FeatureSchema | None, d: int):
        self.schema = schema
        self.d = d
        self.mean_ = None
        self.scale_ = None

    def _kinds(self):
        if self.schema is not None:
            return list(self.schema.kinds)
        return ["continuous"] * self.d

    def fit(self, X: np.ndarray) -> "FeatureMap":
        kinds = self._kinds()
        mean = np.zeros(self.d)
        scale = np.ones(self.d)
        for j, kind in enumerate(kinds):
            if kind == "continuous":
                mean[j] = X[:, j].mean()
                s = X[:, j].std()
                scale[j] = s if s > 0 else 1.0
        self.mean_ = mean
        self.scale_ = scale
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.d:
            raise ValueError(f"expected {self.d} feature columns, got shape {X.shape}")
        cols = []
        for j, kind in enumerate(self._kinds()):
            card = kind_cardinality(kind)
            if card is not None:
                onehot = np.zeros((X.shape[0], card))
                onehot[np.arange(X.shape[0]), X[:, j].astype(int)] = 1.0
                cols.append(onehot)
            elif kind == "continuous":
                cols.append(((X[:, j] - self.mean_[j]) / self.scale_[j])[:, None])
            else:
                cols.append(X[:, j][:, None])
        return np.hstack(cols)

    def to_dict(self):
        return {
            "d": self.d,
            "schema": None if self.schema is None else self.schema.to_dict(),
            "mean": None if self.mean_ is None else self.mean_.tolist(),
            "scale": None if self.scale_ is None else self.scale_.tolist(),
        }

    @classmethod
    def from_dict(cls, obj):
        schema = None if obj["schema"] is None else FeatureSchema.from_dict(obj["schema"])
        fm = cls(schema, obj["d"])
        if obj["mean"] is not None:
            fm.mean_ = np.asarray(obj["mean"])
            fm.scale_ = np.asarray(obj["scale"])
        return fm


class Predictor(ABC):
    """fit/predict interface; predictions are probabilities under a logit link."""

    link: str = LOGIT

    @abstractmethod
    def fit(self, X: np.ndarray, y: np.ndarray) -> "Predictor": ...

    @abstractmethod
    def predict_raw(self, X: np.ndarray) -> np.ndarray:
        """Score on the pre-link scale (logits when link is logit)."""

    def predict(self, X: np.ndarray) -> np.ndarray:
        raw = self.predict_raw(X)
        return _sigmoid(raw) if self.link == LOGIT else raw

    def to_dict(self) -> dict:
        raise NotImplementedError

    @classmethod
    def from_dict(cls, obj: dict) -> "Predictor":
        raise NotImplementedError


class ConstantPredictor(Predictor):
    """Predicts one fixed probability (or value); handy as a stub and for tests."""

    def __init__(self, value: float, link: str = LOGIT):
        self.value = float(value)
        self.link = link

    def fit(self, X, y):
        return self

    def predict_raw(self, X):
        n = np.asarray(X).shape[0]
        if self.link == LOGIT:
            p = np.clip(self.value, 1e-12, 1 - 1e-12)
            return np.full(n, float(np.log(p / (1 - p))))
        return np.full(n, self.value)

    def predict(self, X):
        return np.full(np.asarray(X).shape[0], self.value)

    def to_dict(self):
        return {"kind": "constant", "value": self.value, "link": self.link}

    @classmethod
    def from_dict(cls, obj):
        return cls(obj["value"], obj["link"])


class LinearPredictor(Predictor):
    """L2-regularized logistic (logit link) or ridge (identity link) model."""

    def __init__(self, link: str = LOGIT, l2: float = 1.0, schema: FeatureSchema | None = None):
        self.link = link
        self.l2 = float(l2)
        self.schema = schema
        self.coef_ = None
        self.intercept_ = 0.0
        self._fm = None

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        self._fm = FeatureMap(self.schema, X.shape[1]).fit(X)
        Z = self._fm.transform(X)
        n, p = Z.shape
        if self.link == IDENTITY:
            Zc = Z - Z.mean(axis=0)
            yc = y - y.mean()
            A = Zc.T @ Zc + self.l2 * np.eye(p)
            self.coef_ = np.linalg.solve(A, Zc.T @ yc)
            self.intercept_ = float(y.mean() - Z.mean(axis=0) @ self.coef_)
            return self

        def loss_grad(w):
            b, coef = w[0], w[1:]
            prob = _sigmoid(b + Z @ coef)
            eps = 1e-12
            nll = -np.mean(y * np.log(prob + eps) + (1 - y) * np.log(1 - prob + eps))
            nll += self.l2 * (coef @ coef) / n
            gz = (prob - y) / n
            grad = np.empty_like(w)
            grad[0] = gz.sum()
            grad[1:] = Z.T @ gz + 2 * self.l2 * coef / n
            return nll, grad

        w0 = np.zeros(p + 1)
        res = optimize.minimize(loss_grad, w0, jac=True, method="L-BFGS-B",
                                options={"maxiter": 500})
        self.intercept_ = float(res.x[0])
        self.coef_ = res.x[1:]
        return self

    def predict_raw(self, X):
        Z = self._fm.transform(np.asarray(X, dtype=np.float64))
        return self.intercept_ + Z @ self.coef_

    def to_dict(self):
        return {
            "kind": "linear",
            "link": self.link,
            "l2": self.l2,
            "coef": self.coef_.tolist(),
            "intercept": self.intercept_,
            "feature_map": self._fm.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj):
        fm = FeatureMap.from_dict(obj["feature_map"])
        m = cls(link=obj["link"], l2=obj["l2"], schema=fm.schema)
        m.coef_ = np.asarray(obj["coef"])
        m.intercept_ = obj["intercept"]
        m._fm = fm
        return m


class MLPPredictor(Predictor):
    """One-hidden-layer tanh network trained with AdaGrad.

    Defaults: 64 hidden units, 200 epochs, batch 256, learning rate 0.05.
    Deterministic given the seed (init and batch order both derive from it).
    """

    def __init__(
        self,
        hidden: int = 64,
        epochs: int = 200,
        batch: int = 256,
        lr: float = 0.05,
        link: str = LOGIT,
        seed: int = 0,
        schema: FeatureSchema | None = None,
    ):
        self.hidden = hidden
        self.epochs = epochs
        self.batch = batch
        self.lr = lr
        self.link = link
        self.seed = seed
        self.schema = schema
        self._fm = None
        self.W1 = self.b1 = self.W2 = self.b2 = None
        self.loss_history_ = []

    def _forward(self, Z):
        H = np.tanh(Z @ self.W1 + self.b1)
        return H, H @ self.W2 + self.b2

    def _full_loss(self, Z, y):
        _, raw = self._forward(Z)
        if self.link == LOGIT:
            p = _sigmoid(raw)
            eps = 1e-12
            return float(-np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps)))
        return float(np.mean((raw - y) ** 2))

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        self._fm = FeatureMap(self.schema, X.shape[1]).fit(X)
        Z = self._fm.transform(X)
        n, p = Z.shape
        rng = np.random.default_rng(self.seed)
        self.W1 = rng.normal(0.0, 1.0 / np.sqrt(p), size=(p, self.hidden))
        self.b1 = np.zeros(self.hidden)
        self.W2 = rng.normal(0.0, 1.0 / np.sqrt(self.hidden), size=self.hidden)
        self.b2 = 0.0

        accW1 = np.zeros_like(self.W1)
        accb1 = np.zeros_like(self.b1)
        accW2 = np.zeros_like(self.W2)
        accb2 = 0.0
        eps = 1e-10
        self.loss_history_ = []
        for _ in range(self.epochs):
            order = rng.permutation(n)
            for start in range(0, n, self.batch):
                idx = order[start : start + self.batch]
                Zb, yb = Z[idx], y[idx]
                H, raw = self._forward(Zb)
                if self.link == LOGIT:
                    gz = (_sigmoid(raw) - yb) / len(idx)
                else:
                    gz = 2.0 * (raw - yb) / len(idx)
                gW2 = H.T @ gz
                gb2 = gz.sum()
                gH = np.outer(gz, self.W2) * (1.0 - H * H)
                gW1 = Zb.T @ gH
                gb1 = gH.sum(axis=0)

                accW1 += gW1 * gW1
                accb1 += gb1 * gb1
                accW2 += gW2 * gW2
                accb2 += gb2 * gb2
                self.W1 -= self.lr * gW1 / np.sqrt(accW1 + eps)
                self.b1 -= self.lr * gb1 / np.sqrt(accb1 + eps)
                self.W2 -= self.lr * gW2 / np.sqrt(accW2 + eps)
                self.b2 -= self.lr * gb2 / np.sqrt(accb2 + eps)
            self.loss_history_.append(self._full_loss(Z, y))
        return self

    def predict_raw(self, X):
        Z = self._fm.transform(np.asarray(X, dtype=np.float64))
        _, raw = self._forward(Z)
        return raw

    def to_dict(self):
        return {
            "kind": "mlp",
            "link": self.link,
            "hidden": self.hidden,
            "epochs": self.epochs,
            "batch": self.batch,
            "lr": self.lr,
            "seed": self.seed,
            "W1": self.W1.tolist(),
            "b1": self.b1.tolist(),
            "W2": self.W2.tolist(),
            "b2": self.b2,
            "feature_map": self._fm.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj):
        fm = FeatureMap.from_dict(obj["feature_map"])
        m = cls(hidden=obj["hidden"], epochs=obj["epochs"], batch=obj["batch"],
                lr=obj["lr"], link=obj["link"], seed=obj["seed"], schema=fm.schema)
        m.W1 = np.asarray(obj["W1"])
        m.b1 = np.asarray(obj["b1"])
        m.W2 = np.asarray(obj["W2"])
        m.b2 = obj["b2"]
        m._fm = fm
        return m


@dataclass
class TLearner:
    """Two outcome models fit on disjoint treatment arms.

    The per-row difference of their predictions estimates the individual
    treatment effect.
    """

    model0: Predictor
    model1: Predictor
    schema_fingerprint: str = ""

    def ite(self, X: np.ndarray) -> np.ndarray:
        return self.model1.predict(X) - self.model0.predict(X)

    def to_dict(self):
        return {
            "kind": "tlearner",
            "version": 1,
            "schema_fingerprint": self.schema_fingerprint,
            "model0": self.model0.to_dict(),
            "model1": self.model1.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj):
        return cls(
            model0=_predictor_from_dict(obj["model0"]),
            model1=_predictor_from_dict(obj["model1"]),
            schema_fingerprint=obj.get("schema_fingerprint", ""),
        )


def _make_predictor(kind: str, hyperparams: dict, seed: int, schema, link: str) -> Predictor:
    hp = dict(hyperparams or {})
    hp.pop("pairs", None)
    if kind == "linear":
        return LinearPredictor(link=link, schema=schema, **hp)
    if kind == "mlp":
        return MLPPredictor(link=link, seed=seed, schema=schema, **hp)
    if kind in ("gam1", "gam2"):
        from .gam import GamPredictor  # deferred: gam does not import models

        pairs = (hyperparams or {}).get("pairs", ())
        if kind == "gam2" and not pairs:
            raise ValueError("gam2 requires hyperparams['pairs']")
        return GamPredictor(pairs=pairs if kind == "gam2" else (), link=link,
                            seed=seed, hyperparams=hp or None)
    raise ValueError(f"unknown model kind {kind!r}")


def fit_tlearner(
    ds: ExperimentDataset,
    kind: str = "mlp",
    hyperparams: dict | None = None,
    seed: int = 0,
) -> TLearner:
    """Fit one outcome model per treatment arm of a randomized dataset."""
    mask1 = ds.T == 1
    if not mask1.any() or mask1.all():
        raise ValueError("both treatment arms must be nonempty")
    y_binary = np.isin(ds.Y, (0.0, 1.0)).all()
    link = LOGIT if y_binary else IDENTITY
    model0 = _make_predictor(kind, hyperparams, seed, ds.schema, link)
    model1 = _make_predictor(kind, hyperparams, seed + 1, ds.schema, link)
    model0.fit(ds.X[~mask1], ds.Y[~mask1])
    model1.fit(ds.X[mask1], ds.Y[mask1])
    return TLearner(model0, model1, ds.schema.fingerprint())


def ite(tl: TLearner, X: np.ndarray) -> np.ndarray:
    """Estimated individual treatment effect: treated minus control prediction."""
    return tl.model1.predict(X) - tl.model0.predict(X)


def auc_score(y: np.ndarray, scores: np.ndarray) -> float:
    """Rank-based AUC with tie averaging."""
    y = np.asarray(y)
    scores = np.asarray(scores, dtype=np.float64)
    pos = y == 1
    n1 = int(pos.sum())
    n0 = len(y) - n1
    if n1 == 0 or n0 == 0:
        raise ValueError("AUC requires both classes present")
    from scipy.stats import rankdata

    ranks = rankdata(scores)
    return float((ranks[pos].sum() - n1 * (n1 + 1) / 2) / (n1 * n0))


def auc(pred: Predictor, X: np.ndarray, y: np.ndarray) -> float:
    return auc_score(y, pred.predict_raw(X))


_PREDICTOR_KINDS = {
    "constant": ConstantPredictor,
    "linear": LinearPredictor,
    "mlp": MLPPredictor,
}


def _predictor_from_dict(obj: dict) -> Predictor:
    kind = obj["kind"]
    if kind == "gam":
        from .gam import GamPredictor

        return GamPredictor.from_dict(obj)
    if kind not in _PREDICTOR_KINDS:
        raise ValueError(f"unknown serialized model kind {kind!r}")
    return _PREDICTOR_KINDS[kind].from_dict(obj)


def save_model(model, path: str | Path) -> None:
    obj = model.to_dict()
    obj.setdefault("version", 1)
    Path(path).write_text(json.dumps(obj) + "\n", encoding="utf-8")


def load_model(path: str | Path):
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj["kind"] == "tlearner":
        return TLearner.from_dict(obj)
    return _predictor_from_dict(obj)
