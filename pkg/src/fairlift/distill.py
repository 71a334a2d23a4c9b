"""Distilling a blackbox predictor into an interpretable additive surrogate.

The teacher is query-only: the pipeline ranks its pairwise interactions on
the audit split, fits an additive student to the teacher's raw scores with
an identity link, and in parallel fits an audit model of the same form
directly on the observed outcomes.  Both models share knot placement (they
see the same audit covariates), so their shapes can be compared point by
point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import ExperimentDataset
from .gam import AdditiveModel, GamHyperparams, fit_gam
from .interactions import InteractionRanking, rank_pairs

__all__ = ["DistillResult", "distill", "fidelity", "export_comparison"]


@dataclass
class DistillResult:
    student: AdditiveModel          # mimics the teacher (identity link on raw scores)
    audit_model: AdditiveModel      # fit directly on observed outcomes
    fidelity: float                 # teacher prediction variance captured by student
    ranking: InteractionRanking
    pairs: list[tuple[int, int]]


def _raw_fn(model):
    if hasattr(model, "predict_raw"):
        return model.predict_raw
    if hasattr(model, "raw"):
        return model.raw
    return model


def fidelity(teacher_raw, student_raw, X_ref: np.ndarray) -> float:
    """1 - MSE(teacher - student)/Var(teacher) on a reference set."""
    X_ref = np.asarray(X_ref, dtype=np.float64)
    t = np.asarray(_raw_fn(teacher_raw)(X_ref), dtype=np.float64)
    s = np.asarray(_raw_fn(student_raw)(X_ref), dtype=np.float64)
    if np.ptp(t) == 0.0:
        raise ValueError("teacher output has zero variance on the reference set")
    return 1.0 - float(np.mean((t - s) ** 2)) / float(np.var(t))


def distill(
    teacher,
    ds_audit: ExperimentDataset,
    K: int = 10,
    seed: int = 0,
    M: int = 50,
    hyperparams: GamHyperparams | None = None,
) -> DistillResult:
    """Rank teacher interactions, fit the student and the audit model.

    The audit model uses a logit link when the observed outcome is binary,
    identity otherwise, and the same pairs as the student so shape-by-shape
    comparison is meaningful.
    """
    if ds_audit.n == 0:
        raise ValueError("audit set is empty")
    X = ds_audit.X
    teacher_raw = np.asarray(_raw_fn(teacher)(X), dtype=np.float64)
    if np.ptp(teacher_raw) == 0.0:
        raise ValueError("teacher output has zero variance on the audit set")

    ranking = rank_pairs(teacher, X, M=M, K=K, seed=seed)
    pairs = ranking.top()

    names = list(ds_audit.schema.names)
    student = fit_gam(X, teacher_raw, pairs=pairs, link="identity",
                      hyperparams=hyperparams, seed=seed, feature_names=names)
    y_binary = bool(np.isin(ds_audit.Y, (0.0, 1.0)).all())
    audit_model = fit_gam(X, ds_audit.Y, pairs=pairs,
                          link="logit" if y_binary else "identity",
                          hyperparams=hyperparams, seed=seed, feature_names=names)
    fid = fidelity(lambda _: teacher_raw, student, X)
    return DistillResult(student=student, audit_model=audit_model,
                         fidelity=fid, ranking=ranking, pairs=pairs)


def export_comparison(result: DistillResult) -> str:
    """Side-by-side dump of distilled vs audit shapes on their shared knots."""
    student, audit = result.student, result.audit_model
    names = student.feature_names
    name = (lambda i: names[i]) if names else (lambda i: f"f{i}")
    shapes1 = []
    for s in student.shapes1:
        a = audit.shape_for(s.feature)
        shapes1.append({
            "feature": s.feature,
            "name": name(s.feature),
            "knots": s.knots.tolist(),
            "student_values": s.values.tolist(),
            "audit_values": a.values.tolist(),
        })
    shapes2 = []
    for s in student.shapes2:
        a = audit.shape_for(s.features)
        shapes2.append({
            "features": list(s.features),
            "names": [name(s.features[0]), name(s.features[1])],
            "knots_i": s.knots_i.tolist(),
            "knots_j": s.knots_j.tolist(),
            "student_grid": s.grid.tolist(),
            "audit_grid": a.grid.tolist(),
        })
    return json.dumps({
        "version": 1,
        "fidelity": result.fidelity,
        "student_intercept": student.intercept,
        "audit_intercept": audit.intercept,
        "shapes1": shapes1,
        "shapes2": shapes2,
        "density": [
            {"feature": h.feature, "edges": h.edges.tolist(), "counts": h.counts.tolist()}
            for h in student.density
        ],
    })
