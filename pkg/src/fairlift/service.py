"""HTTP evaluation service backing the audit console.

Artifacts (datasets, models, surrogates, adjusted scores) live in an
in-memory append-only store with monotone ids.  Long-running fits run as
polled jobs.  Every response carries the seed/config needed to reproduce it
offline with the CLI, and any result obtainable here is byte-identical to
the CLI's for the same inputs: both call the same library functions with the
same canonical JSON encoding.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import threading
import traceback
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from . import __version__
from .data import (
    CollegeConfig,
    ExperimentDataset,
    FeatureSchema,
    SyntheticConfig,
    generate_college,
    generate_synthetic,
)
from .distill import DistillResult, distill, export_comparison
from .fairness import (
    ConstantPolicy,
    ThresholdPolicy,
    UndefinedMetricError,
    ValueModel,
    evaluate_policy,
)
from .gam import export_shapes, variance_attribution
from .improve import AdjustedScore, ShapeAdjustment, sweep_thresholds
from .interactions import rank_pairs
from .models import TLearner, fit_tlearner

__all__ = ["create_app", "ApiError", "SessionState"]

MAX_MANIFOLD_POINTS = 10_000


class ApiError(Exception):
    """User-facing error with a machine-readable code; always maps to 4xx."""

    def __init__(self, code: str, message: str, status: int = 400):
        super().__init__(message)
        self.code = code
        self.message = message
        self.status = status


def not_found(kind: str, ref: str) -> ApiError:
    return ApiError(f"{kind}_not_found", f"no {kind} with id {ref!r}", status=404)


@dataclass
class SessionState:
    """Append-only artifact store; ids are never reused within a process."""

    datasets: dict[str, dict] = field(default_factory=dict)
    models: dict[str, dict] = field(default_factory=dict)
    surrogates: dict[str, dict] = field(default_factory=dict)
    scores: dict[str, dict] = field(default_factory=dict)
    jobs: dict[str, dict] = field(default_factory=dict)
    manifold_cache: dict[str, bytes] = field(default_factory=dict)
    idempotency: dict[str, bytes] = field(default_factory=dict)
    _counter: itertools.count = field(default_factory=itertools.count)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def next_id(self, prefix: str) -> str:
        return f"{prefix}-{next(self._counter)}"


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def body_hash(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def _require(body: dict, key: str):
    if key not in body:
        raise ApiError("missing_field", f"request body lacks {key!r}")
    return body[key]


def _get(store: dict, ref: str, kind: str) -> dict:
    if ref not in store:
        raise not_found(kind, ref)
    return store[ref]


def create_app(state: SessionState | None = None, static_dir=None) -> FastAPI:
    """Build the app; ``static_dir`` optionally serves the audit console."""
    app = FastAPI(title="fairlift service", version=__version__)
    st = state or SessionState()
    app.state.session = st

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(UndefinedMetricError)
    async def undefined_handler(request: Request, exc: UndefinedMetricError):
        return JSONResponse(status_code=400,
                            content={"code": "undefined_metric", "message": str(exc)})

    # -- helpers ---------------------------------------------------------------

    def ds_entry(ref: str) -> dict:
        return _get(st.datasets, ref, "dataset")

    def score_fn_from_spec(spec: dict, for_dataset: ExperimentDataset):
        kind = _require(spec, "kind")
        if kind == "ite":
            entry = _get(st.models, _require(spec, "model_id"), "model")
            tl: TLearner = entry["model"]
            return lambda X: tl.ite(X)
        if kind == "adjusted":
            entry = _get(st.scores, _require(spec, "score_id"), "score")
            scorer: AdjustedScore = entry["scorer"]
            return scorer.predict_raw
        if kind == "constant":
            value = float(spec.get("value", 0.0))
            return lambda X: np.full(X.shape[0], value)
        if kind == "feature":
            idx = int(_require(spec, "index"))
            return lambda X: X[:, idx]
        raise ApiError("bad_score_kind", f"unknown score kind {kind!r}")

    def policy_from_spec(spec: dict, ds: ExperimentDataset):
        kind = spec.get("kind", "threshold")
        if kind == "treat_all":
            return ConstantPolicy(1)
        if kind == "treat_none":
            return ConstantPolicy(0)
        if kind == "threshold":
            score = score_fn_from_spec(_require(spec, "score"), ds)
            thresholds = {int(k): float(v) for k, v in _require(spec, "thresholds").items()}
            return ThresholdPolicy(score, thresholds, ds.schema.group_feature)
        raise ApiError("bad_policy_kind", f"unknown policy kind {kind!r}")

    def value_model_from_spec(spec: dict | None) -> ValueModel | None:
        if spec is None:
            return None
        try:
            return ValueModel.from_dict(spec)
        except TypeError as exc:
            raise ApiError("bad_value_model", str(exc)) from None

    def idempotent(key: str | None, build) -> Response:
        """Replay the stored response bytes when a mutation is retried."""
        if key is not None and key in st.idempotency:
            return Response(content=st.idempotency[key], media_type="application/json")
        payload = build()
        blob = canonical_json(payload).encode()
        if key is not None:
            st.idempotency[key] = blob
        return Response(content=blob, media_type="application/json")

    # -- datasets ---------------------------------------------------------------

    @app.get("/datasets")
    async def list_datasets():
        out = []
        for ref, entry in st.datasets.items():
            ds: ExperimentDataset = entry["dataset"]
            out.append({
                "dataset_id": ref,
                "kind": entry["kind"],
                "n": ds.n,
                "d": ds.d,
                "names": list(ds.schema.names),
                "group_feature": ds.schema.group_feature,
                "checksum": entry["checksum"],
                "config": entry["config"],
            })
        return out

    @app.post("/datasets/generate")
    async def generate_dataset(body: dict):
        kind = _require(body, "kind")
        config = dict(_require(body, "config"))

        def build():
            try:
                if kind == "synthetic":
                    ds = generate_synthetic(SyntheticConfig(**config))
                elif kind == "college":
                    ds = generate_college(CollegeConfig(**config))
                else:
                    raise ApiError("bad_dataset_kind", f"unknown dataset kind {kind!r}")
            except (TypeError, ValueError) as exc:
                raise ApiError("bad_config", str(exc)) from None
            ref = st.next_id("ds")
            st.datasets[ref] = {
                "dataset": ds, "kind": kind, "config": config,
                "checksum": ds.checksum(),
            }
            return {"dataset_id": ref, "checksum": ds.checksum(),
                    "kind": kind, "config": config, "n": ds.n}

        return idempotent(body.get("idempotency_key"), build)

    @app.post("/datasets/upload")
    async def upload_dataset(body: dict):
        csv_text = _require(body, "csv")
        schema_obj = _require(body, "schema")

        def build():
            import io

            from .data import load_csv

            import tempfile, os
            with tempfile.TemporaryDirectory() as tmp:
                data_path = os.path.join(tmp, "data.csv")
                schema_path = os.path.join(tmp, "schema.json")
                with open(data_path, "w", encoding="utf-8") as fh:
                    fh.write(csv_text)
                with open(schema_path, "w", encoding="utf-8") as fh:
                    json.dump(schema_obj, fh)
                try:
                    ds = load_csv(data_path, schema_path)
                except ValueError as exc:
                    raise ApiError("bad_upload", str(exc)) from None
            ref = st.next_id("ds")
            st.datasets[ref] = {
                "dataset": ds, "kind": "upload", "config": {"schema": schema_obj},
                "checksum": ds.checksum(),
            }
            return {"dataset_id": ref, "checksum": ds.checksum(), "n": ds.n}

        return idempotent(body.get("idempotency_key"), build)

    # -- models and jobs ---------------------------------------------------------

    def run_fit_job(job_id: str, ref: str, kind: str, hyperparams: dict, seed: int):
        try:
            entry = st.datasets[ref]
            tl = fit_tlearner(entry["dataset"], kind=kind,
                              hyperparams=hyperparams, seed=seed)
            with st.lock:
                model_id = st.next_id("model")
                st.models[model_id] = {
                    "model": tl, "kind": kind, "dataset_id": ref,
                    "seed": seed, "hyperparams": hyperparams,
                }
                st.jobs[job_id].update(status="done", model_id=model_id)
        except Exception as exc:  # job errors surface through polling
            with st.lock:
                st.jobs[job_id].update(status="error", error=str(exc),
                                       trace=traceback.format_exc())

    @app.post("/models/fit")
    async def fit_model(body: dict):
        ref = _require(body, "dataset_id")
        ds_entry(ref)
        kind = body.get("kind", "mlp")
        hyperparams = body.get("hyperparams") or {}
        if "pairs" in hyperparams:
            hyperparams["pairs"] = [tuple(p) for p in hyperparams["pairs"]]
        seed = int(body.get("seed", 0))

        def build():
            job_id = st.next_id("job")
            st.jobs[job_id] = {"status": "running", "kind": "fit"}
            thread = threading.Thread(
                target=run_fit_job, args=(job_id, ref, kind, hyperparams, seed),
                daemon=True,
            )
            thread.start()
            return {"job_id": job_id, "dataset_id": ref, "kind": kind, "seed": seed}

        return idempotent(body.get("idempotency_key"), build)

    @app.get("/jobs/{job_id}")
    async def job_status(job_id: str):
        job = _get(st.jobs, job_id, "job")
        out = {"job_id": job_id, "status": job["status"]}
        for key in ("model_id", "surrogate_id", "error"):
            if key in job:
                out[key] = job[key]
        return out

    @app.get("/models")
    async def list_models():
        return [
            {"model_id": ref, "kind": e["kind"], "dataset_id": e["dataset_id"],
             "seed": e["seed"]}
            for ref, e in st.models.items()
        ]

    @app.get("/models/{model_id}/shapes")
    async def model_shapes(model_id: str):
        entry = _get(st.models, model_id, "model")
        tl: TLearner = entry["model"]
        arms = {}
        for arm_name, arm in (("control", tl.model0), ("treated", tl.model1)):
            gam = getattr(arm, "model_", None)
            if gam is None:
                raise ApiError("not_additive",
                               f"model {model_id!r} ({entry['kind']}) has no shape dump; "
                               "distill it first", status=400)
            arms[arm_name] = json.loads(export_shapes(gam))
        return {"model_id": model_id, "arms": arms}

    @app.get("/models/{model_id}/interactions")
    async def model_interactions(model_id: str, M: int = 50, K: int = 10, seed: int = 0):
        entry = _get(st.models, model_id, "model")
        ds = st.datasets[entry["dataset_id"]]["dataset"]
        tl: TLearner = entry["model"]
        try:
            r0 = rank_pairs(tl.model0, ds.X, M=M, K=K, seed=seed)
            r1 = rank_pairs(tl.model1, ds.X, M=M, K=K, seed=seed)
        except ValueError as exc:
            raise ApiError("bad_interaction_query", str(exc)) from None
        names = list(ds.schema.names)
        return {
            "model_id": model_id, "M": M, "K": K, "seed": seed,
            "control": json.loads(r0.to_json(names)),
            "treated": json.loads(r1.to_json(names)),
        }

    # -- distillation -------------------------------------------------------------

    def run_distill_job(job_id: str, model_id: str, ref: str, arm: str,
                        K: int, M: int, seed: int, hyperparams: dict | None):
        try:
            from .gam import GamHyperparams

            ds = st.datasets[ref]["dataset"]
            tl: TLearner = st.models[model_id]["model"]
            teacher = tl.model1 if arm == "treated" else tl.model0
            hp = GamHyperparams(**hyperparams) if hyperparams else None
            result = distill(teacher, ds, K=K, M=M, seed=seed, hyperparams=hp)
            with st.lock:
                surrogate_id = st.next_id("surrogate")
                st.surrogates[surrogate_id] = {
                    "result": result, "model_id": model_id, "dataset_id": ref,
                    "arm": arm, "teacher": teacher, "seed": seed, "K": K, "M": M,
                }
                st.jobs[job_id].update(status="done", surrogate_id=surrogate_id)
        except Exception as exc:
            with st.lock:
                st.jobs[job_id].update(status="error", error=str(exc),
                                       trace=traceback.format_exc())

    @app.post("/models/{model_id}/distill")
    async def distill_model(model_id: str, body: dict):
        entry = _get(st.models, model_id, "model")
        ref = body.get("dataset_id", entry["dataset_id"])
        ds_entry(ref)
        arm = body.get("arm", "treated")
        if arm not in ("treated", "control"):
            raise ApiError("bad_arm", f"arm must be treated or control, got {arm!r}")
        K = int(body.get("K", 10))
        M = int(body.get("M", 50))
        seed = int(body.get("seed", 0))
        hyperparams = body.get("hyperparams")

        def build():
            job_id = st.next_id("job")
            st.jobs[job_id] = {"status": "running", "kind": "distill"}
            threading.Thread(
                target=run_distill_job,
                args=(job_id, model_id, ref, arm, K, M, seed, hyperparams), daemon=True,
            ).start()
            return {"job_id": job_id, "model_id": model_id, "arm": arm,
                    "K": K, "M": M, "seed": seed}

        return idempotent(body.get("idempotency_key"), build)

    @app.get("/surrogates/{surrogate_id}")
    async def surrogate_detail(surrogate_id: str):
        entry = _get(st.surrogates, surrogate_id, "surrogate")
        result: DistillResult = entry["result"]
        ds = st.datasets[entry["dataset_id"]]["dataset"]
        va = variance_attribution(result.student, ds.X)
        return {
            "surrogate_id": surrogate_id,
            "model_id": entry["model_id"],
            "dataset_id": entry["dataset_id"],
            "arm": entry["arm"],
            "fidelity": result.fidelity,
            "pairs": [list(p) for p in result.pairs],
            "seed": entry["seed"],
            "comparison": json.loads(export_comparison(result)),
            "variance_shares": {
                "shapes1": {str(k): v for k, v in va.shares1.items()},
                "shapes2": {f"{i},{j}": v for (i, j), v in va.shares2.items()},
            },
        }

    # -- adjustment and evaluation -------------------------------------------------

    @app.post("/adjust")
    async def adjust(body: dict):
        surrogate_id = _require(body, "model_id")
        entry = _get(st.surrogates, surrogate_id, "surrogate")
        result: DistillResult = entry["result"]
        try:
            adjustments = [ShapeAdjustment.from_dict(a) for a in _require(body, "adjustments")]
            scorer = AdjustedScore(entry["teacher"], result.student,
                                   result.audit_model, adjustments)
        except (KeyError, ValueError) as exc:
            raise ApiError("bad_adjustment", str(exc)) from None

        def build():
            score_id = st.next_id("score")
            st.scores[score_id] = {
                "scorer": scorer, "surrogate_id": surrogate_id,
                "adjustments": [a.to_dict() for a in adjustments],
            }
            return {"score_id": score_id, "surrogate_id": surrogate_id,
                    "adjustments": [a.to_dict() for a in adjustments]}

        return idempotent(body.get("idempotency_key"), build)

    @app.post("/evaluate")
    async def evaluate(body: dict):
        ref = _require(body, "dataset_id")
        entry = ds_entry(ref)
        ds: ExperimentDataset = entry["dataset"]
        policy = policy_from_spec(_require(body, "policy"), ds)
        value_model = value_model_from_spec(body.get("value_model"))
        report = evaluate_policy(ds, policy, value_model=value_model)
        payload = report.to_dict()
        payload["dataset_id"] = ref
        payload["request"] = {"policy": body["policy"],
                              "value_model": body.get("value_model")}
        return Response(content=canonical_json(payload), media_type="application/json")

    @app.post("/manifold")
    async def manifold(body: dict):
        ref = _require(body, "dataset_id")
        entry = ds_entry(ref)
        ds: ExperimentDataset = entry["dataset"]
        key = body_hash({"dataset": entry["checksum"], "body": body})
        if key in st.manifold_cache:
            return Response(content=st.manifold_cache[key], media_type="application/json")

        score = score_fn_from_spec(_require(body, "score"), ds)
        grid_spec = _require(body, "grid")
        if "thresholds" in grid_spec:
            grid = {int(g): np.asarray(v, dtype=np.float64)
                    for g, v in grid_spec["thresholds"].items()}
        else:
            from .improve import quantile_grid

            k = int(grid_spec.get("resolution", 41))
            grid = quantile_grid(score(ds.X), ds.groups(), k=k)
        points = len(grid.get(0, ())) * len(grid.get(1, ()))
        if points > MAX_MANIFOLD_POINTS:
            raise ApiError("grid_too_large",
                           f"{points} grid points exceed the {MAX_MANIFOLD_POINTS} cap; "
                           "page the sweep")
        value_model = value_model_from_spec(body.get("value_model"))
        m = sweep_thresholds(ds, score, grid, value_model=value_model,
                             benchmark="never-treat")
        payload = {
            "dataset_id": ref,
            "metadata": m.metadata,
            "entries": m.entries,
            "request": {k: v for k, v in body.items() if k != "idempotency_key"},
        }
        blob = canonical_json(payload).encode()
        st.manifold_cache[key] = blob
        return Response(content=blob, media_type="application/json")

    @app.post("/college")
    async def college(body: dict):
        """Admission tradeoff surface for the explorer's college mode."""
        from .improve import college_shade_metrics

        config = dict(body.get("config") or {})
        resolution = int(body.get("resolution", 41))
        key = body_hash({"college": config, "resolution": resolution})
        if key in st.manifold_cache:
            return Response(content=st.manifold_cache[key], media_type="application/json")
        try:
            cfg = CollegeConfig(**config)
        except (TypeError, ValueError) as exc:
            raise ApiError("bad_config", str(exc)) from None
        if resolution * resolution > MAX_MANIFOLD_POINTS:
            raise ApiError("grid_too_large",
                           f"{resolution}x{resolution} exceeds the "
                           f"{MAX_MANIFOLD_POINTS} cap")
        ds = generate_college(cfg)
        out = college_shade_metrics(ds, resolution=resolution, budget=cfg.budget)
        payload = {"config": config, "resolution": resolution,
                   "policies": out["policies"], "frontier": out["frontier"]}
        blob = canonical_json(payload).encode()
        st.manifold_cache[key] = blob
        return Response(content=blob, media_type="application/json")

    @app.get("/health")
    async def health():
        return {"status": "ok", "version": __version__}

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="console")

    return app
