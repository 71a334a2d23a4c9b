"""Command-line interface: every service operation, reproducible offline.

All outputs are deterministic given (config, seed): tables are written as
CSV plus a plot-ready JSON companion, and datasets carry a content checksum
that matches the HTTP service's for the same config.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path

import click
import numpy as np

from .data import (
    CollegeConfig,
    ExperimentDataset,
    SyntheticConfig,
    generate_college,
    generate_synthetic,
    load_csv,
    save_csv,
    split,
    with_group,
)
from .distill import DistillResult, distill, export_comparison
from .fairness import (
    BLOOD_DONATION_VALUES,
    REFERRAL_VALUES,
    ThresholdPolicy,
    ValueModel,
    evaluate_policy,
)
from .gam import export_shapes, import_shapes
from .improve import (
    AdjustedScore,
    ShapeAdjustment,
    college_shade_metrics,
    default_threshold,
    quantile_grid,
    shape_removal_curve,
    sweep_thresholds,
)
from .interactions import rank_pairs
from .models import TLearner, fit_tlearner, load_model, save_model

VALUE_MODELS = {
    "unit": ValueModel(1.0, 1.0),
    "blood": BLOOD_DONATION_VALUES,
    "referral": REFERRAL_VALUES,
}


def _config_defaults(ctx, param, value):
    """--config JSON file provides defaults; explicit flags still win."""
    if value is None:
        return None
    with open(value, encoding="utf-8") as fh:
        ctx.default_map = {**json.load(fh), **(ctx.default_map or {})}
    return value


def config_option(f):
    return click.option("--config", type=click.Path(exists=True), default=None,
                        callback=_config_defaults, is_eager=True, expose_value=False,
                        help="JSON file of default option values.")(f)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n",
                    encoding="utf-8")


def _write_table(path: Path, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v)
                         for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _plot_companion(path: Path, kind: str, header: list[str], rows: list[list]) -> None:
    """Tidy series file a plotting front end can consume directly."""
    series = {name: [row[i] for row in rows] for i, name in enumerate(header)}
    _write_json(path.with_suffix(".plot.json"), {"kind": kind, "series": series})


def _load_dataset(data_dir: str) -> ExperimentDataset:
    base = Path(data_dir)
    ds = load_csv(base / "data.csv", base / "schema.json")
    pot = base / "potentials.csv"
    if pot.exists():
        cols = {}
        with open(pot, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            rows = list(reader)
        if rows:
            import dataclasses

            for name in ("Y0", "Y1", "p0", "p1"):
                cols[name] = np.array([float(r[name]) for r in rows])
            ds = dataclasses.replace(ds, Y0=cols["Y0"], Y1=cols["Y1"],
                                     p0=cols["p0"], p1=cols["p1"])
    return ds


def _save_dataset(ds: ExperimentDataset, out_dir: Path, kind: str, config: dict) -> str:
    out_dir.mkdir(parents=True, exist_ok=True)
    save_csv(ds, out_dir / "data.csv", out_dir / "schema.json")
    if ds.has_potentials:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["Y0", "Y1", "p0", "p1"])
        for i in range(ds.n):
            writer.writerow([repr(float(ds.Y0[i])), repr(float(ds.Y1[i])),
                             repr(float(ds.p0[i])), repr(float(ds.p1[i]))])
        (out_dir / "potentials.csv").write_text(buf.getvalue(), encoding="utf-8")
    checksum = ds.checksum()
    _write_json(out_dir / "manifest.json",
                {"kind": kind, "config": config, "checksum": checksum, "n": ds.n})
    return checksum


def _tlearner_scores(tl: TLearner, ds: ExperimentDataset) -> np.ndarray:
    return tl.ite(ds.X)


@click.group()
def main():
    """Fairness auditing toolkit for randomized-experiment treatment policies."""


@main.command()
@config_option
@click.option("--kind", type=click.Choice(["synthetic", "college"]), default="synthetic")
@click.option("--n", type=int, default=10_000)
@click.option("--c", type=float, default=0.5, help="Sensitive-correlation dial (synthetic).")
@click.option("--minority-fraction", type=float, default=0.3)
@click.option("--prep-gap", type=float, default=0.8)
@click.option("--score-noise", type=float, default=0.5)
@click.option("--grad-slope", type=float, default=1.5)
@click.option("--grad-intercept", type=float, default=0.0)
@click.option("--budget", type=float, default=0.4)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(), required=True)
def generate(kind, n, c, minority_fraction, prep_gap, score_noise, grad_slope,
             grad_intercept, budget, seed, out):
    """Generate a dataset and write data.csv, schema.json, and a manifest."""
    if kind == "synthetic":
        config = {"n": n, "c": c, "seed": seed}
        ds = generate_synthetic(SyntheticConfig(**config))
    else:
        config = {"n": n, "minority_fraction": minority_fraction, "prep_gap": prep_gap,
                  "score_noise": score_noise, "grad_slope": grad_slope,
                  "grad_intercept": grad_intercept, "budget": budget, "seed": seed}
        ds = generate_college(CollegeConfig(**config))
    checksum = _save_dataset(ds, Path(out), kind, config)
    click.echo(f"dataset {kind} n={ds.n} checksum={checksum}")


@main.command()
@config_option
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--kind", type=click.Choice(["linear", "mlp", "gam1", "gam2"]), default="mlp")
@click.option("--pairs", default=None,
              help="Comma-separated i-j feature pairs for gam2, e.g. '4-6,8-10'.")
@click.option("--epochs", type=int, default=None)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(), required=True)
def fit(data, kind, pairs, epochs, seed, out):
    """Fit a two-arm outcome model on a dataset directory."""
    ds = _load_dataset(data)
    hyperparams = {}
    if pairs:
        hyperparams["pairs"] = [tuple(int(v) for v in p.split("-")) for p in pairs.split(",")]
    if epochs is not None:
        hyperparams["epochs"] = epochs
    tl = fit_tlearner(ds, kind=kind, hyperparams=hyperparams or None, seed=seed)
    save_model(tl, out)
    msg = f"fitted {kind} tlearner on n={ds.n}"
    if ds.has_potentials:
        mse = float(np.mean((tl.ite(ds.X) - ds.true_ite()) ** 2))
        msg += f" ite_mse={mse:.6f}"
    click.echo(msg)


@main.command()
@config_option
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--m", "m_draws", type=int, default=50)
@click.option("--k", type=int, default=10)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(), required=True)
def interactions(data, model_path, m_draws, k, seed, out):
    """Rank candidate feature pairs by interaction strength, per arm."""
    ds = _load_dataset(data)
    tl = load_model(model_path)
    names = list(ds.schema.names)
    r0 = rank_pairs(tl.model0, ds.X, M=m_draws, K=k, seed=seed)
    r1 = rank_pairs(tl.model1, ds.X, M=m_draws, K=k, seed=seed)
    out_path = Path(out)
    _write_json(out_path, {
        "control": json.loads(r0.to_json(names)),
        "treated": json.loads(r1.to_json(names)),
        "M": m_draws, "K": k, "seed": seed,
    })
    header = ["arm", "name_i", "name_j", "mean_score"]
    rows = []
    for arm, r in (("control", r0), ("treated", r1)):
        for s in r.scores:
            rows.append([arm, names[s.pair[0]], names[s.pair[1]], s.score])
    _write_table(out_path.with_suffix(".csv"), header, rows)
    _plot_companion(out_path.with_suffix(".csv"), "interaction_ranking", header, rows)
    if r1.scores:
        i, j = r1.scores[0].pair
        click.echo(f"top treated pair: {names[i]}-{names[j]}")
    else:
        click.echo("no defined pairs")


@main.command("distill")
@config_option
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--arm", type=click.Choice(["treated", "control"]), default="treated")
@click.option("--k", type=int, default=10)
@click.option("--audit-fraction", type=float, default=0.2)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(), required=True)
def distill_cmd(data, model_path, arm, k, audit_fraction, seed, out):
    """Distill one arm of a fitted model into an additive surrogate."""
    ds = _load_dataset(data)
    tl = load_model(model_path)
    teacher = tl.model1 if arm == "treated" else tl.model0
    rest = 1.0 - audit_fraction
    _, audit_ds, _ = split(ds, (rest, audit_fraction, 0.0), seed=seed)
    result = distill(teacher, audit_ds, K=k, seed=seed)
    out_path = Path(out)
    _write_json(out_path, {
        "arm": arm,
        "fidelity": result.fidelity,
        "pairs": [list(p) for p in result.pairs],
        "seed": seed,
        "student": json.loads(export_shapes(result.student)),
        "audit": json.loads(export_shapes(result.audit_model)),
        "comparison": json.loads(export_comparison(result)),
    })
    click.echo(f"distilled {arm} arm: fidelity={result.fidelity:.4f} "
               f"pairs={[list(p) for p in result.pairs]}")


def _load_surrogate(path: str) -> DistillResult:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    from .interactions import InteractionRanking

    return DistillResult(
        student=import_shapes(json.dumps(obj["student"])),
        audit_model=import_shapes(json.dumps(obj["audit"])),
        fidelity=obj["fidelity"],
        ranking=InteractionRanking([], [], 0, {}),
        pairs=[tuple(p) for p in obj["pairs"]],
    )


@main.command()
@config_option
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--thresholds", default=None,
              help="Per-group thresholds 'g0:g1', e.g. '0.05:0.02'; default matches "
                   "the experiment's treated fraction.")
@click.option("--value-model", type=click.Choice(sorted(VALUE_MODELS)), default="unit")
@click.option("--group", default=None, help="Audit a different sensitive feature by name.")
@click.option("--out", type=click.Path(), required=True)
def audit(data, model_path, thresholds, value_model, group, out):
    """Fairness report for the model's uplift-threshold policy."""
    ds = _load_dataset(data)
    if group:
        ds = with_group(ds, group)
    tl = load_model(model_path)
    scores = _tlearner_scores(tl, ds)
    if thresholds:
        t0, t1 = (float(v) for v in thresholds.split(":"))
        thr = {0: t0, 1: t1}
    else:
        thr = default_threshold(scores, float(ds.T.mean()))
    policy = ThresholdPolicy(lambda X, s=scores: s, thr, ds.schema.group_feature)
    report = evaluate_policy(ds, policy, value_model=VALUE_MODELS[value_model])
    _write_json(Path(out), report.to_dict())
    click.echo(report.to_json())


@main.command()
@config_option
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--resolution", type=int, default=41)
@click.option("--value-model", type=click.Choice(sorted(VALUE_MODELS)), default="unit")
@click.option("--group", default=None)
@click.option("--out", type=click.Path(), required=True)
def sweep(data, model_path, resolution, value_model, group, out):
    """Per-group threshold manifold of TF/OF/economics for an uplift score."""
    ds = _load_dataset(data)
    if group:
        ds = with_group(ds, group)
    tl = load_model(model_path)
    scores = _tlearner_scores(tl, ds)
    grid = quantile_grid(scores, ds.groups(), k=resolution)
    manifold = sweep_thresholds(ds, lambda X: scores, grid,
                                value_model=VALUE_MODELS[value_model],
                                benchmark="never-treat")
    out_path = Path(out)
    out_path.write_text(manifold.to_csv(), encoding="utf-8")
    header = ["threshold_0", "threshold_1", "treat_rate_0", "treat_rate_1",
              "tf", "of", "nwo", "econ_mean", "econ_se"]
    rows = [[e[h] for h in header] for e in manifold.entries]
    _plot_companion(out_path, "threshold_manifold", header, rows)
    click.echo(f"swept {len(manifold.entries)} grid points")


@main.command("removal-curve")
@config_option
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--surrogate", "surrogate_path", type=click.Path(exists=True), required=True)
@click.option("--arm", type=click.Choice(["treated", "control"]), default="treated")
@click.option("--target", required=True,
              help="Shape to remove: a feature name, or 'name_i:name_j' for a pair.")
@click.option("--replacement", type=click.Choice(["zero", "audit"]), default="zero")
@click.option("--alphas", default="0,0.2,0.4,0.6,0.8,1.0")
@click.option("--value-model", type=click.Choice(sorted(VALUE_MODELS)), default="unit")
@click.option("--group", default=None)
@click.option("--out", type=click.Path(), required=True)
def removal_curve(data, model_path, surrogate_path, arm, target, replacement,
                  alphas, value_model, group, out):
    """TF/OF/economics as a sensitive shape is progressively removed."""
    ds = _load_dataset(data)
    if group:
        ds = with_group(ds, group)
    tl = load_model(model_path)
    teacher = tl.model1 if arm == "treated" else tl.model0
    result = _load_surrogate(surrogate_path)
    names = list(ds.schema.names)
    if ":" in target:
        a, b = target.split(":")
        shape_target = tuple(sorted((names.index(a), names.index(b))))
    else:
        shape_target = names.index(target)
    alpha_list = [float(v) for v in alphas.split(",")]
    rows = shape_removal_curve(ds, teacher, result.student, result.audit_model,
                               shape_target, alphas=alpha_list, replacement=replacement,
                               value_model=VALUE_MODELS[value_model])
    out_path = Path(out)
    header = ["alpha", "tf", "of", "econ_mean", "econ_se"]
    table = [[r[h] for h in header] for r in rows]
    _write_table(out_path, header, table)
    _plot_companion(out_path, "removal_curve", header, table)
    click.echo(f"removal curve over {len(rows)} alphas written to {out}")


@main.command()
@config_option
@click.option("--data", type=click.Path(exists=True), default=None,
              help="Existing college dataset directory; generated fresh otherwise.")
@click.option("--n", type=int, default=50_000)
@click.option("--seed", type=int, default=0)
@click.option("--resolution", type=int, default=41)
@click.option("--budget", type=float, default=0.4)
@click.option("--out", type=click.Path(), required=True)
def college(data, n, seed, resolution, budget, out):
    """Admission tradeoff surface: graduates vs minority admits, shaded metrics."""
    if data:
        ds = _load_dataset(data)
    else:
        ds = generate_college(CollegeConfig(n=n, seed=seed, budget=budget))
    result = college_shade_metrics(ds, resolution=resolution, budget=budget)
    out_path = Path(out)
    header = ["threshold_0", "threshold_1", "accept_fraction", "graduates",
              "minority_admits", "treatment_parity_gap", "predictive_parity_gap",
              "nwo", "on_frontier"]
    rows = [[p[h] if h != "on_frontier" else int(p[h]) for h in header]
            for p in result["policies"]]
    _write_table(out_path, header, rows)
    _plot_companion(out_path, "college_tradeoff", header, rows)
    frontier = len(result["frontier"])
    click.echo(f"{len(result['policies'])} feasible policies, {frontier} on the frontier")


@main.command()
@config_option
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--console", type=click.Path(exists=True), default=None,
              help="Built audit-console directory to serve at /.")
def serve(host, port, console):
    """Run the HTTP evaluation service (optionally hosting the console)."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(static_dir=console), host=host, port=port)


if __name__ == "__main__":
    main()
