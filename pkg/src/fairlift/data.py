"""Experiment data model, synthetic generators, CSV ingestion, and splitting.

All datasets hold covariates X, a randomized binary treatment T, and an
observed outcome Y.  Synthetic generators additionally store both potential
outcomes (and their Bernoulli probabilities) so downstream estimators can be
checked against ground truth.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "FeatureSchema",
    "ExperimentDataset",
    "SyntheticConfig",
    "CollegeConfig",
    "DataFormatError",
    "MissingColumnError",
    "ValueParseError",
    "EmptyFileError",
    "generate_synthetic",
    "generate_college",
    "synthetic_potential_probs",
    "load_csv",
    "save_csv",
    "split",
    "with_group",
]

BINARY = "binary"
CONTINUOUS = "continuous"

SYNTH_SENSITIVE_LINKS = {0: [5], 1: [7], 2: [4, 6, 8]}
"""Correlation wiring of the 12-covariate generator, 0-indexed.

x1 drives x6, x2 drives x8, x3 drives the strongest outcome drivers
{x5, x7, x9}; x4 stays independent of everything.
"""


class DataFormatError(ValueError):
    """Malformed input data; carries 1-based row/column location when known."""

    def __init__(self, message: str, *, row: int | None = None, column: str | None = None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class MissingColumnError(DataFormatError):
    pass


class ValueParseError(DataFormatError):
    pass


class EmptyFileError(DataFormatError):
    pass


def _kind_valid(kind: str) -> bool:
    if kind in (BINARY, CONTINUOUS):
        return True
    if kind.startswith("categorical:"):
        try:
            return int(kind.split(":", 1)[1]) >= 2
        except ValueError:
            return False
    return False


def kind_cardinality(kind: str) -> int | None:
    """Number of levels for a categorical kind, else None."""
    if kind.startswith("categorical:"):
        return int(kind.split(":", 1)[1])
    return None


@dataclass(frozen=True)
class FeatureSchema:
    """Feature names, kinds, sensitivity flags, and the group under audit.

    ``group_feature`` indexes the binary sensitive feature whose two values
    define the groups for all fairness metrics.
    """

    names: tuple[str, ...]
    kinds: tuple[str, ...]
    sensitive: tuple[bool, ...]
    group_feature: int

    def __post_init__(self):
        names, kinds, sensitive = self.names, self.kinds, self.sensitive
        if not (len(names) == len(kinds) == len(sensitive)):
            raise ValueError("names, kinds and sensitive must have equal length")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        for k in kinds:
            if not _kind_valid(k):
                raise ValueError(f"unknown feature kind {k!r}")
        g = self.group_feature
        if not (0 <= g < len(names)):
            raise ValueError("group_feature out of range")
        if not sensitive[g]:
            raise ValueError("group_feature must be flagged sensitive")
        if kinds[g] != BINARY:
            raise ValueError("group_feature must be a binary feature")

    @property
    def d(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def to_dict(self) -> dict:
        return {
            "features": [
                {"name": n, "kind": k, "sensitive": bool(s)}
                for n, k, s in zip(self.names, self.kinds, self.sensitive)
            ],
            "group_feature": self.group_feature,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "FeatureSchema":
        feats = obj["features"]
        return cls(
            names=tuple(f["name"] for f in feats),
            kinds=tuple(f["kind"] for f in feats),
            sensitive=tuple(bool(f["sensitive"]) for f in feats),
            group_feature=int(obj["group_feature"]),
        )

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ExperimentDataset:
    """Rows of a randomized experiment; immutable after construction.

    ``Y0``/``Y1`` (and their probabilities ``p0``/``p1``) are present only
    for synthetic data, where they enable ground-truth checks.
    """

    schema: FeatureSchema
    X: np.ndarray
    T: np.ndarray
    Y: np.ndarray
    Y0: np.ndarray | None = None
    Y1: np.ndarray | None = None
    p0: np.ndarray | None = None
    p1: np.ndarray | None = None
    assignment_prob: float = 0.5

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        T = np.asarray(self.T, dtype=np.int8)
        Y = np.asarray(self.Y, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.schema.d:
            raise ValueError("X must be (n, d) matching the schema")
        n = X.shape[0]
        if T.shape != (n,) or Y.shape != (n,):
            raise ValueError("T and Y must have one entry per row")
        if not np.isin(T, (0, 1)).all():
            raise ValueError("T must be binary")
        object.__setattr__(self, "X", _freeze(X))
        object.__setattr__(self, "T", _freeze(T))
        object.__setattr__(self, "Y", _freeze(Y))
        for name in ("Y0", "Y1", "p0", "p1"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=np.float64)
                if v.shape != (n,):
                    raise ValueError(f"{name} must have one entry per row")
                object.__setattr__(self, name, _freeze(v))
        if self.Y0 is not None and self.Y1 is not None:
            observed = np.where(T == 1, self.Y1, self.Y0)
            if not np.array_equal(observed, Y):
                raise ValueError("Y must equal the potential outcome selected by T")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def has_potentials(self) -> bool:
        return self.Y0 is not None and self.Y1 is not None

    def groups(self) -> np.ndarray:
        """Group membership (0/1) from the audited sensitive feature."""
        return self.X[:, self.schema.group_feature].astype(np.int64)

    def true_ite(self) -> np.ndarray:
        """p1 - p0 per row; requires stored potential-outcome probabilities."""
        if self.p0 is None or self.p1 is None:
            raise ValueError("dataset has no stored potential-outcome probabilities")
        return self.p1 - self.p0

    def subset(self, mask_or_index: np.ndarray) -> "ExperimentDataset":
        idx = np.asarray(mask_or_index)
        pick = lambda a: None if a is None else a[idx]
        return ExperimentDataset(
            schema=self.schema,
            X=self.X[idx],
            T=self.T[idx],
            Y=self.Y[idx],
            Y0=pick(self.Y0),
            Y1=pick(self.Y1),
            p0=pick(self.p0),
            p1=pick(self.p1),
            assignment_prob=self.assignment_prob,
        )

    def checksum(self) -> str:
        """Content hash covering schema and every stored array."""
        h = hashlib.sha256()
        h.update(self.schema.fingerprint().encode())
        h.update(np.float64(self.assignment_prob).tobytes())
        for a in (self.X, self.T.astype(np.float64), self.Y, self.Y0, self.Y1, self.p0, self.p1):
            h.update(b"|" if a is None else a.tobytes())
        return h.hexdigest()

    def equals(self, other: "ExperimentDataset") -> bool:
        return self.checksum() == other.checksum()


def with_group(ds: ExperimentDataset, feature: int | str) -> ExperimentDataset:
    """Same data, auditing a different sensitive binary feature."""
    idx = ds.schema.index_of(feature) if isinstance(feature, str) else feature
    schema = dataclasses.replace(ds.schema, group_feature=idx)
    return dataclasses.replace(ds, schema=schema)


@dataclass(frozen=True)
class SyntheticConfig:
    """12-covariate generator with a sensitive/nonsensitive correlation dial."""

    n: int
    c: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not (0.0 <= self.c <= 1.0):
            raise ValueError("c must lie in [0, 1]")


@dataclass(frozen=True)
class CollegeConfig:
    """Two-group admission simulation: race, latent preparedness, test score."""

    n: int
    minority_fraction: float = 0.3
    prep_gap: float = 0.8
    score_noise: float = 0.5
    grad_slope: float = 1.5
    grad_intercept: float = 0.0
    budget: float = 0.4
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not (0.0 < self.minority_fraction < 1.0):
            raise ValueError("minority_fraction must lie strictly inside (0, 1)")
        if self.score_noise <= 0:
            raise ValueError("score_noise must be positive")
        if not (0.0 < self.budget <= 1.0):
            raise ValueError("budget must lie in (0, 1]")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def synthetic_potential_probs(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bernoulli probabilities (p0, p1) of the 12-covariate generator.

    Columns are 0-indexed: the formulas read, in 1-indexed feature names,
    p1 = sigmoid(x5 + x7 + 2*x9 - x6*x7 + x10*x11) and
    p0 = sigmoid(x5 + 0.1*x8^2 + x5*x7 - x9*x11).
    """
    X = np.asarray(X, dtype=np.float64)
    x = lambda i: X[:, i - 1]  # 1-indexed accessor to mirror the formulas
    p1 = _sigmoid(x(5) + x(7) + 2.0 * x(9) - x(6) * x(7) + x(10) * x(11))
    p0 = _sigmoid(x(5) + 0.1 * x(8) ** 2 + x(5) * x(7) - x(9) * x(11))
    return p0, p1


def synthetic_schema(group: str = "x3") -> FeatureSchema:
    names = tuple(f"x{i}" for i in range(1, 13))
    kinds = (BINARY,) * 4 + (CONTINUOUS,) * 5 + (BINARY,) * 3
    sensitive = (True,) * 4 + (False,) * 8
    return FeatureSchema(names, kinds, sensitive, names.index(group))


def generate_synthetic(cfg: SyntheticConfig) -> ExperimentDataset:
    """Draw the 12-covariate dataset with sensitive-correlation dial ``c``.

    x1..x4 are fair-coin sensitive bits, x5..x9 standard Gaussians,
    x10..x12 fair-coin bits.  Each link listed in SYNTH_SENSITIVE_LINKS
    replaces the linked Gaussian z by c*(2s-1) + sqrt(1-c^2)*eps so that
    corr(s, z) equals c exactly at both endpoints of the dial.
    """
    rng = np.random.default_rng(cfg.seed)
    n, c = cfg.n, cfg.c

    sens = rng.integers(0, 2, size=(n, 4)).astype(np.float64)
    gauss = rng.standard_normal((n, 5))  # x5..x9 before correlation
    tail = rng.integers(0, 2, size=(n, 3)).astype(np.float64)  # x10..x12

    X = np.empty((n, 12), dtype=np.float64)
    X[:, :4] = sens
    X[:, 4:9] = gauss
    X[:, 9:] = tail
    scale = math.sqrt(1.0 - c * c)
    for s_col, linked in SYNTH_SENSITIVE_LINKS.items():
        signed = 2.0 * sens[:, s_col] - 1.0
        for z_col in linked:
            X[:, z_col] = c * signed + scale * X[:, z_col]

    p0, p1 = synthetic_potential_probs(X)
    T = (rng.random(n) < 0.5).astype(np.int8)
    Y0 = (rng.random(n) < p0).astype(np.float64)
    Y1 = (rng.random(n) < p1).astype(np.float64)
    Y = np.where(T == 1, Y1, Y0)

    return ExperimentDataset(
        schema=synthetic_schema(),
        X=X, T=T, Y=Y, Y0=Y0, Y1=Y1, p0=p0, p1=p1,
    )


def college_schema() -> FeatureSchema:
    return FeatureSchema(
        names=("race", "test_score"),
        kinds=(BINARY, CONTINUOUS),
        sensitive=(True, False),
        group_feature=0,
    )


def generate_college(cfg: CollegeConfig) -> ExperimentDataset:
    """Admission simulation: race=1 marks the minority group.

    Latent preparedness P is N(0,1) for the minority and N(prep_gap,1) for
    the majority; the observed test score is P plus noise.  Graduation is
    logistic in P, with a -4 logit shift when not admitted (graduating
    without admission is possible but rare).
    """
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    minority = (rng.random(n) < cfg.minority_fraction).astype(np.float64)
    prep = rng.standard_normal(n) + cfg.prep_gap * (1.0 - minority)
    score = prep + rng.normal(0.0, cfg.score_noise, size=n)

    logit1 = cfg.grad_slope * prep + cfg.grad_intercept
    p1 = _sigmoid(logit1)
    p0 = _sigmoid(logit1 - 4.0)
    T = (rng.random(n) < 0.5).astype(np.int8)
    Y0 = (rng.random(n) < p0).astype(np.float64)
    Y1 = (rng.random(n) < p1).astype(np.float64)
    Y = np.where(T == 1, Y1, Y0)

    X = np.column_stack([minority, score])
    return ExperimentDataset(schema=college_schema(), X=X, T=T, Y=Y, Y0=Y0, Y1=Y1, p0=p0, p1=p1)


# -- CSV interchange ---------------------------------------------------------
#
# Data files carry only (X, T, Y); sensitivity flags live in the schema
# sidecar so the CSV stays tool-agnostic.  Floats are written with repr so a
# round trip is lossless.


def _format_cell(value: float, kind: str | None) -> str:
    if kind == BINARY or (kind or "").startswith("categorical:"):
        return str(int(value))
    return repr(float(value))


def save_csv(ds: ExperimentDataset, path: str | Path, schema_path: str | Path) -> None:
    path, schema_path = Path(path), Path(schema_path)
    with open(schema_path, "w", encoding="utf-8") as fh:
        json.dump(ds.schema.to_dict(), fh, indent=2)
        fh.write("\n")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.schema.names) + ["T", "Y"])
        for i in range(ds.n):
            row = [
                _format_cell(ds.X[i, j], ds.schema.kinds[j])
                for j in range(ds.schema.d)
            ]
            row.append(str(int(ds.T[i])))
            row.append(repr(float(ds.Y[i])))
            writer.writerow(row)


def _parse_cell(text: str, kind: str, row: int, column: str) -> float:
    text = text.strip()
    if text == "":
        raise ValueError
    if kind == BINARY:
        if text not in ("0", "1"):
            raise ValueError
        return float(text)
    card = kind_cardinality(kind)
    if card is not None:
        v = int(text)
        if not (0 <= v < card):
            raise ValueError
        return float(v)
    return float(text)


def load_csv(path: str | Path, schema_path: str | Path) -> ExperimentDataset:
    """Parse a data file against its schema sidecar.

    Raises MissingColumnError / ValueParseError / EmptyFileError with the
    offending 1-based data-row index and column name.
    """
    path, schema_path = Path(path), Path(schema_path)
    with open(schema_path, encoding="utf-8") as fh:
        schema = FeatureSchema.from_dict(json.load(fh))

    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFileError(f"{path} is empty") from None
        expected = list(schema.names) + ["T", "Y"]
        for col in expected:
            if col not in header:
                raise MissingColumnError(f"{path} lacks required column", column=col)
        pos = {c: header.index(c) for c in expected}

        rows_X: list[list[float]] = []
        rows_T: list[int] = []
        rows_Y: list[float] = []
        for r, record in enumerate(reader, start=1):
            if len(record) != len(header):
                raise ValueParseError("wrong number of cells", row=r)
            xrow = []
            for j, name in enumerate(schema.names):
                cell = record[pos[name]]
                try:
                    xrow.append(_parse_cell(cell, schema.kinds[j], r, name))
                except ValueError:
                    raise ValueParseError(
                        f"cannot parse {cell!r} as {schema.kinds[j]}", row=r, column=name
                    ) from None
            t_cell = record[pos["T"]].strip()
            if t_cell not in ("0", "1"):
                raise ValueParseError(f"T must be 0 or 1, got {t_cell!r}", row=r, column="T")
            try:
                y = float(record[pos["Y"]])
            except ValueError:
                raise ValueParseError(
                    f"cannot parse {record[pos['Y']]!r} as a number", row=r, column="Y"
                ) from None
            rows_X.append(xrow)
            rows_T.append(int(t_cell))
            rows_Y.append(y)

    if not rows_X:
        raise EmptyFileError(f"{path} has a header but no data rows")
    return ExperimentDataset(
        schema=schema,
        X=np.asarray(rows_X, dtype=np.float64),
        T=np.asarray(rows_T, dtype=np.int8),
        Y=np.asarray(rows_Y, dtype=np.float64),
    )


# -- Splitting ----------------------------------------------------------------


def _largest_remainder(total: int, fractions: np.ndarray) -> np.ndarray:
    """Integer allocation of ``total`` proportional to ``fractions``."""
    raw = fractions * total
    sizes = np.floor(raw).astype(np.int64)
    short = total - sizes.sum()
    order = np.argsort(-(raw - sizes), kind="stable")
    sizes[order[:short]] += 1
    return sizes


def split(
    ds: ExperimentDataset,
    fractions: tuple[float, float, float],
    seed: int = 0,
) -> tuple[ExperimentDataset, ExperimentDataset, ExperimentDataset]:
    """Disjoint, exhaustive, seed-deterministic partition, stratified on T.

    Overall split sizes follow the fractions exactly (largest remainder);
    within that, treated and control rows are allocated proportionally so
    the treatment ratio is preserved per split.
    """
    fr = np.asarray(fractions, dtype=np.float64)
    if fr.shape != (3,) or (fr < 0).any() or abs(fr.sum() - 1.0) > 1e-9:
        raise ValueError("fractions must be three nonnegative values summing to 1")

    rng = np.random.default_rng(seed)
    sizes = _largest_remainder(ds.n, fr)

    idx1 = np.flatnonzero(ds.T == 1)
    idx0 = np.flatnonzero(ds.T == 0)
    sizes1 = _largest_remainder(len(idx1), fr)
    sizes0 = sizes - sizes1
    # Guard against a tiny arm pushing an allocation negative.
    for k in range(3):
        while sizes0[k] < 0:
            donor = int(np.argmax(sizes0))
            sizes0[donor] -= 1
            sizes1[donor] += 1
            sizes0[k] += 1
            sizes1[k] -= 1

    rng.shuffle(idx1)
    rng.shuffle(idx0)
    parts = []
    o1 = o0 = 0
    for k in range(3):
        take = np.concatenate([idx1[o1 : o1 + sizes1[k]], idx0[o0 : o0 + sizes0[k]]])
        o1 += sizes1[k]
        o0 += sizes0[k]
        take.sort()
        parts.append(ds.subset(take))
    return parts[0], parts[1], parts[2]
