"""Empirical measures over feature records, and the distances used to compare them.

A measure is a finite weighted set of atoms. Each atom carries named real
features (``lambda1``, ``w_norm`` ...) and named categorical features (residue
classes). Distances act on one feature at a time: weak-* convergence is
only ever claimed feature by feature.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from numbers import Real

import numpy as np

from .errors import ConfigError, SchemaMismatch

REAL = "real"
CATEGORICAL = "categorical"
_WEIGHT_TOL = 2.0 ** -52


@dataclass(frozen=True)
class EmpiricalMeasure:
    schema: dict
    columns: dict
    weights: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.weights)

    def feature(self, name: str, kind: str | None = None):
        if name not in self.schema:
            raise SchemaMismatch(f"feature {name!r} not in schema {sorted(self.schema)}")
        if kind is not None and self.schema[name] != kind:
            raise SchemaMismatch(f"feature {name!r} is {self.schema[name]}, need {kind}")
        return self.columns[name]

    def to_csv(self) -> str:
        names = sorted(self.schema)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(names + ["weight"])
        for i in range(len(self)):
            row = []
            for n in names:
                x = self.columns[n][i]
                row.append(repr(float(x)) if self.schema[n] == REAL else str(x))
            w.writerow(row + [repr(float(self.weights[i]))])
        return buf.getvalue()

    def schema_json(self) -> str:
        return json.dumps({"schema": self.schema, "metadata": self.metadata, "atoms": len(self)},
                          sort_keys=True, indent=2)

    def save(self, csv_path, schema_path=None) -> None:
        from pathlib import Path

        csv_path = Path(csv_path)
        csv_path.write_text(self.to_csv())
        schema_path = Path(schema_path) if schema_path else csv_path.with_suffix(".schema.json")
        schema_path.write_text(self.schema_json() + "\n")

    @classmethod
    def load(cls, csv_path, schema_path=None) -> "EmpiricalMeasure":
        from pathlib import Path

        csv_path = Path(csv_path)
        schema_path = Path(schema_path) if schema_path else csv_path.with_suffix(".schema.json")
        meta = json.loads(schema_path.read_text())
        rows = list(csv.DictReader(io.StringIO(csv_path.read_text())))
        schema = meta["schema"]
        if rows and set(rows[0]) != set(schema) | {"weight"}:
            raise SchemaMismatch("CSV header does not match schema sidecar")
        cols = {}
        for n, kind in schema.items():
            vals = [r[n] for r in rows]
            cols[n] = np.array([float(v) for v in vals]) if kind == REAL else tuple(vals)
        weights = np.array([float(r["weight"]) for r in rows])
        return cls(schema, cols, weights, meta.get("metadata", {}))


def _kind(x) -> str:
    return REAL if isinstance(x, Real) and not isinstance(x, bool) else CATEGORICAL


def empirical(records, schema: dict | None = None, weights=None, metadata=None) -> EmpiricalMeasure:
    """Uniform-weight measure (or the given weights) with one atom per record."""
    records = list(records)
    if not records:
        raise ConfigError("empirical measure needs at least one record")
    if schema is None:
        schema = {k: _kind(v) for k, v in records[0].items()}
    keys = set(schema)
    for r in records:
        if set(r) != keys:
            raise SchemaMismatch(f"record keys {sorted(r)} differ from schema {sorted(keys)}")
    cols = {}
    for n, kind in schema.items():
        if kind == REAL:
            cols[n] = np.array([float(r[n]) for r in records])
        elif kind == CATEGORICAL:
            cols[n] = tuple(str(r[n]) for r in records)
        else:
            raise SchemaMismatch(f"unknown feature kind {kind!r}")
    if weights is None:
        w = np.full(len(records), 1.0 / len(records))
    else:
        w = np.asarray(weights, dtype=float)
        if len(w) != len(records) or (w < 0).any():
            raise ConfigError("weights must be nonnegative, one per record")
        w = w / w.sum()
    if abs(w.sum() - 1.0) > _WEIGHT_TOL * len(w):
        raise ConfigError("weights do not sum to 1")
    return EmpiricalMeasure(dict(schema), cols, w, dict(metadata or {}))


def _check_pair(m1, m2, feature, kind):
    if m1.schema.get(feature) != m2.schema.get(feature):
        raise SchemaMismatch(f"feature {feature!r} has different kinds in the two measures")
    return np.asarray(m1.feature(feature, kind)), np.asarray(m2.feature(feature, kind))


def _cdfs(x1, w1, x2, w2):
    grid = np.union1d(x1, x2)
    o1, o2 = np.argsort(x1, kind="stable"), np.argsort(x2, kind="stable")
    c1 = np.concatenate([[0.0], np.cumsum(w1[o1])])
    c2 = np.concatenate([[0.0], np.cumsum(w2[o2])])
    f1 = c1[np.searchsorted(x1[o1], grid, side="right")]
    f2 = c2[np.searchsorted(x2[o2], grid, side="right")]
    return grid, f1, f2


def ks_distance(m1: EmpiricalMeasure, m2: EmpiricalMeasure, feature: str) -> float:
    """sup_x |F1(x) - F2(x)| for a real feature."""
    x1, x2 = _check_pair(m1, m2, feature, REAL)
    _, f1, f2 = _cdfs(x1, m1.weights, x2, m2.weights)
    return float(np.max(np.abs(f1 - f2)))


def wasserstein1(m1: EmpiricalMeasure, m2: EmpiricalMeasure, feature: str) -> float:
    """Integral of |F1 - F2| over the line for a real feature."""
    x1, x2 = _check_pair(m1, m2, feature, REAL)
    grid, f1, f2 = _cdfs(x1, m1.weights, x2, m2.weights)
    if len(grid) < 2:
        return 0.0
    return float(np.sum(np.abs(f1 - f2)[:-1] * np.diff(grid)))


def categorical_tv(m1: EmpiricalMeasure, m2: EmpiricalMeasure, feature: str) -> float:
    """Total variation distance of the induced distributions on labels."""
    x1, x2 = _check_pair(m1, m2, feature, CATEGORICAL)
    p1: dict = {}
    p2: dict = {}
    for lab, w in zip(x1, m1.weights):
        p1[lab] = p1.get(lab, 0.0) + w
    for lab, w in zip(x2, m2.weights):
        p2[lab] = p2.get(lab, 0.0) + w
    labels = sorted(set(p1) | set(p2))
    return 0.5 * float(sum(abs(p1.get(k, 0.0) - p2.get(k, 0.0)) for k in labels))


DISTANCES = {"ks": ks_distance, "w1": wasserstein1, "tv": categorical_tv}


def resample(m: EmpiricalMeasure, rng: np.random.Generator) -> EmpiricalMeasure:
    """Bootstrap copy of ``m``: atoms drawn with replacement according to the weights."""
    idx = rng.choice(len(m), size=len(m), p=m.weights)
    cols = {n: (c[idx] if isinstance(c, np.ndarray) else tuple(c[i] for i in idx))
            for n, c in m.columns.items()}
    return EmpiricalMeasure(m.schema, cols, np.full(len(m), 1.0 / len(m)), m.metadata)


def bootstrap_noise(m: EmpiricalMeasure, reference: EmpiricalMeasure, feature: str,
                    distance: str = "w1", seed: int = 0, n_boot: int = 40) -> float:
    """Standard deviation of distance(resampled m, reference); deterministic in ``seed``."""
    dist = DISTANCES[distance]
    rng = np.random.Generator(np.random.Philox(key=seed))
    vals = [dist(resample(m, rng), reference, feature) for _ in range(n_boot)]
    return float(np.std(vals, ddof=1)) if n_boot > 1 else 0.0


def trend_verdict(distances, band: float) -> str:
    """'converged' if everything sits inside the band, 'decreasing' if the sequence is
    nonincreasing up to at most one inversion no larger than the band, else
    'not decreasing'."""
    d = list(distances)
    if all(x <= band for x in d):
        return "converged"
    ups = [(b - a) for a, b in zip(d, d[1:]) if b > a]
    if len(ups) <= 1 and all(u <= band for u in ups):
        return "decreasing"
    return "not decreasing"


def trend_report(measures, reference: EmpiricalMeasure, features, labels=None,
                 distance: str = "w1", seed: int = 0, n_boot: int = 40,
                 band: float | None = None, band_sigmas: float = 2.0) -> dict:
    """Distances of each measure to ``reference``, per feature, with a monotonicity verdict.

    The noise band is ``band_sigmas`` times the largest bootstrap standard deviation
    across the sequence unless an explicit ``band`` is given.
    """
    measures = list(measures)
    if len(measures) < 3:
        raise ConfigError("a trend needs at least 3 measures")
    labels = list(labels) if labels is not None else list(range(len(measures)))
    dist = DISTANCES[distance]
    out = {"distance": distance, "labels": labels, "features": {},
           "note": "per-feature distances only; no claim of full weak-* convergence"}
    for fi, feat in enumerate(features):
        ds = [dist(m, reference, feat) for m in measures]
        if band is None:
            sig = [bootstrap_noise(m, reference, feat, distance, seed + 1009 * fi + i, n_boot)
                   for i, m in enumerate(measures)]
            b = band_sigmas * max(sig)
        else:
            sig, b = None, float(band)
        out["features"][feat] = {
            "distances": ds,
            "bootstrap_sd": sig,
            "band": b,
            "verdict": trend_verdict(ds, b),
            "last_over_first": ds[-1] / ds[0] if ds[0] > 0 else None,
        }
    return out


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"
