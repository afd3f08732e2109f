"""Sampling periodic diagonal-group orbits in the space of unimodular lattices.

A point of the orbit ``A x_alpha`` is the lattice spanned by the rows of
``g diag(e^t1, ..., e^td) s^-1`` with ``sum t = 0``, scaled to covolume one.
The orbit is a compact torus on which ``A`` acts by translation, so uniform
samples of ``t`` from a large box average to its invariant measure.

Entries of ``g diag(e^t)`` span many orders of magnitude for large ``t``, so
each sample is rounded to a fixed-point integer matrix with enough fractional
bits to survive reduction, reduced with integral LLL, and only then handed to
the float enumerator.  Boundary cases in the point counts are settled by the
certified comparisons in :mod:`orbitlab.lattice`.
"""

from __future__ import annotations

import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .errors import ConfigError, PrecisionExhausted, ScheduleViolation
from .lattice import LatticeBasis, lll_int, observables
from .numfield import (
    START_BITS,
    OrbitMatrix,
    field_norm,
    fundamental_unit_quadratic,
    orbit_matrix,
    rescale_basis,
    stabilizing_unit_power,
)

NORM = "euclidean"
_GUARD_BITS = 64
_HAAR_STREAM = 0x4A11


@dataclass(frozen=True)
class DiagonalParameter:
    """Trace-zero diagonal coordinates; the last entry is derived from the others."""

    t: tuple

    @classmethod
    def from_free(cls, free) -> "DiagonalParameter":
        free = [float(x) for x in free]
        return cls(tuple(free) + (-math.fsum(free),))

    def __post_init__(self):
        if abs(math.fsum(float(x) for x in self.t)) > 1e-9 * max(1.0, max(abs(float(x)) for x in self.t)):
            raise ConfigError(f"diagonal parameter {self.t} is not trace-zero")


@dataclass(frozen=True)
class OrbitSamplePlan:
    T: float = 20.0
    N: int = 20_000
    seed: int = 0
    radii: tuple = (0.5, 1.0, 1.5, 2.0)
    s: tuple | None = None
    period: float | None = None  # d = 2 only: fold t into one known period

    def __post_init__(self):
        if not self.T >= 0 or self.N < 1:
            raise ConfigError("plan needs T >= 0 and N >= 1")
        if self.s is not None:
            det = float(np.linalg.det(np.array(self.s, dtype=float)))
            if det == 0:
                raise ConfigError("translate s is not invertible")


@dataclass(frozen=True)
class LatticeObservables:
    index: int
    t: tuple
    lambda1: float
    counts: tuple
    radii: tuple = field(default=(), repr=False)

    def record(self) -> dict:
        rec = {"lambda1": self.lambda1}
        for r, c in zip(self.radii, self.counts):
            rec[f"N_{r}"] = float(c)
        return rec


# ---------------------------------------------------------------------------
# fixed-point evaluation


def _mp_matrix(g, prec: int):
    """Rows of ``g`` as mpf at ``prec`` bits; accepts OrbitMatrix, exact or float rows."""
    with mpmath.workprec(prec):
        if isinstance(g, OrbitMatrix):
            if g.precision_bits < prec:
                g = orbit_matrix(list(g.source_basis), prec)
            return [[mpmath.mpf(e.mid.numerator) / e.mid.denominator for e in row] for row in g.entries]
        out = []
        for row in g:
            r = []
            for x in row:
                if isinstance(x, (int, Fraction)):
                    x = Fraction(x)
                    r.append(mpmath.mpf(x.numerator) / x.denominator)
                else:
                    r.append(mpmath.mpf(x))
            out.append(r)
        return out


def _mp_det(rows):
    return mpmath.det(mpmath.matrix(rows))


def _normalized(rows, prec: int):
    with mpmath.workprec(prec):
        d = len(rows)
        det = abs(_mp_det(rows))
        if det == 0:
            raise PrecisionExhausted("orbit matrix is numerically singular")
        c = mpmath.power(det, mpmath.mpf(-1) / d)
        return [[c * x for x in row] for row in rows]


def _inverse_normalized(s, prec: int):
    with mpmath.workprec(prec):
        rows = _normalized(_mp_matrix(s, prec), prec)
        inv = mpmath.matrix(rows) ** -1
        return [[inv[i, j] for j in range(len(rows))] for i in range(len(rows))]


def _flowed_rows(G, t, S_inv, prec: int):
    """Rows of G diag(e^t) S_inv in mpf arithmetic at ``prec`` bits."""
    with mpmath.workprec(prec):
        e = [mpmath.exp(x) for x in t]
        rows = [[G[i][j] * e[j] for j in range(len(e))] for i in range(len(G))]
        if S_inv is not None:
            d = len(rows)
            rows = [[mpmath.fsum(rows[i][k] * S_inv[k][j] for k in range(d)) for j in range(d)]
                    for i in range(d)]
        return rows


def _fixed_basis(rows, prec: int) -> LatticeBasis:
    """Round ``rows`` to integers over 2^F and LLL-reduce them exactly.

    F leaves ``_GUARD_BITS`` of accuracy in the reduced basis after the
    unimodular transform, whose entries are at most about the largest entry
    over the smallest reduced vector.
    """
    with mpmath.workprec(prec):
        top = max(abs(x) for r in rows for x in r)
        E = max(0, int(mpmath.ceil(mpmath.log(top, 2))))
        F = _GUARD_BITS + 2 * E + 8
        if F + E + 16 > prec:
            raise PrecisionExhausted(f"need {F + E + 16} working bits, have {prec}")
        ints = [[int(mpmath.nint(mpmath.ldexp(x, F))) for x in r] for r in rows]
    red, U = lll_int(ints)
    umax = max(sum(abs(x) for x in r) for r in U)
    return LatticeBasis.from_fixed(red, F, Fraction(umax))


def _required_prec(G, t_max: float, base: int) -> int:
    top = max(abs(float(x)) for r in G for x in r)
    E = max(0, math.ceil(math.log2(max(top, 1.0)) + t_max / math.log(2))) + 4
    return max(base, _GUARD_BITS + 3 * E + 48)


def _observe(rows, prec, radii):
    b = _fixed_basis(rows, prec)
    lam1, counts = observables(b, radii, NORM)
    return lam1, tuple(counts)


def _observe_batch(job):
    G, S_inv, ts, radii, prec = job
    out = []
    for t in ts:
        with mpmath.workprec(prec):
            tt = [mpmath.mpf(x) for x in t]
        out.append(_observe(_flowed_rows(G, tt, S_inv, prec), prec, radii))
    return out


def _run_batches(G, S_inv, ts, radii, prec, jobs: int):
    """Observables for every t, order preserved whatever the worker count."""
    if jobs <= 1 or len(ts) < 2:
        return _observe_batch((G, S_inv, ts, radii, prec))
    chunk = max(1, math.ceil(len(ts) / (4 * jobs)))
    parts = [(G, S_inv, ts[i:i + chunk], radii, prec) for i in range(0, len(ts), chunk)]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        res = list(ex.map(_observe_batch, parts))
    return [x for part in res for x in part]


# ---------------------------------------------------------------------------
# public operations


def apply_flow(g, t, bits: int = START_BITS) -> LatticeBasis:
    """Covolume-one basis with rows ``g diag(e^t)`` (not reduced)."""
    t = t.t if isinstance(t, DiagonalParameter) else tuple(t)
    DiagonalParameter(tuple(float(x) for x in t))
    G0 = _mp_matrix(g, 64)
    prec = _required_prec(G0, max(abs(float(x)) for x in t), bits)
    G = _normalized(_mp_matrix(g, prec), prec)
    with mpmath.workprec(prec):
        tt = [mpmath.mpf(x) for x in t]
    rows = _flowed_rows(G, tt, None, prec)
    F = prec - 32
    with mpmath.workprec(prec):
        ints = [[int(mpmath.nint(mpmath.ldexp(x, F))) for x in r] for r in rows]
    return LatticeBasis.from_fixed(ints, F, Fraction(1))


def sample_t(seed: int, index: int, d: int, T: float) -> tuple:
    """The index-th trace-zero sample from ``[-T, T]^(d-1)``; counter-based, so any
    index can be drawn independently of the others."""
    bits = np.random.Philox(key=int(seed) & ((1 << 128) - 1), counter=[0, index, 0, 0]).random_raw(d - 1)
    free = [T * (2.0 * math.ldexp(int(x) >> 11, -53) - 1.0) for x in bits]
    return tuple(free) + (-math.fsum(free),)


def _fold(t, period: float):
    return (math.fmod(t[0], period), -math.fmod(t[0], period))


def sample_orbit(g, plan: OrbitSamplePlan, jobs: int = 1, bits: int = START_BITS):
    """Observables at ``plan.N`` counter-seeded points of the box ``[-T, T]^(d-1)``."""
    G0 = _mp_matrix(g, 64)
    d = len(G0)
    ts = [sample_t(plan.seed, i, d, plan.T) for i in range(plan.N)]
    evals = ts
    t_max = plan.T * (d - 1)
    if plan.period is not None:
        if d != 2:
            raise ConfigError("period folding is defined for d = 2 only")
        evals = [_fold(t, plan.period) for t in ts]
        t_max = min(t_max, plan.period)
    prec = _required_prec(G0, t_max, bits)
    G = _normalized(_mp_matrix(g, prec), prec)
    S_inv = _inverse_normalized(plan.s, prec) if plan.s is not None else None
    radii = tuple(plan.radii)
    res = _run_batches(G, S_inv, evals, radii, prec, jobs)
    return [LatticeObservables(i, ts[i], lam, cnt, radii) for i, (lam, cnt) in enumerate(res)]


def orbit_period_d2(basis, unit=None) -> tuple[float, int]:
    """Length of the d = 2 orbit circle in the flow time tau, and the unit power used."""
    fld = basis[0].field
    if fld.degree != 2:
        raise ConfigError("exact orbit period is implemented for d = 2")
    if unit is None:
        D = _squarefree_part(fld)
        unit = fundamental_unit_quadratic(D, fld)
    k = stabilizing_unit_power(basis, unit)
    sign = field_norm(unit) ** k
    with mpmath.workprec(128):
        reg = mpmath.log(abs(unit.real(256).to_mpf(256)))
    period = float(k * reg * (2 if sign == -1 else 1))
    return period, k


def _squarefree_part(fld) -> int:
    import sympy

    c0, c1, c2 = (Fraction(c) for c in fld.min_poly)
    disc = c1 * c1 - 4 * c0 * c2
    n = disc.numerator * disc.denominator
    D = 1
    for p, e in sympy.factorint(n).items():
        if e % 2:
            D *= p
    return D


def exact_period_average(basis, radii=(0.8, 1.0, 1.5), M: int = 10_000, unit=None,
                         jobs: int = 1, bits: int = START_BITS) -> dict:
    """Equal-weight M-point quadrature of the observables over one orbit period
    (the trapezoidal rule for a periodic integrand)."""
    period, k = orbit_period_d2(basis, unit)
    g = orbit_matrix(basis, bits)
    G0 = _mp_matrix(g, 64)
    prec = _required_prec(G0, period, bits)
    G = _normalized(_mp_matrix(g, prec), prec)
    with mpmath.workprec(prec):
        P = mpmath.mpf(period)
        ts = [(P * i / M, -P * i / M) for i in range(M)]
    radii = tuple(radii)
    res = _run_batches(G, None, ts, radii, prec, jobs)
    lam = math.fsum(r[0] for r in res) / M
    counts = [math.fsum(r[1][j] for r in res) / M for j in range(len(radii))]
    return {"period": period, "unit_power": k, "M": M, "lambda1": lam,
            "counts": dict(zip((str(r) for r in radii), counts))}


def haar_reference_d2(N: int, y: float, seed: int, radii=(0.8, 1.0, 1.5), jobs: int = 1):
    """Lattices along the closed horocycle of height ``y``:
    rows ``(sqrt y, x / sqrt y)`` and ``(0, 1 / sqrt y)``, x uniform in [0, 1).

    Long closed horocycles equidistribute in the space of unimodular planar
    lattices, so for small y these samples stand in for Haar measure.
    """
    if not 0 < y <= 1e-3:
        raise ConfigError("horocycle height must satisfy 0 < y <= 1e-3")
    radii = tuple(radii)
    out = []
    prec = 192 + 2 * math.ceil(-math.log2(y))
    xs = []
    for i in range(N):
        raw = np.random.Philox(key=int(seed), counter=[0, i, _HAAR_STREAM, 0]).random_raw(1)[0]
        xs.append(math.ldexp(int(raw) >> 11, -53))
    jobs_in = []
    with mpmath.workprec(prec):
        ry = mpmath.sqrt(mpmath.mpf(y))
        for x in xs:
            jobs_in.append([[ry, mpmath.mpf(x) / ry], [mpmath.mpf(0), 1 / ry]])
    res = _run_rows(jobs_in, radii, prec, jobs)
    for i, (lam, cnt) in enumerate(res):
        out.append(LatticeObservables(i, (xs[i],), lam, cnt, radii))
    return out


def _rows_batch(job):
    rows_list, radii, prec = job
    return [_observe(rows, prec, radii) for rows in rows_list]


def _run_rows(rows_list, radii, prec, jobs):
    if jobs <= 1:
        return _rows_batch((rows_list, radii, prec))
    chunk = max(1, math.ceil(len(rows_list) / (4 * jobs)))
    parts = [(rows_list[i:i + chunk], radii, prec) for i in range(0, len(rows_list), chunk)]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        res = list(ex.map(_rows_batch, parts))
    return [x for part in res for x in part]


# ---------------------------------------------------------------------------
# trends


def check_schedule(schedule) -> None:
    """Every pairwise gap |i_j - i_r| must grow strictly along the schedule."""
    schedule = [tuple(int(x) for x in s) for s in schedule]
    if len(schedule) < 2:
        raise ConfigError("schedule needs at least two exponent vectors")
    d = len(schedule[0])
    if any(len(s) != d for s in schedule):
        raise ConfigError("exponent vectors differ in length")
    for j in range(d):
        for r in range(j + 1, d):
            gaps = [abs(s[j] - s[r]) for s in schedule]
            if any(b <= a for a, b in zip(gaps, gaps[1:])):
                raise ScheduleViolation(
                    f"gap between coordinates {j} and {r} is not strictly increasing: {gaps}")


def level_measures(basis, m: int, schedule, plan: OrbitSamplePlan, jobs: int = 1,
                   fold_period: bool = True, bits: int = START_BITS):
    """One list of observables per schedule entry.

    For d = 2 with ``fold_period`` the box is widened to a whole number of
    orbit periods and samples are folded into one period, which makes the
    box average exactly the orbit average.
    """
    from dataclasses import replace

    check_schedule(schedule)
    out = []
    for n, i_vec in enumerate(schedule):
        bn = rescale_basis(basis, m, i_vec)
        g = orbit_matrix(bn, bits)
        p = replace(plan, seed=plan.seed + n)
        if fold_period and g.dim == 2:
            period, _ = orbit_period_d2(bn)
            reps = max(1, math.ceil(2 * plan.T / period))
            p = replace(p, T=reps * period / 2, period=period)
        out.append(sample_orbit(g, p, jobs=jobs, bits=bits))
    return out


def equidist_trend(basis, m: int, schedule, plan: OrbitSamplePlan, reference=None,
                   features=("lambda1",), distance: str = "w1", jobs: int = 1,
                   fold_period: bool = True, bits: int = START_BITS) -> dict:
    """Distances of the level measures to a reference, plus consecutive-level distances.

    ``reference`` is a list of observables (for d = 2 usually the horocycle
    reference); without one, the largest-n level serves as the reference and
    the report says so.
    """
    from . import stats

    levels = level_measures(basis, m, schedule, plan, jobs, fold_period, bits)
    measures = [stats.empirical([o.record() for o in lv], metadata={"n": n, "seed": plan.seed + n})
                for n, lv in enumerate(levels)]
    if reference is None:
        ref = measures[-1]
        ref_kind = "largest-n level (Cauchy stabilization)"
    else:
        ref = stats.empirical([o.record() for o in reference], metadata={"kind": "reference"})
        ref_kind = "supplied reference"
    dist = stats.DISTANCES[distance]
    consecutive = {f: [dist(a, b, f) for a, b in zip(measures, measures[1:])] for f in features}
    report = {
        "schedule": [list(map(int, s)) for s in schedule],
        "m": int(m),
        "plan": {"T": plan.T, "N": plan.N, "seed": plan.seed, "radii": list(plan.radii)},
        "reference": ref_kind,
        "consecutive": consecutive,
    }
    if len(measures) >= 3:
        report["trend"] = stats.trend_report(measures, ref, features, labels=list(range(len(measures))),
                                             distance=distance, seed=plan.seed)
    else:
        report["distances"] = {f: [dist(x, ref, f) for x in measures] for f in features}
    return report


# ---------------------------------------------------------------------------
# output


def observables_csv(obs, d: int | None = None) -> str:
    if not obs:
        return ""
    d = len(obs[0].t) if d is None else d
    radii = obs[0].radii
    buf = io.StringIO()
    buf.write(",".join(["index"] + [f"t{j + 1}" for j in range(d)] + ["lambda1"]
                       + [f"N_{r}" for r in radii]) + "\n")
    for o in obs:
        buf.write(",".join([str(o.index)] + [repr(float(x)) for x in o.t] + [repr(float(o.lambda1))]
                           + [str(c) for c in o.counts]) + "\n")
    return buf.getvalue()


def summary_json(obs) -> str:
    n = len(obs)
    radii = obs[0].radii if obs else ()
    data = {
        "N": n,
        "mean_lambda1": math.fsum(o.lambda1 for o in obs) / n if n else None,
        "mean_counts": {str(r): math.fsum(o.counts[j] for o in obs) / n for j, r in enumerate(radii)},
    }
    return json.dumps(data, sort_keys=True, indent=2) + "\n"
