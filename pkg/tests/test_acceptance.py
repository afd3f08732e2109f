"""Acceptance criteria 1-7, each at its stated scale and tolerance.

Every run goes through the ``orbitlab`` CLI with ``--emit-config``, in a
directory of its own, so criterion 7 can re-execute it from the emitted
RunConfig and compare artifact bytes.  Each criterion prints one PASS/FAIL
line; the lines are repeated in the terminal summary.
"""

import csv
import io
import json
import math
import random
import shutil
import time
from fractions import Fraction
from math import gcd, isqrt
from pathlib import Path

import mpmath
import pytest

from orbitlab.bestapprox import TargetVector, best_approximations, directional_lattice
from orbitlab.cli import main
from orbitlab.lattice import hnf_equal
from orbitlab.numfield import load_field
from orbitlab.orbitflow import exact_period_average
from orbitlab.padic import (CPrime, GoodFunctionSpec, PadicInt, check_good, padic_exp, padic_log,
                            random_spec, sublevel_measure, tight_constant, valuation_table,
                            weak_ivt_check)

ROOT = Path(__file__).resolve().parent.parent
FIELDS = ROOT / "data" / "fields"
BASES = ROOT / "data" / "bases"
PADIC = ROOT / "data" / "padic"
SEED = 20240607
JOBS = 1

pytestmark = pytest.mark.slow


class Run:
    """One CLI invocation in its own directory, with its emitted RunConfig."""

    def __init__(self, root: Path, name: str, command: str, args: list, outputs: dict):
        self.dir = root / name
        self.dir.mkdir(parents=True)
        self.command = command
        self.config = self.dir / "config.json"
        argv = [command] + [str(a).format(dir=self.dir) for a in args]
        for flag, fname in outputs.items():
            argv += [flag, str(self.dir / fname)]
        argv += ["--emit-config", str(self.config), "--jobs", str(JOBS)]
        t0 = time.perf_counter()
        self.code = main(argv)
        self.seconds = time.perf_counter() - t0

    def artifacts(self) -> dict:
        return {p.name: p.read_bytes() for p in sorted(self.dir.iterdir()) if p != self.config}

    def text(self, name: str) -> str:
        return (self.dir / name).read_text()


@pytest.fixture(scope="module")
def root(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


def _q_column(text: str):
    rows = list(csv.DictReader(io.StringIO(text)))
    return [int(r["q"]) for r in rows], [tuple(int(x) for x in r["p"].split(";")) for r in rows]


def _inversions_ok(ds, band):
    ups = [b - a for a, b in zip(ds, ds[1:]) if b > a]
    return len(ups) <= 1 and all(u <= band for u in ups)


# ---------------------------------------------------------------------------
# criterion 1: best approximations against continued fractions and brute force

QUADRATIC = {
    # name: (field file, generator expression, (P, D, Q) with v = (P + sqrt D) / Q)
    "sqrt2-1": ("sqrt2.toml", "b-1", (-1, 2, 1)),
    "phi-1": ("golden.toml", "b-1", (-1, 5, 2)),
    "sqrt3-1": ("sqrt3.toml", "b-1", (-1, 3, 1)),
}
MAX_Q = 10_000


def partial_quotients(P, D, Q):
    """Partial quotients of (P + sqrt D) / Q by the exact integer recursion."""
    assert (D - P * P) % Q == 0
    s = isqrt(D)
    while True:
        a = (P + s) // Q if Q > 0 else (P + s + 1) // Q
        yield a
        P = a * Q - P
        Q = (D - P * P) // Q


def cf_denominators(P, D, Q, max_q):
    """Distinct convergent denominators q_n <= max_q (q_0 = 1, q_n = a_n q_(n-1) + q_(n-2))."""
    quotients = partial_quotients(P, D, Q)
    next(quotients)  # the integer part does not enter the denominators
    qs, q_prev, q = [1], 0, 1
    for a in quotients:
        q_prev, q = q, a * q + q_prev
        if q > max_q:
            return qs
        if q != qs[-1]:
            qs.append(q)


def brute_force_records(P, D, Q, max_q):
    """Every q <= max_q whose distance ||q v|| beats all smaller q (50 digits)."""
    mpmath.mp.dps = 50
    v = (P + mpmath.sqrt(D)) / Q
    best, out, ties = mpmath.inf, [], 0
    for q in range(1, max_q + 1):
        x = q * v
        dist = abs(x - mpmath.nint(x))
        if dist < best:
            best = dist
            out.append(q)
        elif abs(dist - best) < mpmath.mpf(10) ** -40:
            ties += 1
    return out, ties


@pytest.fixture(scope="module")
def runs_c1(root):
    return {name: Run(root, f"c1-{name}", "best-approx",
                      ["--field", FIELDS / fld, "--gens", gen, "--max-q", MAX_Q], {"--out": "records.csv"})
            for name, (fld, gen, _) in QUADRATIC.items()}


@pytest.mark.acceptance(1)
def test_criterion_1_best_approximation_oracles(runs_c1, verdict):
    t0 = time.perf_counter()
    details, ok = [], True
    for name, (_, _, pdq) in QUADRATIC.items():
        run = runs_c1[name]
        qs, _ = _q_column(run.text("records.csv"))
        cf = cf_denominators(*pdq, MAX_Q)
        brute, ties = brute_force_records(*pdq, MAX_Q)
        good = run.code == 0 and qs == cf == brute and ties == 0
        ok &= good
        details.append(f"{name}: {len(qs)} records, q_max={qs[-1] if qs else None}")
    elapsed = time.perf_counter() - t0 + sum(r.seconds for r in runs_c1.values())
    ok &= elapsed < 10
    verdict(ok, f"{'; '.join(details)}; {elapsed:.1f}s (limit 10s)")
    assert ok


# ---------------------------------------------------------------------------
# criterion 2: structural invariants over the corpus

CORPUS = [
    # (name, d, CLI target arguments)
    ("sqrt2", 2, ["--field", FIELDS / "sqrt2.toml", "--gens", "b"]),
    ("golden", 2, ["--field", FIELDS / "golden.toml", "--gens", "b"]),
    ("sqrt3-1", 2, ["--field", FIELDS / "sqrt3.toml", "--gens", "b-1"]),
    ("cubic-beta", 2, ["--field", FIELDS / "cubic49.toml", "--gens", "b"]),
    ("generic-d2", 2, ["--generic-seed", SEED, "--target-index", 0, "--dim", 1]),
    ("cubic-beta-beta2", 3, ["--field", FIELDS / "cubic49.toml", "--gens", "b,b^2"]),
    ("cubic-2beta-4beta2", 3, ["--field", FIELDS / "cubic49.toml", "--gens", "2*b,4*b^2"]),
    ("quartic-g-g2", 3, ["--field", FIELDS / "quartic.toml", "--gens", "b,b^2"]),
    ("generic-d3", 3, ["--generic-seed", SEED, "--target-index", 1, "--dim", 2]),
    ("quartic-g-g2-g3", 4, ["--field", FIELDS / "quartic.toml", "--gens", "b,b^2,b^3"]),
    ("generic-d4", 4, ["--generic-seed", SEED, "--target-index", 2, "--dim", 3]),
]
RECORDS = 300


def _api_target(args, norm):
    a = [str(x) for x in args]
    if a[0] == "--generic-seed":
        return TargetVector.generic(int(a[1]), int(a[3]), int(a[5]), norm)
    fld = load_field(a[1])
    return TargetVector.algebraic([fld.parse(g) for g in a[3].split(",")], norm)


@pytest.fixture(scope="module")
def runs_c2(root):
    return {(name, norm): Run(root, f"c2-{name}-{norm}", "best-approx",
                              args + ["--norm", norm, "--max-k", RECORDS], {"--out": "records.csv"})
            for name, _, args in CORPUS for norm in ("sup", "euclidean")}


@pytest.mark.acceptance(2)
def test_criterion_2_structural_invariants(runs_c2, verdict):
    t0 = time.perf_counter()
    violations, total, dims = [], 0, set()
    for name, d, args in CORPUS:
        for norm in ("sup", "euclidean"):
            run = runs_c2[(name, norm)]
            recs = best_approximations(_api_target(args, norm), max_k=RECORDS)
            total += len(recs)
            dims.add(d)
            tag = f"{name}/{norm}"
            if run.code != 0 or _q_column(run.text("records.csv")) != ([r.q for r in recs], [r.p for r in recs]):
                violations.append(f"{tag}: CLI output differs from library")
            if len(recs) < RECORDS:
                violations.append(f"{tag}: only {len(recs)} records")
            for a, b in zip(recs, recs[1:]):
                if not b.q > a.q:
                    violations.append(f"{tag}: q not increasing at k={b.k}")
                if not b.err.hi < a.err.lo:
                    violations.append(f"{tag}: err not certified decreasing at k={b.k}")
            for r in recs:
                if gcd(*r.p, r.q) != 1:
                    violations.append(f"{tag}: gcd != 1 at k={r.k}")
                L = directional_lattice(r)
                if L.covolume() != 1:
                    violations.append(f"{tag}: covolume {L.covolume()} at k={r.k}")
                if d == 2 and not hnf_equal(L.basis(), [[1]]):
                    violations.append(f"{tag}: Lambda_k != Z at k={r.k}")
    elapsed = time.perf_counter() - t0 + sum(r.seconds for r in runs_c2.values())
    ok = not violations and dims == {2, 3, 4} and elapsed < 300
    verdict(ok, f"{len(CORPUS)} targets x 2 norms, d in {sorted(dims)}, {total} records, "
                f"{len(violations)} violations; {elapsed:.1f}s (limit 300s)")
    assert ok, violations[:10]


# ---------------------------------------------------------------------------
# criterion 3: p-adic suite


@pytest.fixture(scope="module")
def runs_c3(root):
    return {
        "s": Run(root, "c3-s", "padic-good", ["--spec", PADIC / "s_p5.json", "--C", 1, "--alpha", 1, "--ivt"],
                 {"--out": "report.json"}),
        "s2": Run(root, "c3-s2", "padic-good", ["--spec", PADIC / "s2_p3.json", "--C", 1, "--alpha", 1],
                  {"--out": "report.json"}),
    }


def _exp_log_checks(n: int):
    """Isometry |exp(y) - 1| = |y| and log(exp(y)) = y on n random inputs."""
    rng = random.Random(SEED)
    bad = 0
    for i in range(n):
        p = (2, 3, 5, 7)[i % 4]
        N = 8
        k = 2 if p == 2 else 1
        y = PadicInt(p, N, p ** k * rng.randrange(p ** (N - k)))
        e = padic_exp(y)
        if y.resolved and (e - 1).norm() != y.norm():
            bad += 1
        if padic_log(e) != y:
            bad += 1
    return bad


def _witness_fails(spec, w) -> bool:
    """The reported witness violates mu <= 1 * (eps/sup)^1 * mu(B), recomputed from scratch."""
    m = sublevel_measure(spec, tuple(w["ball"]), w["eps"])
    return m["measure"] / m["ball_measure"] > w["eps"] / m["sup"]


@pytest.mark.acceptance(3)
def test_criterion_3_padic_suite(runs_c3, verdict):
    t0 = time.perf_counter()
    notes, ok = [], True

    bad = _exp_log_checks(10_000)
    ok &= bad == 0
    notes.append(f"exp/log {bad} failures in 1e4")

    rep_s = json.loads(runs_c3["s"].text("report.json"))
    rep_s2 = json.loads(runs_c3["s2"].text("report.json"))
    s2 = GoodFunctionSpec.monomial(3, 2, 6)
    good_s = rep_s["good"]["pass"] is True
    w = rep_s2["good"]["witness"]
    bad_s2 = rep_s2["good"]["pass"] is False and w is not None and _witness_fails(
        s2, {"ball": w["ball"], "eps": Fraction(w["eps"])})
    ok &= good_s and bad_s2
    notes.append(f"s good={good_s}, s^2 fails with witness eps={w['eps'] if w else None}")

    ratios = [Fraction(r["ratio"]) for r in rep_s["weak_ivt"]["levels"]]
    ivt_s = len(ratios) == 5 and all(r == Fraction(1, 5) for r in ratios)
    ok &= ivt_s
    notes.append(f"s ratios {sorted(set(map(str, ratios)))} at {len(ratios)} levels")

    alpha = Fraction(1, 3)  # 1 / (n^2 - 1) for n = 2
    holds = 0
    for i in range(20):
        p = (3, 5)[i % 2]
        spec = random_spec(p, 2, 6, SEED + i, zero_at_origin=i % 4 < 2)
        tab = valuation_table(spec)
        C = tight_constant(tab, alpha)
        good = check_good(tab, C, alpha)["pass"]
        holds += good and weak_ivt_check(tab, Cprime=CPrime(C, alpha, p))["holds"]
    ok &= holds == 20
    notes.append(f"random family: weak IVT with C'=(2Cp)^(1/alpha) holds for {holds}/20")

    elapsed = time.perf_counter() - t0 + sum(r.seconds for r in runs_c3.values())
    ok &= elapsed < 120
    verdict(ok, f"{'; '.join(notes)}; {elapsed:.1f}s (limit 120s)")
    assert ok


# ---------------------------------------------------------------------------
# criterion 4: d = 2 box average against the exact period average

RADII = (0.8, 1.0, 1.5)


@pytest.fixture(scope="module")
def run_c4(root):
    return Run(root, "c4-orbit", "orbit-sample",
               ["--field", FIELDS / "sqrt2.toml", "--basis", BASES / "one_b.json", "--T", 40, "--N", 20_000,
                "--seed", SEED, "--radii", "0.8,1,1.5"],
               {"--out": "samples.csv", "--summary": "summary.json"})


def _rel(a, b):
    top = max(abs(a), abs(b))
    return 0.0 if top == 0 else abs(a - b) / top


@pytest.mark.acceptance(4)
def test_criterion_4_period_average_oracle(run_c4, verdict):
    t0 = time.perf_counter()
    fld = load_field(FIELDS / "sqrt2.toml")
    exact = exact_period_average([fld.one(), fld.gen()], RADII, M=10_000, jobs=JOBS)
    box = json.loads(run_c4.text("summary.json"))
    errs = {"lambda1": _rel(box["mean_lambda1"], exact["lambda1"])}
    for r in RADII:
        errs[f"N_{r}"] = _rel(box["mean_counts"][str(r)], exact["counts"][str(r)])
    elapsed = time.perf_counter() - t0 + run_c4.seconds
    worst = max(errs.values())
    ok = run_c4.code == 0 and worst < 0.02 and abs(exact["period"] - 2 * math.log(1 + math.sqrt(2))) < 1e-12
    ok &= elapsed < 60
    detail = ", ".join(f"{k} {v:.4f}" for k, v in errs.items())
    verdict(ok, f"relative errors {detail} (limit 0.02); {elapsed:.1f}s (limit 60s)")
    assert ok


# ---------------------------------------------------------------------------
# criterion 5: equidistribution trend against the horocycle reference


@pytest.fixture(scope="module")
def run_c5(root):
    return Run(root, "c5-equidist", "equidist-test",
               ["--field", FIELDS / "sqrt2.toml", "--basis", BASES / "one_b.json", "--m", 2,
                "--schedule", "0,2;0,4;0,6;0,8", "--N", 20_000, "--seed", SEED, "--radii", "0.8,1,1.5",
                "--distance", "w1", "--reference-N", 100_000, "--reference-y", 1e-4, "--reference-seed", SEED],
               {"--out": "trend.json"})


@pytest.mark.acceptance(5)
def test_criterion_5_equidistribution_trend(run_c5, verdict):
    rep = json.loads(run_c5.text("trend.json"))
    f = rep["trend"]["features"]["lambda1"]
    ds, band = f["distances"], f["band"]
    ok = run_c5.code == 0 and _inversions_ok(ds, band) and ds[-1] < 0.5 * ds[0]
    ok &= run_c5.seconds < 300
    verdict(ok, f"W1 to Haar n=2,4,6,8: {', '.join(f'{d:.4f}' for d in ds)}; band {band:.4f}; "
                f"n=8/n=2 = {ds[-1] / ds[0]:.3f} (limit 0.5); {run_c5.seconds:.1f}s (limit 300s)")
    assert ok


# ---------------------------------------------------------------------------
# criterion 6: nu_best trend against the generic baseline


@pytest.fixture(scope="module")
def run_c6(root):
    return Run(root, "c6-nu-best", "nu-best-compare",
               ["--field", FIELDS / "cubic49.toml", "--gens", "b,b^2", "--m", 2, "--schedule", "1,2;2,4;3,6;4,8",
                "--K", 500, "--baseline-targets", 200, "--seed", SEED, "--distance", "ks",
                "--reference", "{dir}/baseline.csv"],
               {"--out": "trend.json"})


@pytest.mark.acceptance(6)
def test_criterion_6_nu_best_trend(run_c6, verdict):
    rep = json.loads(run_c6.text("trend.json"))
    f = rep["features"]["w_norm"]
    ds, band = f["distances"], f["band"]
    ok = run_c6.code == 0 and rep["baseline"]["targets"] == 200 and rep["K"] == 500
    ok &= _inversions_ok(ds, band) and ds[-1] < 0.7 * ds[0] and run_c6.seconds < 1800
    verdict(ok, f"KS to baseline n=1..4: {', '.join(f'{d:.4f}' for d in ds)}; band {band:.4f}; "
                f"n=4/n=1 = {ds[-1] / ds[0]:.3f} (limit 0.7); {run_c6.seconds:.1f}s (limit 1800s)")
    assert ok


# ---------------------------------------------------------------------------
# criterion 7: determinism of every run above


def _regenerated(run: Run):
    # a cached baseline would be reloaded instead of recomputed, so remove it
    for name in ("baseline.csv", "baseline.schema.json"):
        (run.dir / name).unlink(missing_ok=True)


@pytest.mark.acceptance(7)
def test_criterion_7_determinism(runs_c1, runs_c2, runs_c3, run_c4, run_c5, run_c6, verdict):
    runs = (list(runs_c1.values()) + list(runs_c2.values()) + list(runs_c3.values())
            + [run_c4, run_c5, run_c6])
    mismatches = []
    for run in runs:
        first = run.artifacts()
        saved = run.dir.with_name(run.dir.name + "-first")
        shutil.copytree(run.dir, saved)
        for jobs in (JOBS, 2):
            _regenerated(run)
            code = main([run.command, "--config", str(run.config), "--jobs", str(jobs)])
            if code != 0 or run.artifacts() != first:
                mismatches.append(f"{run.dir.name} (--jobs {jobs})")
    ok = not mismatches
    verdict(ok, f"{len(runs)} runs re-executed from RunConfig with --jobs {JOBS} and --jobs 2; "
                f"{len(mismatches)} byte mismatches")
    assert ok, mismatches
