"""``orbitlab`` command-line interface.

Every subcommand first resolves its arguments into a RunConfig (a flat JSON
object).  ``--emit-config PATH`` writes that object; ``--config PATH``
re-runs from one, ignoring the other flags.  ``--jobs`` is deliberately not
part of the config: outputs do not depend on it.

Exit codes: 0 success, 2 configuration error, 3 hypothesis violation,
4 resource cap, 5 precision exhausted.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from .errors import ConfigError, OrbitlabError

CONFIG_VERSION = 1
DEFAULT_BITS = 256


def precision_bits() -> int:
    raw = os.environ.get("ORBITLAB_PRECISION_BITS")
    if raw is None:
        return DEFAULT_BITS
    try:
        bits = int(raw)
    except ValueError:
        raise ConfigError(f"ORBITLAB_PRECISION_BITS={raw!r} is not an integer") from None
    if bits < 64:
        raise ConfigError("ORBITLAB_PRECISION_BITS must be at least 64")
    return bits


# ---------------------------------------------------------------------------
# parsing helpers


def _floats(s: str) -> list[float]:
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {s!r}") from None


def _ints(s: str) -> list[int]:
    try:
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {s!r}") from None


def _schedule(s: str) -> list[list[int]]:
    return [_ints(part) for part in s.split(";") if part.strip()]


def _field_spec(path) -> dict:
    from .numfield import load_field

    if not path:
        raise ConfigError("--field is required")
    fld = load_field(path)
    return {"min_poly": [int(c) for c in fld.min_poly], "identity_root_index": fld.identity_index}


def _field(spec: dict):
    from .numfield import make_field

    return make_field(spec["min_poly"], spec["identity_root_index"])


def _elements(fld, exprs):
    return [fld.parse(e) for e in exprs]


def _read_basis(path) -> list[str]:
    if not path:
        raise ConfigError("--basis is required")
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"basis file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: {exc}") from None
    if isinstance(data, dict):
        data = data.get("basis")
    if not isinstance(data, list) or not all(isinstance(x, (str, int)) for x in data):
        raise ConfigError(f"{p}: expected a JSON list of element expressions")
    return [str(x) for x in data]


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _fraction_str(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------------------
# config resolution (argparse namespace -> RunConfig)


def _resolve_best_approx(a) -> dict:
    if a.max_q is not None and a.max_q < 1:
        raise ConfigError("--max-q must be at least 1")
    if a.max_k is not None and a.max_k < 1:
        raise ConfigError("--max-k must be at least 1")
    if a.max_q is None and a.max_k is None:
        raise ConfigError("give --max-q or --max-k")
    cfg = {"norm": a.norm, "max_q": a.max_q, "max_k": a.max_k, "method": a.method,
           "moduli": _ints(a.moduli) if a.moduli else [], "out": a.out, "summary": a.summary}
    if a.generic_seed is not None:
        cfg.update(target={"kind": "generic", "seed": a.generic_seed, "index": a.target_index, "dim": a.dim})
    else:
        if not a.field or not a.gens:
            raise ConfigError("give --field and --gens, or --generic-seed")
        cfg.update(target={"kind": "algebraic", "field": _field_spec(a.field),
                           "gens": [g.strip() for g in a.gens.split(",")]})
    return cfg


def _resolve_orbit_sample(a) -> dict:
    basis = _read_basis(a.basis)
    return {"field": _field_spec(a.field), "basis": basis, "m": a.m,
            "ivec": _ints(a.ivec) if a.ivec else [0] * len(basis),
            "T": a.T, "N": a.N, "seed": a.seed, "radii": _floats(a.radii),
            "s": json.loads(Path(a.s).read_text()) if a.s else None,
            "precision_bits": precision_bits(), "out": a.out, "summary": a.summary}


def _resolve_equidist(a) -> dict:
    return {"field": _field_spec(a.field), "basis": _read_basis(a.basis), "m": a.m,
            "schedule": _schedule(a.schedule), "T": a.T, "N": a.N, "seed": a.seed,
            "radii": _floats(a.radii), "distance": a.distance,
            "reference": {"N": a.reference_N, "y": a.reference_y, "seed": a.reference_seed},
            "precision_bits": precision_bits(), "out": a.out}


def _resolve_nu_best(a) -> dict:
    from .pipelines import DEFAULT_MASTER_SEED

    return {"field": _field_spec(a.field), "gens": [g.strip() for g in a.gens.split(",")], "m": a.m,
            "schedule": _schedule(a.schedule), "K": a.K, "norm": a.norm, "distance": a.distance,
            "reference": a.reference, "baseline_targets": a.baseline_targets,
            "seed": DEFAULT_MASTER_SEED if a.seed is None else a.seed,
            "moduli": _ints(a.moduli), "out": a.out}


def _resolve_padic(a) -> dict:
    if not a.spec:
        raise ConfigError("--spec is required")
    p = Path(a.spec)
    if not p.exists():
        raise ConfigError(f"spec file not found: {p}")
    eps = "sup" if a.eps == "sup" else [str(Fraction(x.strip())) for x in a.eps.split(",")]
    return {"spec": json.loads(p.read_text()), "C": str(Fraction(a.C)), "alpha": str(Fraction(a.alpha)),
            "eps": eps, "balls": a.balls, "closed": a.closed, "ivt": a.ivt,
            "rho": None if a.rho is None else str(Fraction(a.rho)), "out": a.out}


def _resolve_haar(a) -> dict:
    return {"N": a.N, "y": a.y, "seed": a.seed, "radii": _floats(a.radii), "out": a.out, "summary": a.summary}


def _resolve_baseline(a) -> dict:
    from .pipelines import DEFAULT_MASTER_SEED

    return {"targets": a.targets, "K": a.K, "d": a.d, "norm": a.norm,
            "seed": DEFAULT_MASTER_SEED if a.seed is None else a.seed,
            "moduli": _ints(a.moduli), "out": a.out}


# ---------------------------------------------------------------------------
# commands (RunConfig -> artifacts)


def cmd_best_approx(cfg: dict, jobs: int = 1) -> int:
    from .bestapprox import TargetVector, best_approximations, csv_header, record_csv_row, record_json

    t = cfg["target"]
    if t["kind"] == "generic":
        v = TargetVector.generic(t["seed"], t["index"], t["dim"], cfg["norm"])
    else:
        fld = _field(t["field"])
        v = TargetVector.algebraic(_elements(fld, t["gens"]), cfg["norm"])
    recs = best_approximations(v, max_q=cfg["max_q"], max_k=cfg["max_k"], method=cfg["method"],
                               moduli=tuple(cfg["moduli"]))
    lines = [csv_header(v.dim + 1, cfg["moduli"])] + [record_csv_row(r, cfg["moduli"]) for r in recs]
    _write(cfg["out"], "\n".join(lines) + "\n")
    if cfg.get("summary"):
        summary = {"records": len(recs), "q": [str(r.q) for r in recs][-5:],
                   "last": record_json(recs[-1], cfg["moduli"]) if recs else None}
        _write(cfg["summary"], json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return 0


def _orbit_basis(cfg):
    from .numfield import rescale_basis

    fld = _field(cfg["field"])
    basis = _elements(fld, cfg["basis"])
    if any(cfg["ivec"]):
        basis = rescale_basis(basis, cfg["m"], cfg["ivec"])
    return basis


def cmd_orbit_sample(cfg: dict, jobs: int = 1) -> int:
    from .numfield import orbit_matrix
    from .orbitflow import OrbitSamplePlan, observables_csv, sample_orbit, summary_json

    bits = cfg["precision_bits"]
    g = orbit_matrix(_orbit_basis(cfg), bits)
    s = tuple(tuple(float(x) for x in r) for r in cfg["s"]) if cfg["s"] else None
    plan = OrbitSamplePlan(T=cfg["T"], N=cfg["N"], seed=cfg["seed"], radii=tuple(cfg["radii"]), s=s)
    obs = sample_orbit(g, plan, jobs=jobs, bits=bits)
    _write(cfg["out"], observables_csv(obs))
    if cfg.get("summary"):
        _write(cfg["summary"], summary_json(obs))
    return 0


def cmd_equidist(cfg: dict, jobs: int = 1) -> int:
    from .orbitflow import OrbitSamplePlan, check_schedule, equidist_trend, haar_reference_d2
    from .stats import report_json

    check_schedule(cfg["schedule"])  # before the costly reference
    fld = _field(cfg["field"])
    basis = _elements(fld, cfg["basis"])
    plan = OrbitSamplePlan(T=cfg["T"], N=cfg["N"], seed=cfg["seed"], radii=tuple(cfg["radii"]))
    ref = None
    if fld.degree == 2:
        r = cfg["reference"]
        ref = haar_reference_d2(r["N"], r["y"], r["seed"], tuple(cfg["radii"]), jobs=jobs)
    rep = equidist_trend(basis, cfg["m"], cfg["schedule"], plan, reference=ref,
                         distance=cfg["distance"], jobs=jobs, bits=cfg["precision_bits"])
    _write(cfg["out"], report_json(rep))
    return 0


def cmd_nu_best_compare(cfg: dict, jobs: int = 1) -> int:
    from . import stats
    from .pipelines import generic_baseline, nu_best_compare

    if len(cfg["schedule"]) < 3:
        raise ConfigError("nu-best-compare needs at least 3 schedule entries")
    fld = _field(cfg["field"])
    gens = _elements(fld, cfg["gens"])
    d = len(gens) + 1
    ref_path = cfg["reference"]
    if ref_path and Path(ref_path).exists():
        baseline = stats.EmpiricalMeasure.load(ref_path)
    else:
        baseline = generic_baseline(cfg["baseline_targets"], cfg["K"], d, cfg["norm"], cfg["seed"],
                                    tuple(cfg["moduli"]), jobs=jobs)
        if ref_path:
            baseline.save(ref_path)
    rep = nu_best_compare(gens, cfg["m"], cfg["schedule"], K=cfg["K"], baseline=baseline,
                          norm=cfg["norm"], distance=cfg["distance"], seed=cfg["seed"],
                          moduli=tuple(cfg["moduli"]), jobs=jobs)
    _write(cfg["out"], stats.report_json(rep))
    return 0


def _parse_balls(spec, text):
    from .padic import auto_balls

    if text == "auto":
        return auto_balls(spec.p, spec.N)
    balls = []
    for part in text.split(","):
        c, _, j = part.partition(":")
        balls.append((int(c), int(j or 0)))
    return balls


def cmd_padic_good(cfg: dict, jobs: int = 1) -> int:
    from .padic import (CPrime, GoodFunctionSpec, check_good, find_controlled_value, report_json,
                        valuation_table, weak_ivt_check)

    spec = GoodFunctionSpec.from_json(json.dumps(cfg["spec"]))
    tab = valuation_table(spec)
    C, alpha = Fraction(cfg["C"]), Fraction(cfg["alpha"])
    eps = cfg["eps"] if cfg["eps"] == "sup" else [Fraction(e) for e in cfg["eps"]]
    rep = {"good": check_good(tab, C, alpha, _parse_balls(spec, cfg["balls"]), eps, cfg["closed"])}
    cp = CPrime(C, alpha, spec.p)
    if cfg["ivt"]:
        rep["weak_ivt"] = weak_ivt_check(tab, Cprime=cp)
    if cfg["rho"] is not None:
        rep["controlled_value"] = find_controlled_value(spec, Fraction(cfg["rho"]), cp)
    _write(cfg["out"], report_json(rep))
    return 0


def cmd_haar_ref_d2(cfg: dict, jobs: int = 1) -> int:
    from .orbitflow import haar_reference_d2, observables_csv, summary_json

    obs = haar_reference_d2(cfg["N"], cfg["y"], cfg["seed"], tuple(cfg["radii"]), jobs=jobs)
    _write(cfg["out"], observables_csv(obs))
    if cfg.get("summary"):
        _write(cfg["summary"], summary_json(obs))
    return 0


def cmd_baseline_gen(cfg: dict, jobs: int = 1) -> int:
    from .pipelines import generic_baseline

    m = generic_baseline(cfg["targets"], cfg["K"], cfg["d"], cfg["norm"], cfg["seed"],
                         tuple(cfg["moduli"]), jobs=jobs)
    if cfg["out"] in (None, "-"):
        sys.stdout.write(m.to_csv())
    else:
        m.save(cfg["out"])
    return 0


COMMANDS = {
    "best-approx": (_resolve_best_approx, cmd_best_approx),
    "orbit-sample": (_resolve_orbit_sample, cmd_orbit_sample),
    "equidist-test": (_resolve_equidist, cmd_equidist),
    "nu-best-compare": (_resolve_nu_best, cmd_nu_best_compare),
    "padic-good": (_resolve_padic, cmd_padic_good),
    "haar-ref-d2": (_resolve_haar, cmd_haar_ref_d2),
    "baseline-gen": (_resolve_baseline, cmd_baseline_gen),
}


# ---------------------------------------------------------------------------
# argparse


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="orbitlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="re-run from a RunConfig JSON file (other flags ignored)")
        p.add_argument("--emit-config", help="write the resolved RunConfig JSON here")
        p.add_argument("--jobs", type=int, default=1, help="worker processes (outputs do not depend on it)")
        return p

    p = common(sub.add_parser("best-approx", help="best simultaneous approximations of a target"))
    p.add_argument("--field")
    p.add_argument("--gens", help="comma-separated elements in the generator b, e.g. 'b,b^2'")
    p.add_argument("--generic-seed", type=int)
    p.add_argument("--target-index", type=int, default=0)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--norm", choices=("sup", "euclidean"), default="sup")
    p.add_argument("--max-q", type=int)
    p.add_argument("--max-k", type=int)
    p.add_argument("--method", choices=("lattice", "scan"), default="lattice")
    p.add_argument("--moduli", default="")
    p.add_argument("--out")
    p.add_argument("--summary")

    def orbit_args(p):
        p.add_argument("--field", required=False)
        p.add_argument("--basis", required=False, help="JSON list of element expressions")
        p.add_argument("--m", type=int, default=2)
        p.add_argument("--T", type=float, default=20.0)
        p.add_argument("--N", type=int, default=20000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--radii", default="0.5,1,1.5,2")
        p.add_argument("--out")

    p = common(sub.add_parser("orbit-sample", help="observables along a periodic diagonal orbit"))
    orbit_args(p)
    p.add_argument("--ivec", help="exponents i with basis_j scaled by m^i_j")
    p.add_argument("--s", help="JSON file with a d x d translate matrix")
    p.add_argument("--summary")

    p = common(sub.add_parser("equidist-test", help="distance trend of rescaled orbits"))
    orbit_args(p)
    p.add_argument("--schedule", default="0,2;0,4;0,6;0,8", help="exponent vectors separated by ';'")
    p.add_argument("--distance", choices=("w1", "ks"), default="w1")
    p.add_argument("--reference-N", type=int, default=100000)
    p.add_argument("--reference-y", type=float, default=1e-4)
    p.add_argument("--reference-seed", type=int, default=1)

    p = common(sub.add_parser("nu-best-compare", help="nu_best trend of rescaled algebraic targets"))
    p.add_argument("--field")
    p.add_argument("--gens", default="b,b^2")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--schedule", default="1,2;2,4;3,6;4,8")
    p.add_argument("--K", type=int, default=500)
    p.add_argument("--norm", choices=("sup", "euclidean"), default="sup")
    p.add_argument("--distance", choices=("ks", "w1"), default="ks")
    p.add_argument("--reference", help="baseline CSV; generated and saved here when absent")
    p.add_argument("--baseline-targets", type=int, default=200)
    p.add_argument("--seed", type=int)
    p.add_argument("--moduli", default="2,3")
    p.add_argument("--out")

    p = common(sub.add_parser("padic-good", help="exhaustive (C, alpha)-good certificate"))
    p.add_argument("--spec")
    p.add_argument("--C", default="1")
    p.add_argument("--alpha", default="1")
    p.add_argument("--eps", default="sup", help="'sup' or comma-separated values")
    p.add_argument("--balls", default="auto", help="'auto' or center:j pairs")
    p.add_argument("--closed", action="store_true", help="use sublevel sets |f| <= eps")
    p.add_argument("--ivt", action="store_true", help="also check the weak intermediate value bound")
    p.add_argument("--rho", help="also find s with rho/C' <= |f(s)| < rho")
    p.add_argument("--out")

    p = common(sub.add_parser("haar-ref-d2", help="near-Haar planar lattices from a closed horocycle"))
    p.add_argument("--N", type=int, default=100000)
    p.add_argument("--y", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--radii", default="0.8,1,1.5")
    p.add_argument("--out")
    p.add_argument("--summary")

    p = common(sub.add_parser("baseline-gen", help="generic nu_best baseline measure"))
    p.add_argument("--targets", type=int, default=200)
    p.add_argument("--K", type=int, default=500)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--norm", choices=("sup", "euclidean"), default="sup")
    p.add_argument("--seed", type=int)
    p.add_argument("--moduli", default="2,3")
    p.add_argument("--out")
    return ap


def resolve(args) -> dict:
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        cfg = json.loads(path.read_text())
        if cfg.get("command") != args.command:
            raise ConfigError(f"config is for {cfg.get('command')!r}, not {args.command!r}")
        return cfg
    resolver, _ = COMMANDS[args.command]
    cfg = resolver(args)
    cfg["command"] = args.command
    cfg["config_version"] = CONFIG_VERSION
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg = resolve(args)
        if args.emit_config:
            Path(args.emit_config).write_text(json.dumps(cfg, sort_keys=True, indent=2) + "\n")
        _, run = COMMANDS[args.command]
        return run(cfg, args.jobs)
    except OrbitlabError as exc:
        print(f"orbitlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
