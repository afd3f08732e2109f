"""Monte Carlo drivers for best-approximation statistics.

The generic baseline estimates nu_best by pooling the first K records of many
random targets; ``nu_best_compare`` measures how far the records of the
rescaled algebraic targets ``(m^i1 a1, ..., m^i(d-1) a(d-1))`` sit from it.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

from . import stats
from .bestapprox import TargetVector, best_approximations, record_features
from .errors import ConfigError, ScheduleViolation

DEFAULT_MASTER_SEED = 20240607


def _target_features(job):
    v, K, norm, moduli, with_lattice = job
    recs = best_approximations(v, max_k=K)
    return [record_features(r, norm, moduli, with_lattice) for r in recs]


def _map(jobs_in, jobs: int):
    if jobs <= 1:
        return [_target_features(j) for j in jobs_in]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_target_features, jobs_in, chunksize=max(1, len(jobs_in) // (4 * jobs))))


def generic_baseline(n_targets: int = 200, K: int = 500, d: int = 3, norm: str = "sup",
                     seed: int = DEFAULT_MASTER_SEED, moduli=(2, 3), with_lattice: bool = False,
                     jobs: int = 1) -> stats.EmpiricalMeasure:
    """Pooled record features of ``n_targets`` random targets in [0,1)^(d-1)."""
    if n_targets < 1 or K < 1:
        raise ConfigError("baseline needs at least one target and one record")
    work = [(TargetVector.generic(seed, t, d - 1, norm), K, norm, tuple(moduli), with_lattice)
            for t in range(n_targets)]
    feats = [f for per in _map(work, jobs) for f in per]
    return stats.empirical(feats, metadata={"kind": "generic baseline", "seed": seed, "targets": n_targets,
                                            "K": K, "d": d, "norm": norm})


def check_best_schedule(schedule) -> None:
    """Each exponent and each pairwise gap must grow strictly along the schedule."""
    schedule = [tuple(int(x) for x in s) for s in schedule]
    if len(schedule) < 3:
        raise ConfigError("a trend needs at least 3 schedule entries")
    dims = {len(s) for s in schedule}
    if len(dims) != 1:
        raise ConfigError("exponent vectors differ in length")
    n = dims.pop()
    seqs = [[s[r] for s in schedule] for r in range(n)]
    seqs += [[abs(s[r] - s[j]) for s in schedule] for r in range(n) for j in range(r + 1, n)]
    for seq in seqs:
        if any(b <= a for a, b in zip(seq, seq[1:])):
            raise ScheduleViolation(f"exponent sequence {seq} does not increase strictly")


def rescaled_target(generators, m: int, i_vec, norm: str = "sup") -> TargetVector:
    return TargetVector.algebraic([g * Fraction(m) ** int(i) for g, i in zip(generators, i_vec)], norm)


def nu_best_compare(generators, m: int, schedule, K: int = 500, baseline=None, norm: str = "sup",
                    features=("w_norm",), distance: str = "ks", seed: int = DEFAULT_MASTER_SEED,
                    baseline_targets: int = 200, moduli=(2, 3), with_lattice: bool = False,
                    jobs: int = 1) -> dict:
    """Distances of nu_best^(alpha_n) (first K records) to the generic baseline, per feature."""
    check_best_schedule(schedule)
    if m in (0, 1, -1):
        raise ConfigError(f"m={m} must not be 0 or +-1")
    d = len(generators) + 1
    if baseline is None:
        baseline = generic_baseline(baseline_targets, K, d, norm, seed, moduli, with_lattice, jobs)
    work = [(rescaled_target(generators, m, i, norm), K, norm, tuple(moduli), with_lattice)
            for i in schedule]
    per = _map(work, jobs)
    measures = [stats.empirical(f, metadata={"i": list(i)}) for f, i in zip(per, schedule)]
    report = stats.trend_report(measures, baseline, features, labels=[list(i) for i in schedule],
                                distance=distance, seed=seed)
    report["K"] = K
    report["m"] = int(m)
    report["norm"] = norm
    report["baseline"] = dict(baseline.metadata)
    return report
