"""Best approximations of irrational vectors and their (Lambda_k, w_k, residue) data.

The record sequence follows the usual recursion: ``q_1 = 1`` and ``q_k`` is
the least ``q`` whose distance ``min_p ||q v - p||`` beats the previous
record.  Two search strategies produce it:

``"scan"``
    try q = q_{k-1}+1, q_{k-1}+2, ... ; fine for q up to ~1e6.
``"lattice"`` (default)
    Minkowski guarantees the next record below ``Q ~ e^-(d-1)`` where ``e`` is
    the current record error, so all candidates lie in a cylinder of bounded
    volume.  The cylinder is mapped to a box in an integer lattice isomorphic
    to Z^d, reduced with exact integral LLL (warm-started from the previous
    step) and enumerated.  Cost per record is independent of the size of q.

All decisions (rounding to the nearest p, error comparisons) are certified
with fixed-point enclosures of the coordinates at adaptive precision.  For
algebraic targets, comparisons that stay undecided fall back to exact sign
determination in the number field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np

from .errors import (
    NotPrimitive,
    NotSpanning,
    PrecisionExhausted,
    RationalCoordinate,
    TieUnresolvable,
)
from .interval import Interval
from .lattice import LatticeBasis, enumerate_ball, hnf_rational, lll_int, shortest_vector
from .numfield import MAX_BITS, START_BITS, AlgebraicNumber, frac_rank

# exact algebraic comparison takes over once fixed-point refinement passes this
_EXACT_FALLBACK_BITS = 4096


# ---------------------------------------------------------------------------
# coordinates


class GenericCoordinate:
    """A uniformly random real in [0, 1) given by an endless, reproducible bit stream.

    The bits come from a Philox counter-based generator keyed by
    ``(seed, target, coord)``; drawing more bits never changes earlier ones,
    so a coordinate can be refined as far as a computation needs.
    """

    __slots__ = ("seed", "target", "coord", "_words")

    def __init__(self, seed: int, target: int, coord: int):
        self.seed, self.target, self.coord = int(seed), int(target), int(coord)
        self._words: list[int] = []

    def _ensure(self, nwords: int):
        if len(self._words) < nwords:
            key = np.array([self.seed & (2**64 - 1), (self.target << 8 | self.coord) & (2**64 - 1)],
                           dtype=np.uint64)
            bg = np.random.Philox(key=key)
            self._words = [int(w) for w in bg.random_raw(max(nwords, 2 * len(self._words)))]

    def fixed(self, bits: int) -> tuple[int, int]:
        """(lo, hi) with lo / 2^bits <= v <= hi / 2^bits."""
        nw = -(-bits // 64)
        self._ensure(nw)
        acc = 0
        for w in self._words[:nw]:
            acc = (acc << 64) | w
        lo = acc >> (64 * nw - bits)
        return lo, lo + 1

    def __float__(self):
        lo, _ = self.fixed(64)
        return lo / 2.0**64

    def __repr__(self):
        return f"GenericCoordinate(seed={self.seed}, target={self.target}, coord={self.coord})"

    def __reduce__(self):
        return (GenericCoordinate, (self.seed, self.target, self.coord))


def _alg_fixed(x: AlgebraicNumber, bits: int) -> tuple[int, int]:
    iv = x.real(bits + 2)
    s = 1 << bits
    lo = math.floor(iv.lo * s)
    hi = math.ceil(iv.hi * s)
    return lo, hi


@dataclass(frozen=True)
class TargetVector:
    """An irrational vector v in R^(d-1); coordinates are algebraic or generic."""

    coords: tuple
    norm: str = "sup"
    kind: str = "algebraic"
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if self.norm not in ("sup", "euclidean"):
            raise ValueError(f"unknown norm {self.norm!r}")
        for c in self.coords:
            if isinstance(c, (int, Fraction)) or (isinstance(c, AlgebraicNumber) and c.is_rational()):
                raise RationalCoordinate(f"coordinate {c!r} is rational")

    @property
    def dim(self) -> int:
        return len(self.coords)

    @classmethod
    def algebraic(cls, coords, norm: str = "sup") -> "TargetVector":
        return cls(tuple(coords), norm, "algebraic")

    @classmethod
    def generic(cls, seed: int, target: int, dim: int, norm: str = "sup") -> "TargetVector":
        return cls(tuple(GenericCoordinate(seed, target, j) for j in range(dim)), norm, "generic")

    def fixed(self, bits: int):
        """Per coordinate (lo, hi): lo / 2^bits <= v_i <= hi / 2^bits."""
        hit = self._cache.get(bits)
        if hit is None:
            if bits > MAX_BITS:
                raise PrecisionExhausted(f"target precision beyond {MAX_BITS} bits")
            if self.kind == "algebraic":
                hit = tuple(_alg_fixed(c, bits) for c in self.coords)
            else:
                hit = tuple(c.fixed(bits) for c in self.coords)
            self._cache[bits] = hit
        return hit

    def floats(self) -> np.ndarray:
        return np.array([lo / 2.0**60 for lo, _ in self.fixed(60)])


def build_target_from_field(field_, generators, norm: str = "sup", require_span: bool = False):
    """Target vector from field elements read under the identity embedding."""
    gens = [field_(g) for g in generators]
    for g in gens:
        if g.is_rational():
            raise RationalCoordinate(f"generator {g!r} is rational")
    if require_span:
        rows = [field_.one().coeffs] + [g.coeffs for g in gens]
        if frac_rank(rows) < field_.degree:
            raise NotSpanning("generators together with 1 do not span the field over Q")
    return TargetVector.algebraic(gens, norm)


# ---------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class DirectionalLattice:
    """q^(1/(d-1)) * pi(Z^d); ``base`` is the exact rational lattice pi(Z^d) in HNF."""

    base: LatticeBasis
    q: int

    @property
    def dim(self) -> int:
        return self.base.dim

    def covolume(self) -> Fraction:
        from .lattice import covolume

        # (q^(1/n))^n * covol(base) = q * covol(base), exact
        return covolume(self.base) * self.q

    def exact_scaled(self) -> LatticeBasis | None:
        """The scaled lattice with rational entries, when q^(1/n) is rational."""
        n = self.dim
        r = _iroot(self.q, n)
        if r ** n != self.q:
            return None
        return LatticeBasis.from_exact([[x * r for x in row] for row in self.base.exact])

    def basis(self) -> LatticeBasis:
        ex = self.exact_scaled()
        if ex is not None:
            return ex
        n = self.dim
        f = 64 + self.q.bit_length()
        scale = _iroot(self.q << (n * f), n)  # floor(q^(1/n) 2^f)
        ints = [[(x.numerator * scale) // x.denominator for x in row] for row in self.base.exact]
        return LatticeBasis.from_fixed(ints, f, Fraction(2))


@dataclass(frozen=True)
class BestApproxRecord:
    k: int
    q: int
    p: tuple
    err: Interval
    w: tuple
    residues: dict = field(default_factory=dict, hash=False)
    d: int = 2

    @property
    def Lambda(self) -> DirectionalLattice:
        return directional_lattice(self, self.d)


def _iroot(n: int, k: int) -> int:
    """floor(n ** (1/k)) for nonnegative integers."""
    if n < 2:
        return n
    if k == 1:
        return n
    x = 1 << (-(-n.bit_length() // k))
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    while x ** k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


def directional_lattice(rec: BestApproxRecord, d: int | None = None) -> DirectionalLattice:
    """Lambda_k = q^(1/(d-1)) * pi(Z^d), pi the projection along (p, q)."""
    d = rec.d if d is None else d
    n = d - 1
    if reduce(math.gcd, rec.p, rec.q) != 1:
        raise NotPrimitive(f"(p, q) = ({rec.p}, {rec.q}) is not primitive")
    gens = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    gens.append([Fraction(-pi, rec.q) for pi in rec.p])
    base = LatticeBasis.from_exact(hnf_rational(gens))
    return DirectionalLattice(base, rec.q)


def residues(rec, moduli) -> dict:
    out = {}
    for M in moduli:
        M = int(M)
        if M <= 0:
            raise ValueError("moduli must be positive")
        out[M] = (tuple(pi % M for pi in rec.p), rec.q % M)
    return out


def _root_interval(q: int, n: int, bits: int) -> Interval:
    """Enclosure of q^(1/n) of width 2^-bits."""
    if n == 1:
        return Interval(q)
    t = _iroot(q << (n * bits), n)
    return Interval(Fraction(t, 1 << bits), Fraction(t + 1, 1 << bits))


def displacement(rec: BestApproxRecord, v: TargetVector, bits: int = 128) -> tuple:
    """w_k = q^(1/(d-1)) (q v - p) as interval enclosures.

    The positive exponent makes w_k of order one (Dirichlet), which is the
    scaling under which the displacement has a nondegenerate limit law.
    """
    n = v.dim
    P = bits + 2 * rec.q.bit_length() + 8
    fx = v.fixed(P)
    s = _root_interval(rec.q, n, bits + rec.q.bit_length() + 8)
    out = []
    for (lo, hi), pi in zip(fx, rec.p):
        x = Interval(Fraction(rec.q * lo - (pi << P), 1 << P), Fraction(rec.q * hi - (pi << P), 1 << P))
        out.append(x * s)
    return tuple(out)


# ---------------------------------------------------------------------------
# certified primitives


def _nearest(q: int, lo: int, hi: int, P: int):
    """Nearest integer to q*v when q*lo/2^P <= q*v <= q*hi/2^P; None if undecided."""
    half = 1 << (P - 1) if P > 0 else 0
    a = (q * lo + half) >> P
    b = (q * hi + half) >> P
    if a != b:
        return None
    # exact half-integer at an endpoint is not a decision
    if ((q * lo + half) & ((1 << P) - 1)) == 0 and q * lo != q * hi:
        return None
    return a


class _Engine:
    def __init__(self, v: TargetVector):
        self.v = v
        self.n = v.dim
        self.sup = v.norm == "sup"

    def nearest_p(self, q: int) -> tuple:
        P = max(64, 2 * q.bit_length() + 32)
        while True:
            fx = self.v.fixed(P)
            ps = [_nearest(q, lo, hi, P) for lo, hi in fx]
            if None not in ps:
                return tuple(ps)
            if P >= _EXACT_FALLBACK_BITS and self.v.kind == "algebraic":
                return self._nearest_exact(q)
            P *= 2
            if P > MAX_BITS:
                raise TieUnresolvable(f"cannot decide nearest integer to q*v at q={q}")

    def _nearest_exact(self, q: int) -> tuple:
        out = []
        for c in self.v.coords:
            x = c * q
            base = math.floor(x.real(64).mid)
            for cand in (base - 1, base, base + 1, base + 2):
                # cand is nearest iff cand - 1/2 < x < cand + 1/2
                if (x - cand - Fraction(1, 2)).sign() < 0 and (x - cand + Fraction(1, 2)).sign() > 0:
                    out.append(cand)
                    break
            else:
                raise TieUnresolvable("half-integer tie in nearest integer")
        return tuple(out)

    def err_interval(self, q: int, p: tuple, P: int) -> Interval:
        """Enclosure of ||q v - p|| (sup) or ||q v - p||^2 (euclidean), scaled by 2^P."""
        fx = self.v.fixed(P)
        comps = []
        for (lo, hi), pi in zip(fx, p):
            a, b = q * lo - (pi << P), q * hi - (pi << P)
            if a >= 0:
                comps.append((a, b))
            elif b <= 0:
                comps.append((-b, -a))
            else:
                comps.append((0, max(-a, b)))
        if self.sup:
            return Interval(max(c[0] for c in comps), max(c[1] for c in comps))
        return Interval(sum(c[0] ** 2 for c in comps), sum(c[1] ** 2 for c in comps))

    def less(self, q1, p1, q2, p2) -> bool:
        """Certified ||q1 v - p1|| < ||q2 v - p2||."""
        P = max(64, 2 * max(q1, q2).bit_length() + 32)
        while True:
            a, b = self.err_interval(q1, p1, P), self.err_interval(q2, p2, P)
            if a.hi < b.lo:
                return True
            if a.lo >= b.hi:
                return False
            if P >= _EXACT_FALLBACK_BITS and self.v.kind == "algebraic":
                return self._less_exact(q1, p1, q2, p2)
            P *= 2
            if P > MAX_BITS:
                raise TieUnresolvable(f"errors at q={q1} and q={q2} not separated at {MAX_BITS} bits")

    def _less_exact(self, q1, p1, q2, p2) -> bool:
        xs = [c * q1 - pi for c, pi in zip(self.v.coords, p1)]
        ys = [c * q2 - pi for c, pi in zip(self.v.coords, p2)]
        if not self.sup:
            return (sum((x * x for x in xs), xs[0].field.zero())
                    - sum((y * y for y in ys), ys[0].field.zero())).sign() < 0
        # max|x_i| < max|y_j|  <=>  every x_i^2 is below some y_j^2
        return all(any((x * x - y * y).sign() < 0 for y in ys) for x in xs)

    def err_float_log2(self, q: int, p: tuple) -> float:
        P = max(64, 2 * q.bit_length() + 64)
        iv = self.err_interval(q, p, P)
        m = iv.mid
        if m <= 0:
            raise PrecisionExhausted("record error indistinguishable from 0")
        lg = math.log2(m.numerator) - math.log2(m.denominator)
        return lg - P if self.sup else (lg - 2 * P) / 2


def _to_float_scaled(x: int, shift: float) -> float:
    """x * 2^-shift without overflow for huge x."""
    s_int = math.floor(shift)
    k = max(0, abs(x).bit_length() - 62)
    return math.ldexp(float(x >> k), k - s_int) * 2.0 ** (s_int - shift)


def _unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def best_approximations(v: TargetVector, max_q: int | None = None, max_k: int | None = None,
                        method: str = "lattice", moduli=()) -> list[BestApproxRecord]:
    """The best approximation records of ``v`` up to ``max_q`` and/or ``max_k``."""
    if max_q is None and max_k is None:
        raise ValueError("need a finite limit: max_q or max_k")
    if max_q is not None and max_q < 1:
        raise ValueError("max_q must be >= 1")
    eng = _Engine(v)
    gen = _scan(eng) if method == "scan" else _lattice_search(eng)
    out = []
    for q, p in gen:
        if max_q is not None and q > max_q:
            break
        out.append(_make_record(eng, len(out) + 1, q, p, moduli))
        if max_k is not None and len(out) >= max_k:
            break
    return out


def _make_record(eng: _Engine, k: int, q: int, p: tuple, moduli) -> BestApproxRecord:
    P = max(128, 2 * q.bit_length() + 64)
    iv = eng.err_interval(q, p, P)
    scale = Fraction(1, 1 << P)
    if eng.sup:
        err = Interval(iv.lo * scale, iv.hi * scale)
    else:
        # iv encloses ||.||^2 * 4^P with integer endpoints
        err = Interval(math.isqrt(int(iv.lo)) * scale, (math.isqrt(int(iv.hi)) + 1) * scale)
    rec = BestApproxRecord(k, q, p, err, (), {}, eng.n + 1)
    w = displacement(rec, eng.v)
    rec = BestApproxRecord(k, q, p, err, w, residues(rec, moduli), eng.n + 1)
    return rec


def _scan(eng: _Engine):
    q = 1
    p = eng.nearest_p(1)
    yield q, p
    while True:
        q_new = q + 1
        while True:
            p_new = eng.nearest_p(q_new)
            if eng.less(q_new, p_new, q, p):
                break
            q_new += 1
        q, p = q_new, p_new
        yield q, p


def _lattice_search(eng: _Engine):
    n = eng.n
    d = n + 1
    q = 1
    p = eng.nearest_p(1)
    yield q, p
    U = [[int(i == j) for j in range(d)] for i in range(d)]
    if eng.sup:
        log2_cq = 1.0
        radius = math.sqrt(d)
    else:
        log2_cq = (n + 1) - math.log2(_unit_ball_volume(n))
        radius = math.sqrt(2.0)
    radius *= 1 + 1e-6
    widen = 0.0
    while True:
        le = eng.err_float_log2(q, p) + 1e-6 + widen
        lQ = log2_cq - n * le
        P = int(math.ceil(lQ - le)) + 48
        fx = eng.v.fixed(P)
        V = [lo for lo, _ in fx]
        W = max(1, _pow2_round(P + le - lQ))
        scale_p = 1 << P
        rows = [[r[-1] * V[i] - r[i] * scale_p for i in range(n)] + [r[-1] * W] for r in U]
        red, T = lll_int(rows)
        U = [[sum(T[i][m] * U[m][j] for m in range(d)) for j in range(d)] for i in range(d)]
        sh = P + le
        B = np.array([[_to_float_scaled(x, sh) for x in r] for r in red])
        cands = set()
        for c in enumerate_ball(B, radius):
            pq = [sum(c[i] * U[i][j] for i in range(d)) for j in range(d)]
            if pq[-1] == 0:
                continue
            if pq[-1] < 0:
                pq = [-x for x in pq]
            cands.add(pq[-1])
        found = None
        for qq in sorted(cands):
            if qq <= q:
                continue
            pp = eng.nearest_p(qq)
            if eng.less(qq, pp, q, p):
                found = (qq, pp)
                break
        if found is None:
            # Minkowski guarantees a point; widen the cylinder if float data misled us
            widen += 1.0
            if widen > 8:
                raise PrecisionExhausted("lattice search failed to find the next record")
            continue
        widen = 0.0
        q, p = found
        yield q, p


def _pow2_round(e: float) -> int:
    """round(2^e) for possibly large e."""
    if e < 1000:
        return int(round(2.0 ** e))
    k = int(e) - 60
    return int(round(2.0 ** (e - k))) << k


# ---------------------------------------------------------------------------
# features and serialization


def record_features(rec: BestApproxRecord, norm: str, moduli=(2, 3), with_lattice: bool = True):
    """Scalar and categorical pushforwards of the triple (Lambda_k, w_k, (p_k, q_k))."""
    w = np.array([float(x.mid) for x in rec.w])
    wn = float(np.abs(w).max()) if norm == "sup" else float(np.sqrt(w @ w))
    feats = {"w_norm": wn}
    for i, x in enumerate(w):
        feats[f"w_dir_{i}"] = float(x / wn) if wn else 0.0
    if with_lattice and rec.d > 2:
        feats["lambda1"] = float(shortest_vector(directional_lattice(rec).basis())[1])
    elif with_lattice:
        feats["lambda1"] = 1.0
    for M in moduli:
        pm, qm = (tuple(x % M for x in rec.p), rec.q % M)
        feats[f"res_{M}"] = ";".join(str(x) for x in pm + (qm,))
    return feats


def csv_header(d: int, moduli=()) -> str:
    n = d - 1
    cols = ["k", "q", "p", "err"] + [f"w_{i}" for i in range(n)] + ["lambda_hnf_unscaled"]
    cols += [f"res_mod_{M}" for M in moduli]
    return ",".join(cols)


def record_csv_row(rec: BestApproxRecord, moduli=()) -> str:
    lam = directional_lattice(rec)
    hnf_entries = ";".join(f"{x.numerator}/{x.denominator}" for row in lam.base.exact for x in row)
    cells = [str(rec.k), str(rec.q), ";".join(str(x) for x in rec.p), repr(float(rec.err.mid))]
    cells += [repr(float(x.mid)) for x in rec.w]
    cells.append(hnf_entries)
    res = residues(rec, moduli)
    for M in moduli:
        pm, qm = res[M]
        cells.append(";".join(str(x) for x in pm + (qm,)))
    return ",".join(cells)


def record_json(rec: BestApproxRecord, moduli=()) -> dict:
    lam = directional_lattice(rec)
    return {
        "k": rec.k,
        "q": str(rec.q),
        "p": [str(x) for x in rec.p],
        "err": [f"{rec.err.lo.numerator}/{rec.err.lo.denominator}",
                f"{rec.err.hi.numerator}/{rec.err.hi.denominator}"],
        "w": [repr(float(x.mid)) for x in rec.w],
        "lambda_hnf_unscaled": [[f"{x.numerator}/{x.denominator}" for x in row] for row in lam.base.exact],
        "lambda_scale": f"{rec.q}^(1/{rec.d - 1})",
        "residues": {str(M): [[str(x) for x in pm], str(qm)] for M, (pm, qm) in residues(rec, moduli).items()},
    }
