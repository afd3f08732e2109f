"""Lattices in R^k given by row bases.

A :class:`LatticeBasis` carries a float64 proxy for fast geometry and, when
available, an exact representation: either rational rows, or integer rows in
fixed point (``rows_int / 2**frac_bits``) with a per-entry error bound.  LLL
runs in exact integer arithmetic on whichever exact form exists, so the
recorded unimodular transform is exact and the Lovasz condition holds on the
fixed-point proxy without rounding slop.  Enumeration uses floating
Gram-Schmidt on a reduced basis with an inflated radius; every candidate near
a decision boundary is then rechecked exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .errors import BoundaryUndecidable, DimensionTooLarge, NotExact, PrecisionExhausted, ResourceCapExceeded
from .numfield import frac_det

NORMS = ("euclidean", "sup")
MAX_ENUM_DIM = 6
MAX_ENUM_POINTS = 2_000_000
_REL_MARGIN = 1e-9


@dataclass(frozen=True)
class LatticeBasis:
    rows: np.ndarray
    exact: tuple | None = None
    fixed: tuple | None = None
    frac_bits: int = 0
    fixed_err: Fraction = Fraction(0)
    transform: tuple | None = None

    @property
    def dim(self) -> int:
        return self.rows.shape[0]

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_rows(cls, rows) -> "LatticeBasis":
        """Exact when every entry is an int / Fraction / rational string, float otherwise."""
        rows = [list(r) for r in rows]
        if all(isinstance(x, (int, Fraction, str)) and not isinstance(x, bool) for r in rows for x in r):
            ex = tuple(tuple(Fraction(x) for x in r) for r in rows)
            return cls.from_exact(ex)
        return cls(np.array(rows, dtype=float))

    @classmethod
    def from_exact(cls, rows) -> "LatticeBasis":
        ex = tuple(tuple(Fraction(x) for x in r) for r in rows)
        return cls(np.array([[float(x) for x in r] for r in ex]), exact=ex)

    @classmethod
    def from_fixed(cls, rows_int, frac_bits: int, err: Fraction = Fraction(1, 2)) -> "LatticeBasis":
        """``err`` is the per-entry error bound in units of ``2**-frac_bits``."""
        ints = tuple(tuple(int(x) for x in r) for r in rows_int)
        return cls(_fixed_to_float(ints, frac_bits), fixed=ints, frac_bits=frac_bits,
                   fixed_err=Fraction(err) / (1 << frac_bits))

    def to_json(self) -> str:
        if self.exact is not None:
            data = {"exact": [[f"{x.numerator}/{x.denominator}" for x in r] for r in self.exact]}
        else:
            data = {"rows": [[repr(float(x)) for x in r] for r in self.rows]}
        return json.dumps(data)

    @classmethod
    def from_json(cls, text: str) -> "LatticeBasis":
        data = json.loads(text)
        if "exact" in data:
            return cls.from_exact(data["exact"])
        return cls(np.array([[float(x) for x in r] for r in data["rows"]]))


def _fixed_to_float(ints, frac_bits: int) -> np.ndarray:
    out = np.empty((len(ints), len(ints[0])))
    for i, r in enumerate(ints):
        for j, x in enumerate(r):
            shift = max(0, abs(x).bit_length() - 62)
            out[i, j] = math.ldexp(float(x >> shift), shift - frac_bits)
    return out


# ---------------------------------------------------------------------------
# covolume


def covolume(b: LatticeBasis):
    """|det| of the basis: exact Fraction for exact bases, float otherwise."""
    if b.exact is not None:
        return abs(frac_det(b.exact))
    if b.fixed is not None:
        det = abs(_int_det(b.fixed))
        k = b.dim
        with mpmath.workprec(64):
            return float(mpmath.ldexp(mpmath.mpf(det), -k * b.frac_bits))
    return float(abs(np.linalg.det(b.rows)))


def _int_det(rows) -> int:
    # Bareiss fraction-free elimination
    m = [list(r) for r in rows]
    n = len(m)
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            piv = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if piv is None:
                return 0
            m[k], m[piv] = m[piv], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def _rational_root(x: Fraction, k: int) -> Fraction | None:
    def iroot(n):
        r = round(n ** (1.0 / k)) if n < 2 ** 1000 else int(mpmath.nthroot(n, k))
        for c in (r - 1, r, r + 1):
            if c >= 0 and c ** k == n:
                return c
        return None

    p, q = iroot(x.numerator), iroot(x.denominator)
    return None if p is None or q is None else Fraction(p, q)


def normalize_covolume(b: LatticeBasis, bits: int = 128) -> LatticeBasis:
    """Scale the basis to covolume 1 (the homothety-class representative)."""
    k = b.dim
    cov = covolume(b)
    if cov == 0:
        raise PrecisionExhausted("degenerate basis: covolume 0")
    if b.exact is not None:
        root = _rational_root(Fraction(cov), k)
        if root is not None:
            return LatticeBasis.from_exact([[x / root for x in r] for r in b.exact])
        f = bits
        with mpmath.workprec(f + 64):
            c = mpmath.power(mpmath.mpf(cov.numerator) / cov.denominator, mpmath.mpf(-1) / k)
            ints = [[int(mpmath.nint(mpmath.ldexp(c * x.numerator / x.denominator, f))) for x in r]
                    for r in b.exact]
        return LatticeBasis.from_fixed(ints, f, Fraction(1))
    if b.fixed is not None:
        det = abs(_int_det(b.fixed))
        bl = max(abs(x).bit_length() for r in b.fixed for x in r)
        with mpmath.workprec(bl + 64):
            c = mpmath.power(mpmath.ldexp(mpmath.mpf(det), -k * b.frac_bits), mpmath.mpf(-1) / k)
            ints = [[int(mpmath.nint(c * x)) for x in r] for r in b.fixed]
            cerr = float(c) * float(b.fixed_err * (1 << b.frac_bits)) + 1.0
        return LatticeBasis.from_fixed(ints, b.frac_bits, Fraction(cerr).limit_denominator(10**6) + 1)
    return LatticeBasis(b.rows / float(cov) ** (1.0 / k))


# ---------------------------------------------------------------------------
# LLL


def lll_int(rows: Sequence[Sequence[int]], delta: Fraction = Fraction(99, 100)):
    """Integral LLL on linearly independent integer rows.

    Works only with integers (Gram determinants ``d_i`` and scaled
    Gram-Schmidt coefficients ``lam``), so the output is exact.  Returns
    ``(reduced_rows, U)`` with ``reduced = U @ rows`` and U unimodular.
    """
    b = [list(r) for r in rows]
    n = len(b)
    H = [[int(i == j) for j in range(n)] for i in range(n)]
    if n == 0:
        return b, H
    dn, dd = delta.numerator, delta.denominator
    dot = lambda u, v: sum(x * y for x, y in zip(u, v))  # noqa: E731

    d = [1] + [0] * n  # d[i], 1-based, d[0] = 1
    lam = [[0] * (n + 1) for _ in range(n + 1)]
    d[1] = dot(b[0], b[0])
    if d[1] == 0:
        raise ValueError("zero vector in basis")
    k, kmax = 2, 1

    def red(k, l):
        if 2 * abs(lam[k][l]) > d[l]:
            q = (2 * lam[k][l] + d[l]) // (2 * d[l])
            bk, bl = b[k - 1], b[l - 1]
            for j in range(len(bk)):
                bk[j] -= q * bl[j]
            hk, hl = H[k - 1], H[l - 1]
            for j in range(n):
                hk[j] -= q * hl[j]
            lam[k][l] -= q * d[l]
            for i in range(1, l):
                lam[k][i] -= q * lam[l][i]

    def swap(k):
        b[k - 1], b[k - 2] = b[k - 2], b[k - 1]
        H[k - 1], H[k - 2] = H[k - 2], H[k - 1]
        for j in range(1, k - 1):
            lam[k][j], lam[k - 1][j] = lam[k - 1][j], lam[k][j]
        lk = lam[k][k - 1]
        B = (d[k - 2] * d[k] + lk * lk) // d[k - 1]
        for i in range(k + 1, kmax + 1):
            t = lam[i][k]
            lam[i][k] = (d[k] * lam[i][k - 1] - lk * t) // d[k - 1]
            lam[i][k - 1] = (B * t + lk * lam[i][k]) // d[k]
        d[k - 1] = B

    while k <= n:
        if k > kmax:
            kmax = k
            for j in range(1, k + 1):
                u = dot(b[k - 1], b[j - 1])
                for i in range(1, j):
                    u = (d[i] * u - lam[k][i] * lam[j][i]) // d[i - 1]
                if j < k:
                    lam[k][j] = u
                else:
                    d[k] = u
            if d[k] == 0:
                raise ValueError("basis vectors are linearly dependent")
        red(k, k - 1)
        lk = lam[k][k - 1]
        if dd * d[k] * d[k - 2] < dn * d[k - 1] * d[k - 1] - dd * lk * lk:
            swap(k)
            k = max(2, k - 1)
            continue
        for l in range(k - 2, 0, -1):
            red(k, l)
        k += 1
    return b, H


def _rat_to_int_rows(rows):
    den = 1
    for r in rows:
        for x in r:
            den = den * x.denominator // math.gcd(den, x.denominator)
    return [[int(x * den) for x in r] for r in rows], den


def lll_reduce(b: LatticeBasis, delta=Fraction(99, 100)) -> LatticeBasis:
    """LLL-reduce; the unimodular transform is stored in ``transform``."""
    delta = Fraction(delta).limit_denominator(10**6)
    if b.exact is not None:
        ints, den = _rat_to_int_rows(b.exact)
        red, U = lll_int(ints, delta)
        ex = tuple(tuple(Fraction(x, den) for x in r) for r in red)
        return replace(LatticeBasis.from_exact(ex), transform=_compose(U, b.transform))
    if b.fixed is not None:
        red, U = lll_int(b.fixed, delta)
        umax = max(sum(abs(x) for x in r) for r in U)
        out = LatticeBasis.from_fixed(red, b.frac_bits, b.fixed_err * (1 << b.frac_bits) * umax)
        return replace(out, transform=_compose(U, b.transform))
    # float-only basis: reduce a 53-bit fixed-point image
    f = 52 - int(math.floor(math.log2(max(np.abs(b.rows).max(), 1e-300))))
    ints = [[int(round(math.ldexp(x, f))) for x in r] for r in b.rows]
    _, U = lll_int(ints, delta)
    Ua = np.array(U, dtype=float)
    return LatticeBasis(Ua @ b.rows, transform=_compose(U, b.transform))


def _compose(U, prev):
    if prev is None:
        return tuple(tuple(r) for r in U)
    n = len(U)
    return tuple(tuple(sum(U[i][k] * prev[k][j] for k in range(n)) for j in range(n)) for i in range(n))


def apply_transform(U, b: LatticeBasis) -> LatticeBasis:
    """The basis ``U @ b`` for an integer matrix U (exact when b is)."""
    n = len(U)
    if b.exact is not None:
        return LatticeBasis.from_exact(
            [[sum(U[i][k] * b.exact[k][j] for k in range(n)) for j in range(b.rows.shape[1])]
             for i in range(n)])
    if b.fixed is not None:
        umax = max(sum(abs(x) for x in r) for r in U)
        ints = [[sum(U[i][k] * b.fixed[k][j] for k in range(n)) for j in range(len(b.fixed[0]))]
                for i in range(n)]
        return LatticeBasis.from_fixed(ints, b.frac_bits, b.fixed_err * (1 << b.frac_bits) * umax)
    return LatticeBasis(np.array(U, dtype=float) @ b.rows)


# ---------------------------------------------------------------------------
# enumeration


def _gso(B: np.ndarray):
    n = B.shape[0]
    mu = np.zeros((n, n))
    bstar = np.zeros_like(B)
    bn = np.zeros(n)
    for i in range(n):
        v = B[i].copy()
        for j in range(i):
            mu[i, j] = B[i] @ bstar[j] / bn[j]
            v -= mu[i, j] * bstar[j]
        bstar[i] = v
        bn[i] = v @ v
    return mu, bn


def enumerate_ball(B: np.ndarray, radius: float):
    """All nonzero integer coefficient vectors x with ||x @ B||_2 <= radius (Fincke-Pohst).

    ``B`` should be reasonably reduced; the search tree is exhaustive for the
    float Gram-Schmidt data, so callers inflate ``radius`` slightly.
    """
    n = B.shape[0]
    mu, bn = _gso(B)
    R2 = radius * radius
    out = []
    x = [0] * n
    c = [0.0] * n
    partial = [0.0] * (n + 1)

    def rec(i):
        # partial[i+1] = sum over levels > i of squared GS contributions
        ci = -sum(mu[j, i] * x[j] for j in range(i + 1, n))
        rem = R2 - partial[i + 1]
        if rem < 0:
            return
        span = math.sqrt(rem / bn[i])
        lo, hi = math.ceil(ci - span - 1e-12), math.floor(ci + span + 1e-12)
        for xi in range(lo, hi + 1):
            y = xi - ci
            p = partial[i + 1] + y * y * bn[i]
            if p > R2 * (1 + 1e-12):
                continue
            x[i] = xi
            partial[i] = p
            if i == 0:
                if any(x):
                    out.append(tuple(x))
                    if len(out) > MAX_ENUM_POINTS:
                        raise ResourceCapExceeded("too many lattice points in enumeration ball")
            else:
                rec(i - 1)
        x[i] = 0

    rec(n - 1)
    return out


def _norm_f(v: np.ndarray, norm: str) -> float:
    return float(np.abs(v).max()) if norm == "sup" else float(math.sqrt(v @ v))


def _exact_cmp(b: LatticeBasis, coeffs, r: Fraction, norm: str):
    """Certified sign of ||v|| - r for v = coeffs @ basis; None when undecidable."""
    n = len(coeffs)
    if b.exact is not None:
        v = [sum(coeffs[i] * b.exact[i][j] for i in range(n)) for j in range(len(b.exact[0]))]
        if norm == "sup":
            m = max(abs(x) for x in v)
            return (m > r) - (m < r)
        s = sum(x * x for x in v)
        return (s > r * r) - (s < r * r)
    if b.fixed is not None:
        scale = 1 << b.frac_bits
        vi = [sum(coeffs[i] * b.fixed[i][j] for i in range(n)) for j in range(len(b.fixed[0]))]
        err = b.fixed_err * sum(abs(c) for c in coeffs)
        from .interval import Interval

        comps = [Interval(Fraction(x, scale) - err, Fraction(x, scale) + err) for x in vi]
        if norm == "sup":
            m = Interval(max(abs(c).lo for c in comps), max(abs(c).hi for c in comps))
            val = m - r
        else:
            s = Interval(0)
            for c in comps:
                s = s + c.square()
            val = s - r * r
        return val.sign()
    return None


def _reduced_float(b: LatticeBasis) -> tuple[LatticeBasis, np.ndarray]:
    if b.exact is None and b.fixed is None:
        # doubles are exact dyadic rationals; promote so boundary cases stay decidable
        b = LatticeBasis.from_exact([[Fraction(float(x)) for x in r] for r in b.rows])
    red = lll_reduce(b)
    return red, red.rows


def shortest_vector(b: LatticeBasis, norm: str = "euclidean"):
    """A shortest nonzero vector and its length lambda_1 (certified by enumeration)."""
    if b.dim > MAX_ENUM_DIM:
        raise DimensionTooLarge(f"certified enumeration limited to k <= {MAX_ENUM_DIM}")
    red, B = _reduced_float(b)
    best = min(range(B.shape[0]), key=lambda i: _norm_f(B[i], norm))
    ub = _norm_f(B[best], norm)
    radius = ub * (math.sqrt(B.shape[1]) if norm == "sup" else 1.0) * (1 + _REL_MARGIN)
    cands = enumerate_ball(B, radius)
    vals = [(_norm_f(np.array(c, dtype=float) @ B, norm), c) for c in cands]
    length, coeffs = min(vals)
    U = red.transform
    n = len(coeffs)
    orig = tuple(sum(coeffs[i] * U[i][j] for i in range(n)) for j in range(n))
    return np.array(coeffs, dtype=float) @ B, length, orig


def successive_minima_estimate(b: LatticeBasis, norm: str = "euclidean"):
    """lambda_1 exact (enumeration); higher minima estimated from the reduced basis."""
    red, B = _reduced_float(b)
    _, lam1, _ = shortest_vector(red, norm)
    rest = sorted(_norm_f(B[i], norm) for i in range(B.shape[0]))
    lams = [lam1] + rest[1:]
    for i in range(1, len(lams)):
        lams[i] = max(lams[i], lams[i - 1])
    return lams


def count_points_in_ball(b: LatticeBasis, r, norm: str = "euclidean") -> int:
    """#{v in L \\ 0 : ||v|| <= r}, with boundary cases settled exactly."""
    if b.dim > MAX_ENUM_DIM:
        raise DimensionTooLarge(f"certified enumeration limited to k <= {MAX_ENUM_DIM}")
    r_exact = Fraction(r) if not isinstance(r, float) else Fraction(repr(r))
    rf = float(r_exact)
    if rf <= 0:
        return 0
    red, B = _reduced_float(b)
    radius = rf * (math.sqrt(B.shape[1]) if norm == "sup" else 1.0) * (1 + 1e-6)
    count = 0
    for c in enumerate_ball(B, radius):
        v = _norm_f(np.array(c, dtype=float) @ B, norm)
        if abs(v - rf) > 1e-7 * max(rf, 1.0):
            count += v < rf
            continue
        s = _exact_cmp(red, c, r_exact, norm)
        if s is None:
            raise BoundaryUndecidable(f"lattice point norm straddles r={r}")
        count += s <= 0
    return count


def observables(b: LatticeBasis, radii, norm: str = "euclidean"):
    """lambda_1 and point counts N_r from one reduction and one enumeration."""
    red, B = _reduced_float(b)
    rs = [Fraction(r) if not isinstance(r, float) else Fraction(repr(r)) for r in radii]
    best = min(_norm_f(B[i], norm) for i in range(B.shape[0]))
    rmax = max([float(x) for x in rs] + [best])
    factor = math.sqrt(B.shape[1]) if norm == "sup" else 1.0
    cands = enumerate_ball(B, rmax * factor * (1 + 1e-6))
    norms = [(_norm_f(np.array(c, dtype=float) @ B, norm), c) for c in cands]
    lam1 = min(v for v, _ in norms)
    counts = []
    for r in rs:
        rf = float(r)
        n = 0
        for v, c in norms:
            if abs(v - rf) > 1e-7 * max(rf, 1.0):
                n += v < rf
                continue
            s = _exact_cmp(red, c, r, norm)
            if s is None:
                raise BoundaryUndecidable(f"lattice point norm straddles r={r}")
            n += s <= 0
        counts.append(n)
    return lam1, counts


# ---------------------------------------------------------------------------
# Hermite normal form


def hnf(rows) -> list[list[int]]:
    """Row-style Hermite normal form of the integer lattice generated by ``rows``."""
    A = [list(map(int, r)) for r in rows if any(r)]
    if not A:
        return []
    ncols = len(A[0])
    out_row = 0
    for col in range(ncols):
        while True:
            nz = [i for i in range(out_row, len(A)) if A[i][col] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(A[i][col]))
            A[out_row], A[piv] = A[piv], A[out_row]
            done = True
            for i in range(out_row + 1, len(A)):
                if A[i][col]:
                    q = A[i][col] // A[out_row][col]
                    A[i] = [a - q * p for a, p in zip(A[i], A[out_row])]
                    if A[i][col]:
                        done = False
            if done:
                break
        if out_row < len(A) and A[out_row][col] != 0:
            if A[out_row][col] < 0:
                A[out_row] = [-a for a in A[out_row]]
            p = A[out_row][col]
            for i in range(out_row):
                q = A[i][col] // p
                if q:
                    A[i] = [a - q * x for a, x in zip(A[i], A[out_row])]
            out_row += 1
        A = A[:out_row] + [r for r in A[out_row:] if any(r)]
    return [r for r in A[:out_row]]


def hnf_rational(rows):
    """HNF of a rational generating set, returned as exact Fraction rows."""
    fr = [[Fraction(x) for x in r] for r in rows]
    ints, den = _rat_to_int_rows(fr)
    return [[Fraction(x, den) for x in r] for r in hnf(ints)]


def hnf_equal(b1, b2) -> bool:
    """True iff two exact rational generating sets span the same lattice."""
    def exact_rows(b):
        if isinstance(b, LatticeBasis):
            if b.exact is None:
                raise NotExact("hnf_equal needs exact rational bases")
            return b.exact
        rows = [list(r) for r in b]
        if any(isinstance(x, float) for r in rows for x in r):
            raise NotExact("hnf_equal needs exact rational bases")
        return rows

    r1, r2 = exact_rows(b1), exact_rows(b2)
    if len(r1[0]) != len(r2[0]):
        return False
    return hnf_rational(r1) == hnf_rational(r2)


# ---------------------------------------------------------------------------
# I/O


def observables_csv_row(lattice_id, lam1: float, counts) -> str:
    return ",".join([str(lattice_id), repr(float(lam1))] + [str(int(c)) for c in counts])
