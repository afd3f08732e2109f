"""Exact arithmetic in totally real number fields.

A field is given by an irreducible integer polynomial all of whose roots are
real.  Its real embeddings are the roots, sorted ascending; each root is kept
as a dyadic isolating interval that is bisected on demand.  Elements are
polynomials of degree < d in the generator with rational coefficients, so
ring operations are exact.  Real values of elements are only ever handed
out as :class:`~orbitlab.interval.Interval` enclosures.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from pathlib import Path

import mpmath
import sympy

from .errors import (
    BadScalar,
    ConfigError,
    DegenerateInput,
    NotABasis,
    NotIrreducible,
    NotSquarefree,
    NotTotallyReal,
    PrecisionExhausted,
)
from .interval import Interval, interval_det

START_BITS = 256
MAX_BITS = 8192
# extra root bits allowed beyond MAX_BITS to absorb derivative growth in embed()
_ROOT_GUARD_BITS = 1024


# ---------------------------------------------------------------------------
# small exact linear algebra over Q


def frac_rank(rows) -> int:
    m = [[Fraction(x) for x in r] for r in rows]
    rank, ncols = 0, len(m[0]) if m else 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(m)) if m[r][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for r in range(rank + 1, len(m)):
            if m[r][c]:
                f = m[r][c] / m[rank][c]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
    return rank


def frac_det(rows) -> Fraction:
    m = [[Fraction(x) for x in r] for r in rows]
    n, det = len(m), Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        for r in range(c + 1, n):
            if m[r][c]:
                f = m[r][c] / m[c][c]
                m[r] = [a - f * b for a, b in zip(m[r], m[c])]
    return det


def frac_solve(rows, rhs):
    """Solve ``A x = b`` over Q for square nonsingular ``A``."""
    n = len(rows)
    m = [[Fraction(x) for x in r] + [Fraction(b)] for r, b in zip(rows, rhs)]
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        m[c], m[piv] = m[piv], m[c]
        inv = 1 / m[c][c]
        m[c] = [a * inv for a in m[c]]
        for r in range(n):
            if r != c and m[r][c]:
                f = m[r][c]
                m[r] = [a - f * b for a, b in zip(m[r], m[c])]
    return [m[r][n] for r in range(n)]


# ---------------------------------------------------------------------------
# polynomials (ascending coefficient lists)


def _poly_eval_dyadic_sign(coeffs, a: int, e: int) -> int:
    # sign of sum c_i (a / 2^e)^i, cleared of the positive denominator 2^(e*deg)
    d = len(coeffs) - 1
    acc = coeffs[d]
    for k in range(d - 1, -1, -1):
        acc = acc * a + (coeffs[k] << (e * (d - k)))
    return (acc > 0) - (acc < 0)


def _poly_rem(num, den):
    num = [Fraction(x) for x in num]
    while len(num) >= len(den) and any(num):
        if num[-1] == 0:
            num.pop()
            continue
        f = num[-1] / den[-1]
        shift = len(num) - len(den)
        for i, c in enumerate(den):
            num[shift + i] -= f * c
        num.pop()
    while num and num[-1] == 0:
        num.pop()
    return num


def _sturm(coeffs):
    p0 = [Fraction(c) for c in coeffs]
    p1 = [i * c for i, c in enumerate(p0)][1:]
    seq = [p0, p1]
    while True:
        r = _poly_rem(seq[-2], seq[-1])
        if not r:
            break
        seq.append([-c for c in r])
    return seq


def _eval_frac(poly, x):
    acc = Fraction(0)
    for c in reversed(poly):
        acc = acc * x + c
    return acc


def _sign_changes(seq, x) -> int:
    signs = [s for s in ((_eval_frac(p, x) > 0) - (_eval_frac(p, x) < 0) for p in seq) if s]
    return sum(1 for u, v in zip(signs, signs[1:]) if u != v)


def _sign_changes_inf(seq, positive: bool) -> int:
    signs = []
    for p in seq:
        lead = p[-1]
        deg = len(p) - 1
        s = (lead > 0) - (lead < 0)
        if not positive and deg % 2:
            s = -s
        signs.append(s)
    return sum(1 for u, v in zip(signs, signs[1:]) if u != v)


def sturm_count(coeffs, a=None, b=None) -> int:
    """Number of distinct real roots of ``coeffs`` in ``(a, b]`` (None = infinite)."""
    seq = _sturm(coeffs)
    va = _sign_changes_inf(seq, False) if a is None else _sign_changes(seq, Fraction(a))
    vb = _sign_changes_inf(seq, True) if b is None else _sign_changes(seq, Fraction(b))
    return va - vb


# ---------------------------------------------------------------------------
# fields


@dataclass
class _Root:
    # isolating interval [a / 2^e, b / 2^e]; f(a / 2^e) has sign sa, never zero
    a: int
    b: int
    e: int
    sa: int


class TotallyRealField:
    """A totally real field ``Q[x]/(f)`` with certified, refinable real roots.

    ``min_poly`` holds the integer coefficients ``[c0, c1, ..., cd]`` in
    ascending order.  ``identity_index`` selects the root used as the
    "identity" embedding when an element is read as a single real number.
    Use :func:`make_field` rather than calling the constructor directly.
    """

    def __init__(self, min_poly, identity_index: int | None = None):
        self.min_poly = tuple(int(c) for c in min_poly)
        self.degree = len(self.min_poly) - 1
        self.identity_index = self.degree - 1 if identity_index is None else int(identity_index)
        if not 0 <= self.identity_index < self.degree:
            raise ConfigError(f"identity_root_index {identity_index} out of range")
        self._lock = threading.Lock()
        self._roots = self._isolate()
        # x^d = sum reduction[i] x^i
        lead = Fraction(self.min_poly[-1])
        self._reduction = tuple(-Fraction(c) / lead for c in self.min_poly[:-1])

    def __repr__(self):
        return f"TotallyRealField({list(self.min_poly)}, identity_index={self.identity_index})"

    def __eq__(self, other):
        return (isinstance(other, TotallyRealField) and self.min_poly == other.min_poly
                and self.identity_index == other.identity_index)

    def __hash__(self):
        return hash((self.min_poly, self.identity_index))

    def __reduce__(self):
        return (TotallyRealField, (self.min_poly, self.identity_index))

    # -- root isolation -----------------------------------------------------

    def _isolate(self):
        f = self.min_poly
        bound = 1 + max(abs(Fraction(c, f[-1])) for c in f[:-1])
        e0 = 0
        B = 1 << max(0, math.ceil(math.log2(bound)) + 1)
        stack = [(-B, B, e0)]
        found = []
        while stack:
            a, b, e = stack.pop()
            n = sturm_count(f, Fraction(a, 1 << e), Fraction(b, 1 << e))
            if n == 0:
                continue
            if n == 1:
                sa = _poly_eval_dyadic_sign(f, a, e)
                if sa == 0:
                    # a rational root would make f reducible; cannot happen
                    raise NotIrreducible("rational root at isolation endpoint")
                found.append(_Root(a, b, e, sa))
                continue
            m = a + b
            stack.append((2 * a, m, e + 1))
            stack.append((m, 2 * b, e + 1))
        found.sort(key=lambda r: Fraction(r.a, 1 << r.e))
        return found

    def root_interval(self, j: int, bits: int) -> Interval:
        """Enclosure of the j-th root (ascending) of width at most ``2**-bits``."""
        if bits > MAX_BITS + _ROOT_GUARD_BITS:
            raise PrecisionExhausted(f"root refinement beyond {MAX_BITS} bits")
        r = self._roots[j]
        if (r.b - r.a) <= (1 << max(0, r.e - bits)) and r.e >= bits:
            return Interval(Fraction(r.a, 1 << r.e), Fraction(r.b, 1 << r.e))
        with self._lock:
            r = self._roots[j]
            a, b, e, sa = r.a, r.b, r.e, r.sa
            f = self.min_poly
            while not (e >= bits and (b - a) << bits <= (1 << e)):
                m = a + b
                a, b, e = 2 * a, 2 * b, e + 1
                sm = _poly_eval_dyadic_sign(f, m, e)
                if sm == sa:
                    a = m
                else:
                    b = m
            # copy-on-refine: readers holding the old record keep a valid enclosure
            self._roots[j] = _Root(a, b, e, sa)
        return Interval(Fraction(a, 1 << e), Fraction(b, 1 << e))

    def roots(self, bits: int = 64) -> list[Interval]:
        return [self.root_interval(j, bits) for j in range(self.degree)]

    # -- elements -----------------------------------------------------------

    def element(self, coeffs) -> "AlgebraicNumber":
        coeffs = [Fraction(c) if not isinstance(c, str) else _parse_fraction(c) for c in coeffs]
        if len(coeffs) > self.degree:
            return AlgebraicNumber(self, self._reduce(coeffs))
        return AlgebraicNumber(self, tuple(coeffs) + (Fraction(0),) * (self.degree - len(coeffs)))

    def __call__(self, x) -> "AlgebraicNumber":
        if isinstance(x, AlgebraicNumber):
            return x
        if isinstance(x, str):
            return self.parse(x)
        if isinstance(x, (list, tuple)):
            return self.element(x)
        return self.element([x])

    def gen(self) -> "AlgebraicNumber":
        return self.element([0, 1])

    def one(self) -> "AlgebraicNumber":
        return self.element([1])

    def zero(self) -> "AlgebraicNumber":
        return self.element([0])

    def parse(self, expr: str, symbol: str = "b") -> "AlgebraicNumber":
        """Parse a polynomial expression in the generator, e.g. ``"1 + 3*b^2"``."""
        s = sympy.Symbol(symbol)
        try:
            poly = sympy.Poly(sympy.sympify(expr.replace("^", "**"), locals={symbol: s}), s,
                              domain="QQ")
        except (sympy.SympifyError, sympy.PolynomialError, TypeError) as exc:
            raise ConfigError(f"cannot parse field element {expr!r}: {exc}") from None
        coeffs = [Fraction(int(c.p), int(c.q)) for c in reversed(poly.all_coeffs())]
        return self.element(coeffs)

    def _reduce(self, coeffs):
        c = list(coeffs)
        d = self.degree
        red = self._reduction
        for k in range(len(c) - 1, d - 1, -1):
            top = c[k]
            if top:
                for i in range(d):
                    c[k - d + i] += top * red[i]
            c.pop()
        c += [Fraction(0)] * (d - len(c))
        return tuple(c)


def _parse_fraction(s: str) -> Fraction:
    try:
        return Fraction(s.strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"bad rational literal {s!r}") from None


def make_field(coeffs, identity_root_index: int | None = None) -> TotallyRealField:
    """Build a totally real field from integer polynomial coefficients ``[c0..cd]``."""
    coeffs = [int(c) for c in coeffs]
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    if len(coeffs) - 1 < 2:
        raise DegenerateInput("field degree must be at least 2")
    g = 0
    for c in coeffs:
        g = math.gcd(g, c)
    coeffs = [c // g for c in coeffs]
    if coeffs[-1] < 0:
        coeffs = [-c for c in coeffs]
    x = sympy.Symbol("x")
    poly = sympy.Poly(list(reversed(coeffs)), x, domain="QQ")
    if not poly.is_irreducible:
        raise NotIrreducible(f"{poly.as_expr()} is reducible over Q")
    d = len(coeffs) - 1
    if sturm_count(coeffs) != d:
        raise NotTotallyReal(f"{poly.as_expr()} has non-real roots")
    return TotallyRealField(coeffs, identity_root_index)


def load_field(path) -> TotallyRealField:
    """Read a field file (TOML or JSON) with ``min_poly`` and ``identity_root_index``."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"field file not found: {path}")
    text = path.read_text()
    if path.suffix.lower() == ".json":
        data = json.loads(text)
    else:
        try:
            import tomllib
        except ModuleNotFoundError:  # python < 3.11
            import tomli as tomllib

        data = tomllib.loads(text)
    if "min_poly" not in data:
        raise ConfigError(f"{path}: missing min_poly")
    return make_field(data["min_poly"], data.get("identity_root_index"))


# ---------------------------------------------------------------------------
# elements


class AlgebraicNumber:
    """An element of a :class:`TotallyRealField` in the power basis."""

    __slots__ = ("field", "coeffs")

    def __init__(self, field: TotallyRealField, coeffs):
        self.field = field
        self.coeffs = tuple(Fraction(c) for c in coeffs)

    def _lift(self, other):
        if isinstance(other, AlgebraicNumber):
            if other.field != self.field:
                raise ValueError("elements of different fields")
            return other
        if isinstance(other, (int, Fraction)):
            return self.field.element([other])
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return AlgebraicNumber(self.field, (a + b for a, b in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return AlgebraicNumber(self.field, (-a for a in self.coeffs))

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return AlgebraicNumber(self.field, (a * other for a in self.coeffs))
        other = self._lift(other)
        if other is NotImplemented:
            return other
        d = self.field.degree
        prod = [Fraction(0)] * (2 * d - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    if b:
                        prod[i + j] += a * b
        return AlgebraicNumber(self.field, self.field._reduce(prod))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result, base = self.field.one(), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return AlgebraicNumber(self.field, (a / other for a in self.coeffs))
        return self * self._lift(other).inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.field.element([other])
        if not isinstance(other, AlgebraicNumber):
            return NotImplemented
        return self.field == other.field and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.field, self.coeffs))

    def __bool__(self):
        return any(self.coeffs)

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def multiplication_matrix(self):
        """Matrix whose column k holds the coordinates of ``self * x^k``."""
        d = self.field.degree
        cols = []
        cur = self
        x = self.field.gen()
        for _ in range(d):
            cols.append(cur.coeffs)
            cur = cur * x
        return [[cols[k][i] for k in range(d)] for i in range(d)]

    def inverse(self) -> "AlgebraicNumber":
        if not self:
            raise ZeroDivisionError("inverse of zero field element")
        d = self.field.degree
        y = frac_solve(self.multiplication_matrix(), [1] + [0] * (d - 1))
        return AlgebraicNumber(self.field, y)

    def embedding(self, j: int, bits: int = START_BITS) -> Interval:
        """Enclosure of sigma_j(self) of width at most ``2**-bits``."""
        if bits > MAX_BITS:
            raise PrecisionExhausted(f"requested {bits} bits exceeds cap {MAX_BITS}")
        if self.is_rational():
            return Interval(self.coeffs[0])
        target = Fraction(1, 1 << bits)
        extra = 8 + self.field.degree * max(1, max(abs(c) for c in self.coeffs).numerator.bit_length())
        while True:
            root = self.field.root_interval(j, bits + extra)
            val = Interval(0)
            for c in reversed(self.coeffs):
                val = val * root + c
            if val.width <= target:
                return val
            extra *= 2
            if bits + extra > MAX_BITS + _ROOT_GUARD_BITS:
                raise PrecisionExhausted("embedding enclosure does not shrink")

    def real(self, bits: int = START_BITS) -> Interval:
        """Enclosure under the designated identity embedding."""
        return self.embedding(self.field.identity_index, bits)

    def sign(self, bits: int = START_BITS, j: int | None = None) -> int:
        """Certified sign under embedding j (identity by default); exact for zero."""
        if not self:
            return 0
        j = self.field.identity_index if j is None else j
        while True:
            s = self.embedding(j, bits).sign()
            if s is not None:
                return s
            bits *= 2
            if bits > MAX_BITS:
                raise PrecisionExhausted("sign of a nonzero element not resolved")

    def to_strings(self) -> list[str]:
        return [f"{c.numerator}/{c.denominator}" for c in self.coeffs]

    def __repr__(self):
        terms = []
        for i, c in enumerate(self.coeffs):
            if c:
                terms.append(str(c) if i == 0 else f"{c}*b" + (f"^{i}" if i > 1 else ""))
        return "AlgebraicNumber(" + (" + ".join(terms) or "0") + ")"


def embed(x: AlgebraicNumber, bits: int = START_BITS) -> list[Interval]:
    """All d real embeddings of ``x`` (ascending root order), each of width <= 2^-bits."""
    return [x.embedding(j, bits) for j in range(x.field.degree)]


def field_norm(x: AlgebraicNumber) -> Fraction:
    """Exact norm N(x), the determinant of multiplication by x."""
    if not x:
        return Fraction(0)
    return frac_det(x.multiplication_matrix())


# ---------------------------------------------------------------------------
# orbit matrices


@dataclass(frozen=True)
class OrbitMatrix:
    """Rows are phi(alpha_i) = (sigma_1(alpha_i), ..., sigma_d(alpha_i))."""

    entries: tuple
    source_basis: tuple
    precision_bits: int
    field: TotallyRealField = dc_field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.entries)

    def det(self) -> Interval:
        return interval_det(self.entries)

    def to_numpy(self):
        import numpy as np

        return np.array([[float(e.mid) for e in row] for row in self.entries])

    def fixed_point(self, frac_bits: int):
        """Integer matrix round(2^frac_bits * g); error < 2^-frac_bits per entry when
        precision_bits >= frac_bits + 1."""
        g = self
        if self.precision_bits < frac_bits + 2:
            g = orbit_matrix(list(self.source_basis), frac_bits + 2)
        return [[round(e.mid * (1 << frac_bits)) for e in row] for row in g.entries]


def _coefficient_rank(basis) -> int:
    return frac_rank([b.coeffs for b in basis])


def orbit_matrix(basis, bits: int = START_BITS) -> OrbitMatrix:
    basis = list(basis)
    if not basis:
        raise NotABasis("empty basis")
    fld = basis[0].field
    d = fld.degree
    if len(basis) != d or any(b.field != fld for b in basis):
        raise NotABasis(f"need exactly {d} elements of one field")
    if _coefficient_rank(basis) < d:
        raise NotABasis("basis elements are linearly dependent over Q")
    while True:
        rows = tuple(tuple(embed(b, bits)) for b in basis)
        det = interval_det(rows)
        if det.sign() not in (None, 0):
            return OrbitMatrix(rows, tuple(basis), bits, fld)
        bits *= 2
        if bits > MAX_BITS:
            raise PrecisionExhausted("orbit matrix determinant not separated from 0")


def rescale_basis(basis, m: int, i_vec):
    """Scale the j-th basis element by ``m ** i_vec[j]`` (exact)."""
    m = int(m)
    if m in (0, 1, -1):
        raise BadScalar(f"rescaling factor m={m} must not be 0 or +-1")
    basis = list(basis)
    i_vec = [int(i) for i in i_vec]
    if len(i_vec) != len(basis):
        raise ConfigError("exponent vector length differs from basis length")
    return [b * (Fraction(m) ** i) for b, i in zip(basis, i_vec)]


def discriminant(field: TotallyRealField) -> int:
    x = sympy.Symbol("x")
    return int(sympy.discriminant(sympy.Poly(list(reversed(field.min_poly)), x)))


# ---------------------------------------------------------------------------
# units of real quadratic orders


def _is_squarefree(n: int) -> bool:
    return all(e == 1 for e in sympy.factorint(n).values())


def sqrt_continued_fraction(D: int):
    """Partial quotients ``a0, [a1, ..., a_r]`` of sqrt(D) (period listed once)."""
    a0 = math.isqrt(D)
    if a0 * a0 == D:
        return a0, []
    m, den, a = 0, 1, a0
    period = []
    while True:
        m = den * a - m
        den = (D - m * m) // den
        a = (a0 + m) // den
        period.append(a)
        if a == 2 * a0:
            return a0, period


def fundamental_unit_quadratic(D: int, field: TotallyRealField | None = None) -> AlgebraicNumber:
    """Fundamental unit eps > 1 of Z[sqrt(D)] from the continued fraction of sqrt(D).

    The returned element lives in ``field`` (default: the field of ``x^2 - D`` with
    the positive root as identity embedding).
    """
    D = int(D)
    if D <= 1 or not _is_squarefree(D):
        raise NotSquarefree(f"D={D} must be a squarefree integer > 1")
    if field is None:
        field = make_field([-D, 0, 1], identity_root_index=1)
    a0, period = sqrt_continued_fraction(D)
    h_prev, h = 1, a0
    k_prev, k = 0, 1
    i = 0
    while h * h - D * k * k not in (1, -1):
        a = period[i % len(period)]
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        i += 1
    sqrtD = _sqrt_element(field, D)
    unit = h + k * sqrtD
    if field_norm(unit) not in (1, -1):
        raise AssertionError("continued fraction produced a non-unit")
    return unit


def _sqrt_element(field: TotallyRealField, D: int) -> AlgebraicNumber:
    if field.degree != 2:
        raise ConfigError("quadratic units need a degree-2 field")
    # solve y^2 = D in field, take the root positive under the identity embedding
    c0, c1, c2 = (Fraction(c) for c in field.min_poly)
    b = field.gen()
    # b = (-c1 + s sqrt(disc)) / (2 c2), disc = c1^2 - 4 c0 c2 = D * t^2
    disc = c1 * c1 - 4 * c0 * c2
    t2 = disc / D
    t = Fraction(math.isqrt(t2.numerator), math.isqrt(t2.denominator))
    if t * t != t2:
        raise ConfigError(f"field {field.min_poly} does not contain sqrt({D})")
    y = (2 * c2 * b + c1) / t
    return y if y.sign() > 0 else -y


def regulator(unit: AlgebraicNumber, prec: int = 128) -> float:
    with mpmath.workprec(prec):
        return float(mpmath.log(abs(unit.real(prec).to_mpf(prec))))


def module_coordinates(basis, x: AlgebraicNumber):
    """Rational coordinates of x in the Q-basis ``basis``."""
    cols = [[b.coeffs[i] for b in basis] for i in range(len(basis))]
    return frac_solve(cols, x.coeffs)


def stabilizing_unit_power(basis, unit: AlgebraicNumber, max_power: int = 4096) -> int:
    """Least k >= 1 with unit^k * M = M for the Z-module M spanned by ``basis``."""
    power = unit
    for k in range(1, max_power + 1):
        if all(c.denominator == 1 for b in basis for c in module_coordinates(basis, power * b)):
            if all(c.denominator == 1 for b in basis
                   for c in module_coordinates(basis, power.inverse() * b)):
                return k
        power = power * unit
    raise PrecisionExhausted(f"no unit power <= {max_power} stabilizes the module")
