"""Truncated p-adic integers and exhaustive checks of (C, alpha)-good functions.

Everything here is exact at a stated resolution ``p^-N``.  A function
``f(s) = sum c_il s^l exp(lambda_i s)`` with coefficients in ``Q_p`` is
rescaled by a power of p to have ``Z_p`` coefficients; the rescaled function
is 1-Lipschitz on ``Z_p``, so its value mod ``p^N`` is constant on every
residue class mod ``p^N``.  Measures of sublevel sets ``{|f| < eps}`` for
``eps > p^-N`` (rescaled) and sups over balls are therefore exact rationals
computed from one valuation table over all ``p^N`` residues.  Statements are
"verified at resolution N", never "proved on Z_p".
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import sympy

from .errors import (
    ConfigError,
    EnumerationTooLarge,
    NoWitnessAtResolution,
    OutsideConvergenceDomain,
    PreconditionViolation,
    PrecisionBelowResolution,
)

ENUMERATION_CAP = 10 ** 7
DEFAULT_N = 8


def _vp(n: int, p: int) -> int:
    """Valuation of a nonzero integer."""
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _vp_factorial(k: int, p: int) -> int:
    v, q = 0, p
    while q <= k:
        v += k // q
        q *= p
    return v


def _frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def _exact(x) -> Fraction:
    """Exact rational from int, Fraction or a decimal / 'a/b' string."""
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


class PadicInt:
    """``p^-shift * value`` with ``value`` known modulo ``p^N``.

    Ring operations are defined for ``shift == 0`` (elements of ``Z_p``); a
    nonzero shift only appears on values of functions with ``Q_p``
    coefficients.
    """

    __slots__ = ("p", "N", "value", "shift", "_v")

    def __init__(self, p: int, N: int, value: int, shift: int = 0):
        if N < 1:
            raise ConfigError("precision N must be >= 1")
        self.p, self.N, self.shift = int(p), int(N), int(shift)
        self.value = int(value) % (self.p ** self.N)
        self._v = None

    @property
    def modulus(self) -> int:
        return self.p ** self.N

    @property
    def valuation(self) -> int:
        """Valuation of ``value``; equals N when value is 0 mod p^N."""
        if self._v is None:
            self._v = self.N if self.value == 0 else _vp(self.value, self.p)
        return self._v

    @property
    def resolved(self) -> bool:
        return self.valuation < self.N

    def norm(self) -> Fraction:
        """|x|_p; an upper bound ``p^(shift-N)`` when not resolved."""
        return Fraction(self.p) ** (self.shift - self.valuation)

    def _other(self, o) -> "PadicInt":
        if isinstance(o, int):
            return PadicInt(self.p, self.N, o)
        if not isinstance(o, PadicInt) or o.p != self.p or o.N != self.N:
            raise ConfigError("p-adic operands must share p and N")
        return o

    def _ring(self, o):
        o = self._other(o)
        if self.shift or o.shift:
            raise ConfigError("ring operations need elements of Z_p (shift 0)")
        return o

    def __add__(self, o):
        o = self._ring(o)
        return PadicInt(self.p, self.N, self.value + o.value)

    __radd__ = __add__

    def __neg__(self):
        return PadicInt(self.p, self.N, -self.value, self.shift)

    def __sub__(self, o):
        return self + (-self._ring(o))

    def __rsub__(self, o):
        return self._other(o) - self

    def __mul__(self, o):
        o = self._ring(o)
        return PadicInt(self.p, self.N, self.value * o.value)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        return PadicInt(self.p, self.N, pow(self.value, int(k), self.modulus))

    def __eq__(self, o):
        if isinstance(o, int):
            o = PadicInt(self.p, self.N, o)
        if not isinstance(o, PadicInt):
            return NotImplemented
        return (self.p, self.N, self.value, self.shift) == (o.p, o.N, o.value, o.shift)

    def __hash__(self):
        return hash((self.p, self.N, self.value, self.shift))

    def reduce(self, N: int) -> "PadicInt":
        return PadicInt(self.p, min(N, self.N), self.value, self.shift)

    def __repr__(self):
        s = f", shift={self.shift}" if self.shift else ""
        return f"PadicInt(p={self.p}, N={self.N}, value={self.value}{s})"


def _domain_min(p: int) -> int:
    return 2 if p == 2 else 1


def _check_domain(x: PadicInt) -> None:
    if x.shift:
        raise OutsideConvergenceDomain("argument must lie in Z_p")
    if x.valuation < _domain_min(x.p):
        raise OutsideConvergenceDomain(
            f"need valuation >= {_domain_min(x.p)} for p={x.p}, got {x.valuation}")


def exp_precision_loss(p: int, v: int, N: int) -> int:
    """Digits lost by the truncated exp series at argument valuation v.

    An error ``p^N`` in the argument moves the k-th term by valuation at least
    ``N + (k-1) v - v_p((k-1)!)``, which is never below N on the domain; the
    loss is the largest shortfall over the terms that are summed.
    """
    loss, k = 0, 1
    while k * v - (k - 1) / (p - 1) < N + 1:
        loss = max(loss, _vp_factorial(k - 1, p) - (k - 1) * v)
        k += 1
    return loss


def padic_exp(x: PadicInt) -> PadicInt:
    """sum x^k / k!, exact mod p^N (the argument error is not amplified on the domain)."""
    _check_domain(x)
    p, N = x.p, x.N
    mod = p ** N
    v = x.valuation
    if x.value == 0:
        return PadicInt(p, N, 1)
    total, power, k = 1, 1, 1
    # term valuation >= k v - (k - 1)/(p - 1); stop once it passes N
    while k * v - (k - 1) / (p - 1) < N + 1:
        power *= x.value
        e = _vp_factorial(k, p)
        unit = math.factorial(k) // p ** e
        total += (power // p ** e) * pow(unit, -1, mod)
        k += 1
    return PadicInt(p, N - exp_precision_loss(p, v, N), total)


def _ilog(k: int, p: int) -> int:
    e = 0
    while p ** (e + 1) <= k:
        e += 1
    return e


def padic_log(x: PadicInt) -> PadicInt:
    """log(1 + y) = sum (-1)^(k+1) y^k / k for y = x - 1 in the exp domain."""
    if x.shift:
        raise OutsideConvergenceDomain("argument must lie in Z_p")
    y = x - 1
    if y.value != 0 and y.valuation < _domain_min(x.p):
        raise OutsideConvergenceDomain(
            f"need |x - 1|_p <= p^-{_domain_min(x.p)}, got valuation {y.valuation}")
    p, N = x.p, x.N
    mod = p ** N
    if y.value == 0:
        return PadicInt(p, N, 0)
    v = y.valuation
    total, power, k = 0, 1, 1
    while k * v - _ilog(k, p) < N + 1:
        power *= y.value
        e = _vp(k, p)
        term = (power // p ** e) * pow(k // p ** e, -1, mod)
        total += term if k % 2 else -term
        k += 1
    return PadicInt(p, N, total)


# ---------------------------------------------------------------------------
# good-function specifications


@dataclass(frozen=True)
class Term:
    c_num: int
    c_den_valuation: int
    i: int
    l: int


@dataclass(frozen=True)
class GoodFunctionSpec:
    """f(s) = sum over terms of (c_num / p^c_den_valuation) s^l exp(lambda_i s)."""

    p: int
    N: int
    terms: tuple
    lambdas: tuple  # lambda_i as integers (exact elements of p Z_p)
    n: int = 0

    def __post_init__(self):
        if not sympy.isprime(self.p):
            raise ConfigError(f"p={self.p} is not prime")
        if not self.terms:
            raise ConfigError("good-function spec has no terms")
        n = self.n or max(len(self.lambdas), max(t.l for t in self.terms) + 1)
        object.__setattr__(self, "n", n)
        for t in self.terms:
            if not 1 <= t.i <= len(self.lambdas):
                raise ConfigError(f"term refers to lambda_{t.i}, have {len(self.lambdas)}")
            if not 0 <= t.l <= n - 1:
                raise ConfigError(f"power s^{t.l} outside 0..{n - 1}")
        mod = self.p ** self.N
        for lam in self.lambdas:
            if lam % mod and _vp(lam, self.p) < _domain_min(self.p):
                raise OutsideConvergenceDomain(f"lambda={lam} outside the exp domain for p={self.p}")
        res = [lam % mod for lam in self.lambdas]
        if len(set(res)) != len(res):
            raise ConfigError("lambdas are not pairwise distinct mod p^N")

    @property
    def shift(self) -> int:
        """m with p^m f having Z_p coefficients."""
        return max(0, max(t.c_den_valuation for t in self.terms))

    def int_coefficients(self):
        """(coef, i, l) of the rescaled function g = p^shift f, coef an integer."""
        m = self.shift
        return [(t.c_num * self.p ** (m - t.c_den_valuation), t.i, t.l) for t in self.terms]

    def value_at_zero(self) -> Fraction:
        return sum((Fraction(t.c_num) / Fraction(self.p) ** t.c_den_valuation
                    for t in self.terms if t.l == 0), Fraction(0))

    @classmethod
    def monomial(cls, p: int, l: int, N: int = DEFAULT_N) -> "GoodFunctionSpec":
        return cls(p, N, (Term(1, 0, 1, l),), (0,))

    def to_json(self) -> str:
        data = {
            "p": self.p, "N": self.N, "n": self.n,
            "terms": [{"c_num": t.c_num, "c_den_valuation": t.c_den_valuation, "i": t.i, "l": t.l}
                      for t in self.terms],
            "lambdas": [_lambda_json(lam, self.p) for lam in self.lambdas],
        }
        return json.dumps(data, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "GoodFunctionSpec":
        try:
            data = json.loads(text)
            p = int(data["p"])
            terms = tuple(Term(int(t["c_num"]), int(t.get("c_den_valuation", 0)), int(t["i"]), int(t["l"]))
                          for t in data["terms"])
            lambdas = tuple(_lambda_parse(x, p) for x in data["lambdas"])
            return cls(p, int(data.get("N", DEFAULT_N)), terms, lambdas, int(data.get("n", 0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad good-function spec: {exc}") from exc


def _lambda_json(lam: int, p: int) -> dict:
    if lam == 0:
        return {"num": 0, "valuation": 0}
    v = _vp(lam, p)
    return {"num": lam // p ** v, "valuation": v}


def _lambda_parse(x, p: int) -> int:
    if isinstance(x, dict):
        return int(x["num"]) * p ** int(x.get("valuation", 0))
    return int(x)


def random_spec(p: int, n: int, N: int, seed: int, lambda_valuation: int | None = None,
                zero_at_origin: bool = False) -> GoodFunctionSpec:
    """A seeded spec with n distinct lambdas and up to n*n terms c_il s^l exp(lambda_i s).

    ``zero_at_origin`` adjusts the constant terms so that f(0) = 0, the
    setting of the weak intermediate value theorem's second statement.
    """
    rng = np.random.Generator(np.random.Philox(key=[int(seed), p * 1000 + n]))
    k = _domain_min(p) if lambda_valuation is None else lambda_valuation
    mod = p ** N
    lambdas: list[int] = []
    while len(lambdas) < n:
        u = int(rng.integers(1, p ** 3))
        lam = u * p ** k
        if lam % mod and all(lam % mod != x % mod for x in lambdas):
            lambdas.append(lam)
    terms = []
    for i in range(1, n + 1):
        for l in range(n):
            c = int(rng.integers(-p ** 2, p ** 2 + 1))
            if c:
                terms.append(Term(c, int(rng.integers(0, 2)), i, l))
    if zero_at_origin:
        terms = [t for t in terms if t.l != 0]
        terms.append(Term(1, 0, 1, 0))
        terms.append(Term(-1, 0, 2 if n > 1 else 1, 0))
        if n == 1:
            terms = [t for t in terms if t.l != 0]
    if not any(t.l or len(lambdas) > 1 for t in terms):
        terms.append(Term(1, 0, 1, 1))
    return GoodFunctionSpec(p, N, tuple(terms), tuple(lambdas), n)


def eval_good_function(spec: GoodFunctionSpec, s) -> PadicInt:
    """f(s) by direct series evaluation, as ``p^-shift * g(s)`` with g(s) mod p^N."""
    p, N = spec.p, spec.N
    s = s if isinstance(s, PadicInt) else PadicInt(p, N, int(s))
    coefs = spec.int_coefficients()
    if all(c % p ** N == 0 for c, _, _ in coefs):
        raise PrecisionBelowResolution("every coefficient vanishes mod p^N")
    exps = {}
    total = PadicInt(p, N, 0)
    for c, i, l in coefs:
        if i not in exps:
            exps[i] = padic_exp(PadicInt(p, N, spec.lambdas[i - 1]) * s)
        total = total + PadicInt(p, N, c) * s ** l * PadicInt(p, N, exps[i].value)
    return PadicInt(p, N, total.value, spec.shift)


# ---------------------------------------------------------------------------
# valuation tables


@dataclass(frozen=True)
class ValuationTable:
    """v_p(g(r)) for every residue r mod p^N (N where g(r) = 0 mod p^N); |f| = p^(shift - v)."""

    p: int
    N: int
    shift: int
    v: np.ndarray = field(repr=False)


def _pow_table(base: int, p: int, N: int) -> np.ndarray:
    """base^r mod p^N for r = 0 .. p^N - 1 (block method, int64-safe for p^N <= 1e7)."""
    mod = p ** N
    B = math.isqrt(mod - 1) + 1
    small = np.empty(B, dtype=np.int64)
    acc = 1
    for r in range(B):
        small[r] = acc
        acc = acc * base % mod
    big_step = acc  # base^B
    nb = -(-mod // B)
    big = np.empty(nb, dtype=np.int64)
    acc = 1
    for a in range(nb):
        big[a] = acc
        acc = acc * big_step % mod
    return ((big[:, None] * small[None, :]) % mod).reshape(-1)[:mod]


def _valuations(vals: np.ndarray, p: int, N: int) -> np.ndarray:
    v = np.zeros(vals.shape, dtype=np.int16)
    for k in range(1, N + 1):
        v += (vals % p ** k == 0)
    return v


def valuation_table(spec: GoodFunctionSpec, cap: int = ENUMERATION_CAP) -> ValuationTable:
    """Valuations of g at all residues, using exp(lambda r) = exp(lambda)^r for integers r."""
    p, N = spec.p, spec.N
    mod = p ** N
    if mod > cap:
        raise EnumerationTooLarge(f"p^N = {mod} residues exceeds the cap {cap}")
    coefs = spec.int_coefficients()
    if all(c % mod == 0 for c, _, _ in coefs):
        raise PrecisionBelowResolution("every coefficient vanishes mod p^N")
    r = np.arange(mod, dtype=np.int64)
    powers = {0: np.ones(mod, dtype=np.int64)}
    total = np.zeros(mod, dtype=np.int64)
    exps = {}
    for c, i, l in coefs:
        if i not in exps:
            E = padic_exp(PadicInt(p, N, spec.lambdas[i - 1])).value
            exps[i] = _pow_table(E, p, N)
        if l not in powers:
            acc = powers[max(k for k in powers if k < l)]
            for _ in range(l - max(k for k in powers if k < l)):
                acc = acc * r % mod
            powers[l] = acc
        total = (total + (c % mod) * (powers[l] * exps[i] % mod)) % mod
    return ValuationTable(p, N, spec.shift, _valuations(total, p, N))


def _as_table(f) -> ValuationTable:
    return f if isinstance(f, ValuationTable) else valuation_table(f)


def _ball_view(tab: ValuationTable, center: int, j: int) -> np.ndarray:
    p, N = tab.p, tab.N
    if not 0 <= j <= N:
        raise ConfigError(f"ball radius p^-{j} outside 0..N")
    pj = p ** j
    return tab.v.reshape(p ** (N - j), pj)[:, center % pj]


def _sublevel_k(tab: ValuationTable, eps: Fraction, closed: bool = False) -> int:
    """k >= 0 with {|f| < eps} (or {|f| <= eps}) equal to {v >= k}.

    Requires eps above the resolution.
    """
    p, m = tab.p, tab.shift
    k = 0
    while (Fraction(p) ** (m - k) > eps) if closed else (Fraction(p) ** (m - k) >= eps):
        k += 1
        if k > tab.N:
            raise PrecisionBelowResolution(f"eps={eps} is at or below the resolution p^{m - tab.N}")
    return k


def sublevel_measure(f, ball=(0, 0), eps=Fraction(1), N: int | None = None,
                     closed: bool = False) -> dict:
    """Exact Haar measure of {x in B : |f(x)| < eps} at resolution p^-N, and ||f||_B.

    ``ball`` is ``(center, j)`` for ``center + p^j Z_p``.  ``closed`` switches
    to the sublevel set {|f| <= eps}.
    """
    tab = _as_table(f)
    if N is not None and N != tab.N:
        raise ConfigError("resolution N must match the spec")
    eps = _exact(eps)
    center, j = ball
    vb = _ball_view(tab, center, j)
    if eps <= 0:
        raise ConfigError("eps must be positive")
    k = _sublevel_k(tab, eps, closed)
    count = int(np.count_nonzero(vb >= k))
    vmin = int(vb.min())
    p = tab.p
    measure = Fraction(count, p ** tab.N)
    sup = Fraction(p) ** (tab.shift - vmin)
    return {"measure": measure, "ball_measure": Fraction(1, p ** j), "sup": sup,
            "sup_resolved": vmin < tab.N, "k": k}


# ---------------------------------------------------------------------------
# (C, alpha)-good certificates


def _ratio_le(mu_rel: Fraction, t: Fraction, alpha: Fraction, C: Fraction) -> bool:
    """mu_rel <= C * t^alpha, exactly (t > 0, alpha = a/b > 0)."""
    a, b = alpha.numerator, alpha.denominator
    return mu_rel ** b <= C ** b * t ** a


def _ratio_float(mu_rel: Fraction, t: Fraction, alpha: Fraction) -> float:
    return float(mu_rel) / float(t) ** float(alpha) if t else math.inf


def auto_balls(p: int, N: int, max_j: int | None = None):
    """All balls c + p^j Z_p with 0 <= j <= max_j (default N - 1)."""
    max_j = N - 1 if max_j is None else max_j
    return [(c, j) for j in range(max_j + 1) for c in range(p ** j)]


def check_good(f, C, alpha, balls="auto", eps="sup", closed: bool = False) -> dict:
    """Check mu{x in B: |f| < eps} <= C (eps/||f||_B)^alpha mu(B) exhaustively.

    ``eps="sup"`` covers every eps above the resolution: the measure is a step
    function that jumps at powers of p, so the worst case for each step is the
    right limit at ``p^(shift - k)``.  A failing right limit is turned into a
    concrete rational witness eps slightly above it.  Balls whose sup is below
    resolution are listed as unresolved and not checked.  With ``closed`` the
    sublevel sets are {|f| <= eps}; the worst eps of each step is then the
    power of p itself and the verdict over all eps is unchanged.
    """
    tab = _as_table(f)
    p, N, m = tab.p, tab.N, tab.shift
    C, alpha = _exact(C), _exact(alpha)
    if C <= 0 or alpha <= 0:
        raise ConfigError("C and alpha must be positive")
    if balls == "auto":
        balls = auto_balls(p, N)
    eps_list = None if eps == "sup" else [_exact(e) for e in eps]
    worst = None
    checked = 0
    unresolved = []
    by_level: dict = {}
    for j in sorted({j for _, j in balls}):
        pj = p ** j
        V = tab.v.reshape(p ** (N - j), pj)
        vmins = V.min(axis=0)
        ks = np.arange(N + 1, dtype=np.int16)
        counts = (V[:, :, None] >= ks[None, None, :]).sum(axis=0)  # (p^j, N+1)
        by_level[j] = (vmins, counts)
    for center, j in balls:
        vmins, counts = by_level[j]
        c = center % p ** j
        vmin = int(vmins[c])
        if vmin >= N:
            unresolved.append([int(center), int(j)])
            continue
        S = Fraction(p) ** (m - vmin)
        per = p ** (N - j)
        cases = []
        if eps_list is None:
            for k in range(vmin, N + 1):
                cases.append((k, Fraction(p) ** (m - k), not closed))
        else:
            for e in eps_list:
                cases.append((_sublevel_k(tab, e, closed), e, False))
        for k, e, limit in cases:
            mu_rel = Fraction(int(counts[c, min(k, N)]), per)
            t = e / S
            checked += 1
            ok = _ratio_le(mu_rel, t, alpha, C)
            ratio = _ratio_float(mu_rel, t, alpha)
            if worst is None or ratio > worst["ratio"] or (not ok and worst["pass"]):
                worst = {"ball": [int(center), int(j)], "eps": e, "right_limit": limit,
                         "measure_rel": mu_rel, "sup": S, "ratio": ratio, "pass": ok}
    if worst is None:
        raise PrecisionBelowResolution("no ball has a resolved sup")
    passed = _ratio_le(worst["measure_rel"], worst["eps"] / worst["sup"], alpha, C) \
        if worst["pass"] else False
    witness = None
    if not passed:
        witness = _concrete_witness(worst, p, alpha, C)
    return {
        "p": p, "N": N, "C": C, "alpha": alpha, "pass": passed,
        "sublevel": "|f| <= eps" if closed else "|f| < eps",
        "max_ratio": worst["ratio"], "worst": worst, "witness": witness,
        "cases_checked": checked, "unresolved_balls": unresolved,
        "scope": f"verified at resolution p^-{N} on the listed balls",
    }


def _concrete_witness(worst: dict, p: int, alpha: Fraction, C: Fraction) -> dict:
    e, S, mu = worst["eps"], worst["sup"], worst["measure_rel"]
    if worst["right_limit"]:
        # any eps in (e, p e) has the same sublevel set; move in until the bound fails
        j = 1
        while True:
            cand = e * (1 + Fraction(1, 2 ** j))
            if not _ratio_le(mu, cand / S, alpha, C):
                e = cand
                break
            j += 1
    return {"ball": worst["ball"], "eps": e, "measure_rel": mu, "sup": S,
            "bound": f"C*(eps/sup)^alpha with C={_frac_str(C)}, alpha={_frac_str(alpha)}"}


def tight_constant(f, alpha, balls="auto", bits: int = 60) -> Fraction:
    """Smallest dyadic C (denominator 2^bits) that passes check_good in sup mode."""
    tab = _as_table(f)
    rep = check_good(tab, Fraction(10 ** 9), alpha, balls)
    C = Fraction(math.ceil(rep["max_ratio"] * 2 ** bits) + 1, 2 ** bits)
    while not check_good(tab, C, alpha, balls)["pass"]:
        C += Fraction(1, 2 ** (bits // 2))
    return C


# ---------------------------------------------------------------------------
# weak intermediate value theorem


@dataclass(frozen=True)
class CPrime:
    """C' = (2 C p)^(1/alpha), kept symbolic so comparisons stay exact."""

    C: Fraction
    alpha: Fraction
    p: int

    @property
    def value(self) -> float:
        return float(2 * self.C * self.p) ** (1 / float(self.alpha))

    def ge(self, x: Fraction) -> bool:
        """C' >= x for x > 0."""
        a, b = self.alpha.numerator, self.alpha.denominator
        return x ** a <= (2 * self.C * self.p) ** b


def _cprime(Cprime) -> CPrime | Fraction:
    return Cprime if isinstance(Cprime, CPrime) else _exact(Cprime)


def _cp_ge(cp, x: Fraction) -> bool:
    return cp.ge(x) if isinstance(cp, CPrime) else cp >= x


def _cp_str(cp) -> str:
    if isinstance(cp, CPrime):
        return f"(2*{_frac_str(cp.C)}*{cp.p})^(1/({_frac_str(cp.alpha)}))"
    return _frac_str(cp)


def weak_ivt_check(f, n_max: int | None = None, Cprime=None) -> dict:
    """Ratios R_n = S_(n+1) / S_n with S_n = sup over p^n Z_p of |f|, exhaustively.

    Only levels whose sups are both resolved are reported.  With ``Cprime``
    each ratio is checked against ``R_n >= 1/C'``.
    """
    tab = _as_table(f)
    p, N, m = tab.p, tab.N, tab.shift
    n_max = N - 1 if n_max is None else n_max
    cp = _cprime(Cprime) if Cprime is not None else None
    sups = []
    for n in range(min(n_max, N - 1) + 1):
        vmin = int(tab.v[:: p ** n].min())
        sups.append(None if vmin >= N else Fraction(p) ** (m - vmin))
    rows = []
    ok = True
    for n in range(len(sups) - 1):
        a, b = sups[n], sups[n + 1]
        if a is None or b is None:
            break
        R = b / a
        row = {"n": n, "sup_n": a, "sup_n1": b, "ratio": R}
        if cp is not None:
            row["holds"] = _cp_ge(cp, 1 / R)
            ok = ok and row["holds"]
        rows.append(row)
    if not rows:
        raise PrecisionBelowResolution("no pair of consecutive resolved sups")
    return {"p": p, "N": N, "levels": rows, "Cprime": None if cp is None else _cp_str(cp),
            "holds": ok if cp is not None else None}


def find_controlled_value(f, rho, Cprime, spec: GoodFunctionSpec | None = None) -> dict:
    """Smallest residue s with rho/C' <= |f(s)| < rho at resolution p^-N.

    Requires f(0) = 0 (checked exactly when the spec is available) and some
    resolved u with |f(u)| >= rho.
    """
    if isinstance(f, GoodFunctionSpec):
        spec = f
    if spec is not None and spec.value_at_zero() != 0:
        raise PreconditionViolation(f"f(0) = {spec.value_at_zero()} is not 0")
    tab = _as_table(f)
    p, N, m = tab.p, tab.N, tab.shift
    rho = _exact(rho)
    cp = _cprime(Cprime)
    if spec is None and tab.v[0] < N:
        raise PreconditionViolation("f(0) is not 0 at this resolution")
    resolved = tab.v < N
    if not any(Fraction(p) ** (m - int(v)) >= rho for v in np.unique(tab.v[resolved])):
        raise NoWitnessAtResolution(f"no resolved u with |f(u)| >= {rho}")
    good_v = [int(v) for v in range(N)
              if Fraction(p) ** (m - v) < rho and _cp_ge(cp, rho / Fraction(p) ** (m - v))]
    if not good_v:
        raise NoWitnessAtResolution("no valuation level lies in [rho/C', rho)")
    hits = np.nonzero(np.isin(tab.v, good_v))[0]
    if len(hits) == 0:
        raise NoWitnessAtResolution("no residue attains a value in [rho/C', rho)")
    s = int(hits[0])
    return {"s": s, "abs_f": Fraction(p) ** (m - int(tab.v[s])), "rho": rho, "Cprime": _cp_str(cp)}


# ---------------------------------------------------------------------------
# reports


def _jsonable(x):
    if isinstance(x, Fraction):
        return _frac_str(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, float):
        return x if math.isfinite(x) else str(x)
    return x


def report_json(report: dict) -> str:
    return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"
