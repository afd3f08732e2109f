import json
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbitlab.errors import (ConfigError, EnumerationTooLarge, OutsideConvergenceDomain,
                             PreconditionViolation)
from orbitlab.padic import (CPrime, GoodFunctionSpec, PadicInt, Term, check_good,
                            eval_good_function, find_controlled_value, padic_exp, padic_log,
                            random_spec, report_json, sublevel_measure, tight_constant,
                            valuation_table, weak_ivt_check)

S_P5 = GoodFunctionSpec.monomial(5, 1, 6)
S2_P3 = GoodFunctionSpec.monomial(3, 2, 6)


def vp(n, p):
    if n == 0:
        return math.inf
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def series_mod(x: int, p: int, N: int, scale=Fraction(1)):
    """exp(x) mod p^N from exact rational partial sums, stopping once every
    further term has valuation >= N (k v - (k-1)/(p-1) >= N)."""
    total, k = Fraction(0), 0
    v = vp(x, p)
    while k < 3 or k * v - (k - 1) / (p - 1) < N + 2:
        total += Fraction(x) ** k / math.factorial(k)
        k += 1
    total *= scale
    mod = p ** N
    return total.numerator * pow(total.denominator, -1, mod) % mod


def direct_eval(spec, s: int) -> int:
    """p^shift f(s) mod p^N, one independent series per term."""
    p, N, m = spec.p, spec.N, spec.shift
    mod = p ** N
    out = 0
    for t in spec.terms:
        c = Fraction(t.c_num) * Fraction(p) ** (m - t.c_den_valuation)
        e = series_mod(spec.lambdas[t.i - 1] * s, p, N) if spec.lambdas[t.i - 1] * s else 1
        out += int(c) * pow(s, t.l, mod) * e
    return out % mod


def test_exp_examples():
    assert padic_exp(PadicInt(5, 6, 0)) == PadicInt(5, 6, 1)
    e = padic_exp(PadicInt(5, 6, 5))
    assert (e - 1).norm() == Fraction(1, 5)
    assert padic_exp(PadicInt(5, 4, 5)).value == series_mod(5, 5, 4) == 456


def test_exp_domain():
    with pytest.raises(OutsideConvergenceDomain):
        padic_exp(PadicInt(5, 6, 1))
    with pytest.raises(OutsideConvergenceDomain):
        padic_exp(PadicInt(2, 6, 2))
    assert padic_exp(PadicInt(2, 6, 4)).value == series_mod(4, 2, 6)


def test_log_examples():
    assert padic_log(PadicInt(3, 6, 1)) == PadicInt(3, 6, 0)
    a = padic_log(PadicInt(3, 8, 4))
    assert a + a == padic_log(PadicInt(3, 8, 16))
    with pytest.raises(OutsideConvergenceDomain):
        padic_log(PadicInt(5, 6, 3))


def test_log_exp_roundtrip():
    rng = random.Random(8)
    for _ in range(100):
        y = PadicInt(5, 8, 5 * rng.randrange(5 ** 7))
        assert padic_log(padic_exp(y)).reduce(6) == y.reduce(6)
        assert padic_log(padic_exp(y)) == y


@settings(max_examples=300, deadline=None)
@given(st.sampled_from([2, 3, 5, 7]), st.integers(0, 10 ** 12), st.integers(0, 10 ** 12))
def test_ultrametric(p, a, b):
    x, y = PadicInt(p, 10, a), PadicInt(p, 10, b)
    s = x + y
    assert s.norm() <= max(x.norm(), y.norm())
    if x.resolved and y.resolved and x.norm() != y.norm():
        assert s.norm() == max(x.norm(), y.norm())
    if x.resolved and y.resolved and x.valuation + y.valuation < 10:
        assert (x * y).norm() == x.norm() * y.norm()


def test_eval_examples():
    assert eval_good_function(S_P5, 7).value == 7
    f = GoodFunctionSpec(5, 6, (Term(1, 0, 1, 0), Term(-1, 0, 2, 0)), (5, 0))
    assert eval_good_function(f, 1).norm() == Fraction(1, 5)


@pytest.mark.parametrize("seed", range(4))
def test_eval_matches_direct_series(seed):
    spec = random_spec(5, 2, 6, seed)
    rng = random.Random(seed)
    for s in [rng.randrange(5 ** 6) for _ in range(50)]:
        assert eval_good_function(spec, s).value == direct_eval(spec, s)


def test_valuation_table_matches_evaluation():
    spec = random_spec(3, 2, 5, 1)
    tab = valuation_table(spec)
    for s in range(0, 3 ** 5, 7):
        assert tab.v[s] == eval_good_function(spec, s).valuation


def test_spec_json_roundtrip(data_dir):
    spec = random_spec(5, 2, 6, 3)
    assert GoodFunctionSpec.from_json(spec.to_json()) == spec
    loaded = GoodFunctionSpec.from_json((data_dir / "padic" / "s_p5.json").read_text())
    assert loaded == S_P5
    with pytest.raises(ConfigError):
        GoodFunctionSpec.from_json('{"p": 6, "terms": [{"c_num": 1, "i": 1, "l": 0}], "lambdas": [0]}')


def test_spec_rejects_lambda_outside_domain():
    with pytest.raises(OutsideConvergenceDomain):
        GoodFunctionSpec(5, 6, (Term(1, 0, 1, 1),), (1,))


def test_enumeration_cap():
    with pytest.raises(EnumerationTooLarge):
        valuation_table(GoodFunctionSpec.monomial(5, 1, 12))


def test_sublevel_examples():
    # default sublevel sets are {|f| < eps}
    assert sublevel_measure(S_P5, eps=Fraction(1, 25))["measure"] == Fraction(1, 125)
    assert sublevel_measure(S2_P3, eps=Fraction(1, 9))["measure"] == Fraction(1, 9)
    # the closed sets {|f| <= eps}
    assert sublevel_measure(S_P5, eps=Fraction(1, 25), closed=True)["measure"] == Fraction(1, 25)
    assert sublevel_measure(S2_P3, eps=Fraction(1, 9), closed=True)["measure"] == Fraction(1, 3)
    const = GoodFunctionSpec(5, 6, (Term(3, 0, 1, 0),), (0,))
    assert sublevel_measure(const, eps=Fraction(2))["measure"] == 1
    with pytest.raises(ConfigError):
        sublevel_measure(S_P5, eps=0)


def test_sublevel_monotone_in_eps():
    spec = random_spec(3, 2, 6, 5)
    tab = valuation_table(spec)
    grid = [Fraction(1, 3 ** 3) * Fraction(3, 2) ** k for k in range(25)]
    for closed in (False, True):
        ms = [sublevel_measure(tab, (1, 1), e, closed=closed)["measure"] for e in grid]
        assert ms == sorted(ms)


def test_check_good_monomials():
    rep = check_good(S_P5, 1, 1)
    assert rep["pass"] and rep["max_ratio"] <= 1
    bad = check_good(S2_P3, 1, 1)
    assert not bad["pass"]
    w = bad["witness"]
    # the witness is an explicit eps at which the bound fails (C = 1, alpha = 1)
    m = sublevel_measure(S2_P3, tuple(w["ball"]), w["eps"])
    assert m["measure"] / m["ball_measure"] > w["eps"] / m["sup"]
    assert check_good(S2_P3, 1, Fraction(1, 2))["pass"]


def test_check_good_explicit_eps_grid():
    rep = check_good(S2_P3, 1, 1, balls=[(0, 0)], eps=[Fraction(1, 9)], closed=True)
    assert not rep["pass"] and rep["worst"]["measure_rel"] == Fraction(1, 3)


def test_weak_ivt_monomials():
    rows = weak_ivt_check(S_P5)["levels"]
    assert len(rows) == 5 and all(r["ratio"] == Fraction(1, 5) for r in rows)
    assert all(r["ratio"] == Fraction(1, 9) for r in weak_ivt_check(S2_P3)["levels"])


def test_weak_ivt_with_certified_constant():
    # f(s) = s exp(5s) - s
    f = GoodFunctionSpec(5, 6, (Term(1, 0, 1, 1), Term(-1, 0, 2, 1)), (5, 0))
    alpha = Fraction(1, 2)
    C = tight_constant(f, alpha)
    assert check_good(f, C, alpha)["pass"]
    rep = weak_ivt_check(f, Cprime=CPrime(C, alpha, 5))
    assert rep["holds"]
    assert all(r["ratio"] >= 1 / Fraction(CPrime(C, alpha, 5).value) for r in rep["levels"])


def test_sups_decrease_with_level():
    for seed in range(5):
        rows = weak_ivt_check(random_spec(3, 2, 6, seed, zero_at_origin=True))["levels"]
        assert all(r["sup_n1"] <= r["sup_n"] for r in rows)


def test_controlled_values():
    assert find_controlled_value(S_P5, Fraction(1, 5), 5)["s"] == 25
    assert find_controlled_value(S2_P3, Fraction(1, 3), 9)["s"] == 3
    with pytest.raises(PreconditionViolation):
        find_controlled_value(GoodFunctionSpec(5, 6, (Term(1, 0, 1, 0),), (5,)), Fraction(1, 5), 5)


def test_cprime_is_exact():
    cp = CPrime(Fraction(1), Fraction(1, 2), 5)
    assert cp.ge(Fraction(100)) and not cp.ge(Fraction(100) + Fraction(1, 10 ** 30))


def test_reports_are_exact_and_deterministic():
    a = report_json({"good": check_good(S2_P3, 1, 1)})
    assert a == report_json({"good": check_good(S2_P3, 1, 1)})
    assert json.loads(a)["good"]["witness"]["eps"].count("/") == 1
