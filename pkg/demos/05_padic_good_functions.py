"""
(C, alpha)-good functions on Z_p
================================

Functions f(s) = sum c_il s^l exp(lambda_i s) are tabulated over every
residue mod p^N.  Sublevel measures, sups and the weak intermediate value
ratios are then exact rationals at resolution p^-N.
"""

from fractions import Fraction

from orbitlab.padic import (CPrime, GoodFunctionSpec, PadicInt, check_good, find_controlled_value,
                            padic_exp, padic_log, random_spec, sublevel_measure, tight_constant,
                            valuation_table, weak_ivt_check)

# exp is an isometry on 5 Z_5 and log undoes it exactly
x = PadicInt(5, 6, 5 * 17)
print("|exp(x) - 1| =", (padic_exp(x) - 1).norm(), " |x| =", x.norm(),
      " log(exp(x)) == x:", padic_log(padic_exp(x)) == x)

s = GoodFunctionSpec.monomial(5, 1, 6)        # f(s) = s on Z_5
s2 = GoodFunctionSpec.monomial(3, 2, 6)       # f(s) = s^2 on Z_3
print("mu{|s| < 1/25} =", sublevel_measure(s, eps=Fraction(1, 25))["measure"])
print("mu{|s^2| <= 1/9} =", sublevel_measure(s2, eps=Fraction(1, 9), closed=True)["measure"])

print("s is (1, 1)-good:", check_good(s, 1, 1)["pass"])
bad = check_good(s2, 1, 1)
print("s^2 is (1, 1)-good:", bad["pass"], " witness eps:", bad["witness"]["eps"])
print("s^2 is (1, 1/2)-good:", check_good(s2, 1, Fraction(1, 2))["pass"])

# weak IVT ratios sup_{p^(n+1)} |f| / sup_{p^n} |f|
print("ratios for s:", [str(r["ratio"]) for r in weak_ivt_check(s)["levels"]])
print("controlled value for s^2, rho = 1/3:", find_controlled_value(s2, Fraction(1, 3), 9)["s"])

# a random exponential polynomial: certify a constant, then the weak IVT with C' = (2 C p)^(1/alpha)
f = random_spec(5, 2, 6, seed=3, zero_at_origin=True)
tab = valuation_table(f)
alpha = Fraction(1, 3)
C = tight_constant(tab, alpha)
print(f"tight C for alpha=1/3: {float(C):.4f}")
print("weak IVT holds:", weak_ivt_check(tab, Cprime=CPrime(C, alpha, 5))["holds"])
