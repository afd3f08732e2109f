"""
Lattices: reduction, shortest vectors and point counts
======================================================

Bases are rows.  Exact rational bases stay exact; fixed-point bases carry an
error bound, so a point count near the boundary is decided with certainty or
the call raises.
"""

import math

import numpy as np

from orbitlab.lattice import (LatticeBasis, count_points_in_ball, covolume, hnf_equal, lll_reduce,
                              normalize_covolume, observables, shortest_vector)

# a badly skewed basis of Z^2: LLL recovers the standard basis
b = LatticeBasis.from_rows([[1, 0], [1000, 1]])
r = lll_reduce(b)
print("reduced:", r.exact, " transform:", r.transform)
print("same lattice:", hnf_equal(b, r), " covolume:", covolume(r))

# the hexagonal lattice has six shortest vectors of length 1
hexa = LatticeBasis.from_rows([[1, 0], [0.5, math.sqrt(3) / 2]])
vec, lam1, coeffs = shortest_vector(hexa)
print("hexagonal lambda_1 =", lam1, "at coefficients", coeffs)
print("points with |v| <= 1:", count_points_in_ball(hexa, 1.0))

# homothety: scale to covolume 1
print("normalized:", normalize_covolume(LatticeBasis.from_rows([[1, 0], [0, 4]])).exact)

# observables used as test functions for equidistribution: lambda_1 and N_r
rng = np.random.default_rng(0)
B = rng.normal(size=(3, 3))
B /= abs(np.linalg.det(B)) ** (1 / 3)
lam1, counts = observables(LatticeBasis.from_rows(B.tolist()), [0.8, 1.0, 1.5])
print(f"random covolume-1 lattice in R^3: lambda_1={lam1:.4f}, N_r={counts}")

# canonical equality of rational lattices: Z + (3/7) Z is (1/7) Z
print(hnf_equal([[1], ["3/7"]], [["1/7"]]))
