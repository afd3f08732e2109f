"""
Best simultaneous approximations
================================

q_k is the least q beating every earlier denominator at approximating v.
Each record carries the directional lattice Lambda_k, the displacement
w_k = q_k^(1/(d-1)) (q_k v - p_k) and the residues of (p_k, q_k).
"""

from orbitlab.bestapprox import (TargetVector, best_approximations, build_target_from_field,
                                 directional_lattice, record_features)
from orbitlab.numfield import make_field

# in one dimension the records are the continued fraction convergents
Q2 = make_field([-2, 0, 1], 1)
v = TargetVector.algebraic([Q2.gen() - 1])
for rec in best_approximations(v, max_q=200):
    print(f"q={rec.q:4d} p={rec.p[0]:3d} w={float(rec.w[0].mid):+.6f}")

# a two-dimensional target from the cubic field: (beta, beta^2)
K = make_field([-1, -2, 1, 1], 2)
v = build_target_from_field(K, ["b", "b^2"], require_span=True)
recs = best_approximations(v, max_k=12, moduli=(2, 3))
for rec in recs:
    L = directional_lattice(rec)
    print(f"k={rec.k:2d} q={rec.q:6d} p={rec.p} covol(Lambda)={L.covolume()} res={rec.residues}")

# features that feed the empirical measures
print(record_features(recs[-1], "sup", moduli=(2, 3)))

# a generic target: coordinates drawn from a seeded counter-based stream
g = TargetVector.generic(seed=1, target=0, dim=2)
print([r.q for r in best_approximations(g, max_k=10)])
