"""
Empirical measures and trend reports
====================================

Records become weighted atoms.  Distances act on one feature at a time, and
a trend report adds a bootstrap noise band before calling a sequence of
distances decreasing.
"""

from orbitlab import stats
from orbitlab.numfield import make_field
from orbitlab.pipelines import generic_baseline, nu_best_compare

# a small generic baseline: pooled records of random targets in [0, 1)^2
base = generic_baseline(n_targets=20, K=150, d=3, seed=5)
print(len(base), "atoms; features:", sorted(base.schema))

# algebraic targets (2^n beta, 4^n beta^2) against it
K = make_field([-1, -2, 1, 1], 2)
b = K.gen()
rep = nu_best_compare([b, b * b], 2, [(1, 2), (2, 4), (3, 6), (4, 8)], K=150, baseline=base, seed=5)
f = rep["features"]["w_norm"]
print("KS distances:", [round(d, 4) for d in f["distances"]])
print("noise band:", round(f["band"], 4), " verdict:", f["verdict"])

# categorical residue features compare by total variation; split the baseline in half
half = len(base) // 2
rows = [{"res_2": base.columns["res_2"][i]} for i in range(len(base))]
a, c = stats.empirical(rows[:half]), stats.empirical(rows[half:])
print("TV of residues mod 2 between the two halves of the baseline:", round(stats.categorical_tv(a, c, "res_2"), 4))
