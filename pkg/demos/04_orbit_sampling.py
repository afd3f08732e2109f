"""
Periodic diagonal orbits
========================

For a basis of a totally real field, A x_alpha is a compact orbit.  The
sampler draws points t of a trace-zero box with a counter-based generator
and records lambda_1 and ball counts of the flowed lattice.  In degree 2
the orbit is a circle whose length is known exactly, which gives an oracle.
"""

import math

from orbitlab.numfield import make_field, orbit_matrix
from orbitlab.orbitflow import (OrbitSamplePlan, exact_period_average, haar_reference_d2,
                                orbit_period_d2, sample_orbit)

K = make_field([-2, 0, 1], 1)
basis = [K.one(), K.gen()]
radii = (0.8, 1.0, 1.5)

period, k = orbit_period_d2(basis)
print(f"period {period:.12f} (2 log(1 + sqrt 2) = {2 * math.log(1 + math.sqrt(2)):.12f})")

# box average vs the exact one-period average
obs = sample_orbit(orbit_matrix(basis), OrbitSamplePlan(T=40.0, N=2000, seed=1, radii=radii))
box = math.fsum(o.lambda1 for o in obs) / len(obs)
exact = exact_period_average(basis, radii, M=1000)
print(f"box mean lambda_1 {box:.5f}, period average {exact['lambda1']:.5f}")

# the near-Haar reference: a long closed horocycle; the mean of N_1 is close to pi
ref = haar_reference_d2(3000, 1e-4, seed=1, radii=(1.0,))
print("horocycle mean N_1:", math.fsum(o.counts[0] for o in ref) / len(ref))
