"""
Totally real number fields
==========================

A field is given by a minimal polynomial.  Its real roots are isolated with
Sturm sequences, so every embedding is an interval that provably contains
the root, and it can be refined on demand.
"""

from orbitlab.numfield import (embed, field_norm, fundamental_unit_quadratic, make_field,
                               orbit_matrix, regulator, rescale_basis)

# the cubic field of discriminant 49; root 2 (of 0, 1, 2 ascending) is 2 cos(2 pi / 7)
K = make_field([-1, -2, 1, 1], identity_root_index=2)
beta = K.gen()
for j, root in enumerate(K.roots(bits=64)):
    print(f"root {j}: {float(root.mid):+.15f}  (width {float(root.width):.1e})")

# arithmetic is exact on coefficient vectors; the norm is an exact rational
x = K.parse("b^2 - 3/7*b + 1")
print("N(x) =", field_norm(x), " N(x) N(1/x) =", field_norm(x) * field_norm(x.inverse()))

# the three embeddings of x, each a certified enclosure
print("embeddings:", [f"{float(e.mid):.12f}" for e in embed(x)])

# the orbit matrix: row i holds the embeddings of the i-th basis element
g = orbit_matrix([K.one(), beta, beta * beta])
print("det^2 =", float(g.det().mid) ** 2)

# rescaling the basis by powers of m multiplies the rows
g2 = orbit_matrix(rescale_basis([K.one(), beta, beta * beta], 2, (0, 1, 2)))
print("rescaled row 2 / row 2:", g2.to_numpy()[2] / g.to_numpy()[2])

# real quadratic fields: the fundamental unit from the continued fraction of sqrt D
for D in (2, 3, 5):
    u = fundamental_unit_quadratic(D)
    print(f"D={D}: unit {u}, norm {field_norm(u)}, regulator {regulator(u):.12f}")
