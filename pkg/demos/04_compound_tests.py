"""Several independent objects tested at once."""

import numpy as np

from laotest import (
    MultiObjectSpec,
    build_compound,
    check_conditions_multi,
    classify_family,
    family_c_fill,
    three_binary_hypotheses,
)

H = three_binary_hypotheses()

# One list of prescribed exponents per object.
spec = MultiObjectSpec.from_slices(H, [[0.05, 0.05], [0.03, 0.2], [0.08, 0.4]])
print("conditions ok:", check_conditions_multi(spec).ok)
T = build_compound(spec)

# Entries are sums over the objects that were judged wrongly.
m, l = (1, 2, 3), (2, 2, 1)
print(f"E_{m}|{l} =", T(m, l))
for part in T.decomposition(m, l):
    print("   ", part)

# A diagonal entry is the cheapest way to make any mistake at all.
print("E_(1,2,3)|(1,2,3) =", T((1, 2, 3), (1, 2, 3)))
print("brute force      =", min(T((1, 2, 3), t) for t in T.tuples() if t != (1, 2, 3)))
print("dense shape:", T.dense().shape)

# Which per-object diagonals vanish decides the family.
for diags in ([[0.05, 0.05]] * 3, [[0.05, 0.05], [0.0, 0.05], [0.0, 0.05]], [[0.0, 0.05]] * 3):
    print(diags, "->", classify_family(diags).label)

# When every object has a zero diagonal at hypothesis 1, three compound
# exponents fix the rate at which each object decides correctly.
zero_spec = MultiObjectSpec.from_slices(H, [[0.0, 0.05], [0.0, 0.03], [0.0, 0.07]])
fill = family_c_fill(zero_spec, 1, (0.31, 0.27, 0.4))
print("right-decision exponents:", np.round(fill.right_exponents, 4))
print("rebuilt compound exponents:", fill.givens())
print("E_(1,1,1)|(3,3,3) =", fill.tensor((1, 1, 1), (3, 3, 3)))
