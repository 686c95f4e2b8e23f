"""The optimal test for one object: conditions, matrix, Stein case, breakdown."""

import numpy as np

from laotest import build_matrix, check_conditions, stein_row, three_binary_hypotheses
from laotest.single import ConditionsViolated

H = three_binary_hypotheses()
np.set_printoptions(precision=5, suppress=True)

given = [0.05, 0.05]
print("conditions for", given, "->", check_conditions(H, given).ok)
E = build_matrix(H, given)
print(E.entries)
# The prescribed diagonal reappears in the last column.
print("E_m|m - E_m|3:", [E(m, m) - E(m, 3) for m in (1, 2)])

# Asking for too much of the first hypothesis breaks the test.
bad = [0.2, 0.05]
for v in check_conditions(H, bad).violations:
    print("violation:", v)
try:
    build_matrix(H, bad)
except ConditionsViolated as e:
    print("refused:", e)
print("built anyway:\n", build_matrix(H, bad, force=True).entries)

# A zero on the diagonal is the Stein case: the ball shrinks to G1 itself.
print("zero diagonal at 1:\n", build_matrix(H, [0.0, 0.05]).entries)
print("divergences from G1:", stein_row(H, 1))

# E_2|1 as a function of E_1|1.  Past min_l D(G_l||G_1) the test no longer
# exists and the reliability is zero, even though the projection itself is
# still positive.
threshold = min(H.divergence(2, 1), H.divergence(3, 1))
print(f"breakdown at E_1|1 = {threshold:.5f}")
for e11 in (0.01, 0.05, 0.1, 0.103, 0.104, 0.2):
    ok = check_conditions(H, [e11, 0.05]).ok
    raw = build_matrix(H, [e11, 0.05], force=True)(2, 1)
    print(f"  E_1|1={e11:<6} E_2|1={raw if ok else 0.0:.5f}  (projection {raw:.5f})")
