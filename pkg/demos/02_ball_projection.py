"""Projecting onto a divergence ball, and checking the answer by brute force.

min D(Q || T) subject to D(Q || C) <= r is the building block of every
reliability.  The solver walks along geometric mixtures of C and T; the
oracle scans a fine grid and never looks at that curve.
"""

import numpy as np

from laotest.probability import Distribution, kl_divergence
from laotest.projection import BallConstraint, min_div_in_ball, min_div_in_ball_oracle, tilted

G1, G2 = Distribution([0.10, 0.90]), Distribution([0.85, 0.15])

ball = BallConstraint(G1, 0.1)
res = min_div_in_ball(G2, ball)
print("projection of G2 onto the 0.1-ball of G1")
print("  solver :", res.value, "at", res.argmin)
print("  oracle :", min_div_in_ball_oracle(G2, ball, 1e-6))
print("  argmin sits on the sphere:", kl_divergence(res.argmin, G1))

# The minimizer is a point of the mixture family C^a T^(1-a) / Z.
for a in (0.0, 0.5, 0.9, 1.0):
    q = tilted(G1.probs, G2.probs, a)
    print(f"  a={a:.1f}: Q={np.round(q, 4)}  D(Q||G1)={kl_divergence(q, G1):.4f}  D(Q||G2)={kl_divergence(q, G2):.4f}")

# The value only goes down as the ball grows.
radii = [0.0, 0.05, 0.1, 0.5, 1.0, 2.0, 2.1]
print("radius -> value:", [round(min_div_in_ball(G2, BallConstraint(G1, r)).value, 4) for r in radii])

# Ternary instances work the same way; the oracle is coarser there.
rng = np.random.default_rng(3)
t, c = rng.dirichlet(np.ones(3), size=2)
b = BallConstraint(Distribution(c), 0.2)
print("ternary:", min_div_in_ball(t, b).value, "oracle:", min_div_in_ball_oracle(t, b, 1e-3))
