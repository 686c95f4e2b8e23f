"""Finite-N error probabilities and the exponents they approach."""

import numpy as np

from laotest import DecisionRegions, HypothesisSet, build_matrix, three_binary_hypotheses
from laotest.simulation import exact_error, fit_exponent, monte_carlo_error

H = HypothesisSet(three_binary_hypotheses().dists[:2])
regions = DecisionRegions.from_given(H, [0.05])
predicted = build_matrix(H, [0.05])(2, 1)

# Exact probabilities come from summing type-class masses, so they stay
# available far below anything a simulation could see.
for N in (50, 500, 2000):
    e = exact_error(regions, 2, 1, N)
    print(f"N={N:5d}  ln alpha_2|1 = {e.log_alpha:10.3f}   -(1/N) log2 alpha = {e.exponent(2):.4f}")

grid = list(range(200, 2001, 200))
fit = fit_exponent(regions, 2, 1, grid)
print(f"fitted slope {fit.slope:.5f}, predicted {predicted:.5f}, ratio {fit.slope / predicted:.4f}")

# Monte Carlo agrees where the probability is large enough to sample.
N = 60
exact = exact_error(regions, 1, 2, N).alpha
mc = monte_carlo_error(regions, 1, 2, N, trials=100_000, seed=1, workers=4)
sigma = np.sqrt(exact * (1 - exact) / mc.trials)
print(f"alpha_1|2 at N={N}: exact {exact:.5f}, simulated {mc.alpha:.5f} ({(mc.alpha - exact) / sigma:+.2f} sd)")

# With an infeasible prescription G3 sits inside the ball of G1 and the
# error probability no longer decays.
H3 = three_binary_hypotheses()
bad = DecisionRegions.from_given(H3, [0.2, 0.05])
print("violated case slope:", fit_exponent(bad, 3, 1, grid).slope)
