"""Divergences and the method of types on the three binary hypotheses.

Every quantity in this package is built from two ingredients: the
Kullback-Leibler divergence, and the probability of a type class.
"""

import numpy as np

from laotest import three_binary_hypotheses
from laotest.probability import kl_divergence, type_class_log_probabilities, type_counts

H = three_binary_hypotheses()

# Divergences are in bits unless another base is asked for.
print("D(G_a || G_b) in bits")
print(np.array2string(H.divergence_matrix(), precision=5))

# The matrix is not symmetric, and the smallest entry in the first column
# (0.103, G3 against G1) will limit how large E_1|1 may be prescribed.
print("min_l D(G_l || G_1) =", min(H.divergence(2, 1), H.divergence(3, 1)))

# A sequence of length N on a binary alphabet has N + 1 possible types.  The
# mass of a type class under G is multinomial, so it decays like
# exp(-N D(type || G)).
N = 400
counts = type_counts(N, 2)
logp = type_class_log_probabilities(counts, H[1])
q = counts / N
rate = -logp / N
div = np.array([kl_divergence(row, H[1], np.e) for row in q])
print(f"N={N}: largest |(-1/N) ln P(type) - D(type||G1)| = {np.max(np.abs(rate - div)):.4f} nats")
print("total mass over all types:", np.exp(logp).sum())
