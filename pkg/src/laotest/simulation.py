"""Finite-N error probabilities of the LAO classifiers.

Exact values come from summing type-class masses over the types each region
accepts.  Monte Carlo estimates are kept as an independent check.  Error
exponents are fitted as the slope of -log(alpha) against N.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from ._logbase import resolve_base
from .probability import number_of_types, type_class_log_probabilities, type_counts
from .single import DecisionRegions

MAX_TYPES = 5_000_000
# trials per random substream; fixed so results never depend on scheduling
MC_BLOCK = 4096


@dataclass(frozen=True)
class ErrorEstimate:
    """A decision probability at sample length N.

    ``log_alpha`` is a natural log and stays finite when ``alpha`` underflows.
    """

    log_alpha: float
    N: int
    method: str
    trials: int | None = None
    seed: int | None = None
    hits: int | None = None

    def __post_init__(self):
        if self.method == "exact" and (self.trials is not None or self.seed is not None):
            raise ValueError("exact estimates carry no trials or seed")
        if self.log_alpha > 1e-12:
            raise ValueError(f"log probability {self.log_alpha} is positive")

    @property
    def alpha(self) -> float:
        return math.exp(min(self.log_alpha, 0.0))

    @property
    def exact_zero(self) -> bool:
        return self.log_alpha == -math.inf

    def exponent(self, base: float | None = None) -> float:
        """-(1/N) log alpha in units of ``base``."""
        return -self.log_alpha / (self.N * math.log(resolve_base(base)))

    def to_dict(self) -> dict:
        d = {"method": self.method, "N": self.N, "alpha": self.alpha,
             "log_alpha": "-inf" if self.exact_zero else self.log_alpha}
        if self.method == "monte_carlo":
            d.update(trials=self.trials, seed=self.seed, hits=self.hits)
        return d


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    r_squared: float
    N_grid: tuple[int, ...]
    endpoint_ratio: float

    @property
    def infinite(self) -> bool:
        return math.isinf(self.slope)

    def to_dict(self) -> dict:
        def real(v):
            return "inf" if math.isinf(v) else v

        return {"slope": real(self.slope), "intercept": real(self.intercept),
                "r_squared": real(self.r_squared), "N_grid": list(self.N_grid),
                "endpoint_ratio": real(self.endpoint_ratio)}


def acceptance_log_probs(regions: DecisionRegions, true_m: int, N: int) -> np.ndarray:
    """ln P(decision = l | G_true_m) for l = 1..M (0-based array)."""
    H = regions.hypotheses
    n_types = number_of_types(N, H.alphabet_size)
    if n_types > MAX_TYPES:
        raise OverflowError(f"{n_types} types at N={N}; exact enumeration refused")
    counts = type_counts(N, H.alphabet_size)
    decisions = regions.classify_types(counts / N)
    logp = type_class_log_probabilities(counts, H[true_m])
    out = np.full(H.M, -np.inf)
    for l in range(1, H.M + 1):
        sel = decisions == l
        if sel.any():
            out[l - 1] = logsumexp(logp[sel])
    return np.minimum(out, 0.0)


def _pick(logp: np.ndarray, true_m: int, accepted_l: int, rejection: bool) -> float:
    if accepted_l == true_m and rejection:
        others = np.delete(logp, true_m - 1)
        return float(logsumexp(others)) if np.isfinite(others).any() else -math.inf
    return float(logp[accepted_l - 1])


def exact_error(regions: DecisionRegions, true_m: int, accepted_l: int, N: int,
                rejection: bool = False) -> ErrorEstimate:
    """Probability that the test accepts ``accepted_l`` when ``true_m`` holds.

    For ``accepted_l == true_m`` this is the probability of deciding
    correctly, or, with ``rejection``, the probability of rejecting the true
    hypothesis.
    """
    logp = acceptance_log_probs(regions, true_m, N)
    return ErrorEstimate(_pick(logp, true_m, accepted_l, rejection), N, "exact")


def compound_exact_error(per_object: Sequence[DecisionRegions], true: Sequence[int],
                         accepted: Sequence[int], N: int, rejection: bool = False) -> ErrorEstimate:
    """Decision probability of the compound test.

    The objects are independent, so this is the product of per-object
    probabilities: errors where the labels differ, correct decisions where
    they agree.  ``rejection`` on a diagonal entry gives one minus the
    all-correct product.
    """
    if not (len(per_object) == len(true) == len(accepted)):
        raise ValueError("need one region set and one label per object")
    total = 0.0
    for regions, m, l in zip(per_object, true, accepted):
        total += float(acceptance_log_probs(regions, m, N)[l - 1])
    if tuple(true) == tuple(accepted) and rejection:
        total = math.log(-math.expm1(total)) if total < 0 else -math.inf
    return ErrorEstimate(total, N, "exact")


def _block_hits(regions: DecisionRegions, probs: np.ndarray, N: int, n: int, seed: int,
                block: int, true_m: int, accepted_l: int, rejection: bool) -> int:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))
    counts = rng.multinomial(N, probs, size=n)
    decisions = regions.classify_types(counts / N)
    if accepted_l == true_m and rejection:
        return int(np.count_nonzero(decisions != true_m))
    return int(np.count_nonzero(decisions == accepted_l))


def monte_carlo_error(regions: DecisionRegions, true_m: int, accepted_l: int, N: int,
                      trials: int, seed: int, workers: int = 1,
                      rejection: bool = False) -> ErrorEstimate:
    """Relative frequency of deciding ``accepted_l`` over ``trials`` samples from G_true_m.

    Trials are drawn in blocks of ``MC_BLOCK``.  Block b always uses the
    Philox stream keyed by (seed, b), so the hit count does not depend on
    ``workers``.  Each trial draws its type directly, because the type is
    all the classifier looks at.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    probs = regions.hypotheses[true_m].probs
    sizes = [min(MC_BLOCK, trials - s) for s in range(0, trials, MC_BLOCK)]
    args = [(regions, probs, N, n, seed, b, true_m, accepted_l, rejection) for b, n in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(lambda a: _block_hits(*a), args))
    else:
        hits = sum(_block_hits(*a) for a in args)
    log_alpha = math.log(hits / trials) if hits else -math.inf
    return ErrorEstimate(log_alpha, N, "monte_carlo", trials=trials, seed=seed, hits=hits)


def fit_log_errors(N_grid: Sequence[int], log_alphas: Sequence[float],
                   base: float | None = None) -> ExponentFit:
    """Least-squares slope of -log_base(alpha) against N.

    An exact zero anywhere on the grid makes the exponent infinite.
    """
    N = np.asarray(N_grid, dtype=float)
    if N.size < 3 or np.any(np.diff(N) <= 0):
        raise ValueError("N_grid must be strictly increasing with at least 3 points")
    la = np.asarray(log_alphas, dtype=float)
    if la.shape != N.shape:
        raise ValueError("one log-probability per grid point")
    grid = tuple(int(n) for n in N_grid)
    if np.any(np.isneginf(la)):
        return ExponentFit(math.inf, math.inf, math.nan, grid, math.inf)
    y = -la / math.log(resolve_base(base))
    slope, intercept = np.polyfit(N, y, 1)
    resid = y - (slope * N + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return ExponentFit(float(slope), float(intercept), r2, grid, float(y[-1] / N[-1]))


def fit_exponent(regions: DecisionRegions, true_m: int, accepted_l: int,
                 N_grid: Sequence[int], rejection: bool = False) -> ExponentFit:
    """Empirical E_{m|l} from exact error probabilities over ``N_grid``."""
    las = [exact_error(regions, true_m, accepted_l, n, rejection).log_alpha for n in N_grid]
    return fit_log_errors(N_grid, las, regions.hypotheses.log_base)


def fit_compound_exponent(per_object: Sequence[DecisionRegions], true: Sequence[int],
                          accepted: Sequence[int], N_grid: Sequence[int],
                          rejection: bool = False) -> ExponentFit:
    las = [compound_exact_error(per_object, true, accepted, n, rejection).log_alpha for n in N_grid]
    return fit_log_errors(N_grid, las, per_object[0].hypotheses.log_base)
