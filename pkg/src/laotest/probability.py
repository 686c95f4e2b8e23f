"""Finite-alphabet distributions, empirical types and exact type-class masses."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln, xlogy

from ._logbase import nat_scale

# Sums within this distance of 1 are renormalized, anything else is rejected.
NORMALIZATION_SLACK = 1e-9


class AlphabetMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector over the alphabet ``{0, ..., alphabet_size - 1}``."""

    probs: np.ndarray

    def __init__(self, probs: Iterable[float]):
        p = np.array(list(probs) if not isinstance(probs, np.ndarray) else probs, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise ValueError("a distribution needs a 1-d vector over at least 2 symbols")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError(f"probabilities must be finite and nonnegative: {p.tolist()}")
        total = p.sum()
        if abs(total - 1.0) > NORMALIZATION_SLACK:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        p = p / total
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def alphabet_size(self) -> int:
        return self.probs.size

    @property
    def support(self) -> np.ndarray:
        return self.probs > 0

    def __len__(self) -> int:
        return self.probs.size

    def __getitem__(self, a):
        return self.probs[a]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Distribution):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self) -> int:
        return hash(tuple(self.probs.tolist()))

    def __repr__(self) -> str:
        return f"Distribution({np.array2string(self.probs, precision=6, separator=', ')})"

    def tolist(self) -> list[float]:
        return self.probs.tolist()


def as_distribution(d) -> Distribution:
    return d if isinstance(d, Distribution) else Distribution(d)


@dataclass(frozen=True, eq=False)
class EmpiricalType:
    """Symbol counts of a length-N sample."""

    counts: np.ndarray

    def __init__(self, counts: Iterable[int]):
        c = np.array(list(counts) if not isinstance(counts, np.ndarray) else counts)
        if c.ndim != 1 or c.size < 2:
            raise ValueError("a type needs counts over at least 2 symbols")
        if not np.issubdtype(c.dtype, np.integer):
            if not np.all(c == np.round(c)):
                raise ValueError("type counts must be integers")
        c = c.astype(np.int64)
        if np.any(c < 0) or c.sum() < 1:
            raise ValueError("type counts must be nonnegative with positive total")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def length(self) -> int:
        return int(self.counts.sum())

    @property
    def alphabet_size(self) -> int:
        return self.counts.size

    def distribution(self) -> Distribution:
        return Distribution(self.counts / self.length)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmpiricalType):
            return NotImplemented
        return np.array_equal(self.counts, other.counts)

    def __hash__(self) -> int:
        return hash(tuple(self.counts.tolist()))

    def __repr__(self) -> str:
        return f"EmpiricalType({tuple(self.counts.tolist())})"


def _check_same_alphabet(a: int, b: int) -> None:
    if a != b:
        raise AlphabetMismatch(f"alphabet sizes differ: {a} vs {b}")


def kl_divergence(q, g, base: float | None = None) -> float:
    """D(q||g) in units of ``base`` (the active base when omitted).

    Uses 0 log(0/g) = 0 and q log(q/0) = +inf for q > 0.
    """
    q = as_distribution(q).probs
    g = as_distribution(g).probs
    _check_same_alphabet(q.size, g.size)
    if np.any((q > 0) & (g == 0)):
        return math.inf
    mask = q > 0
    d = float(np.sum(q[mask] * (np.log(q[mask]) - np.log(g[mask]))))
    # rounding can push D(q||q)-like values a hair below zero
    return max(d, 0.0) * nat_scale(base)


def kl_divergence_rows(qs: np.ndarray, g, base: float | None = None) -> np.ndarray:
    """Vectorized D(q||g) for every row of ``qs`` (rows need not be validated)."""
    g = as_distribution(g).probs
    qs = np.asarray(qs, dtype=float)
    _check_same_alphabet(qs.shape[-1], g.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = xlogy(qs, qs) - xlogy(qs, g)
    d = terms.sum(axis=-1)
    bad = np.any((qs > 0) & (g == 0), axis=-1)
    d = np.where(bad, np.inf, np.maximum(d, 0.0))
    return d * nat_scale(base)


def empirical_type(x: Sequence[int], alphabet_size: int) -> EmpiricalType:
    x = np.asarray(x)
    if x.size == 0:
        raise ValueError("empty sample")
    if x.ndim != 1 or not np.issubdtype(x.dtype, np.integer):
        raise ValueError("sample must be a 1-d sequence of integer symbols")
    if x.min() < 0 or x.max() >= alphabet_size:
        raise ValueError(f"symbol out of range for alphabet of size {alphabet_size}")
    return EmpiricalType(np.bincount(x, minlength=alphabet_size))


def number_of_types(N: int, alphabet_size: int) -> int:
    return math.comb(N + alphabet_size - 1, alphabet_size - 1)


def type_counts(N: int, alphabet_size: int) -> np.ndarray:
    """All compositions of N into ``alphabet_size`` parts, lexicographic, as rows."""
    if N < 1 or alphabet_size < 2:
        raise ValueError("need N >= 1 and alphabet_size >= 2")
    if alphabet_size == 2:
        c0 = np.arange(N + 1)
        return np.column_stack([c0, N - c0])
    # stars and bars: lexicographic bar positions give lexicographic counts
    k = alphabet_size
    bars = np.array(list(itertools.combinations(range(N + k - 1), k - 1)), dtype=np.int64)
    padded = np.column_stack([np.full(len(bars), -1), bars, np.full(len(bars), N + k - 1)])
    return np.diff(padded, axis=1) - 1


def enumerate_types(N: int, alphabet_size: int) -> list[EmpiricalType]:
    return [EmpiricalType(row) for row in type_counts(N, alphabet_size)]


def type_class_log_probabilities(counts: np.ndarray, g) -> np.ndarray:
    """Natural-log mass of each type class (rows of ``counts``) under g^N."""
    g = as_distribution(g).probs
    counts = np.atleast_2d(np.asarray(counts))
    _check_same_alphabet(counts.shape[1], g.size)
    n = counts.sum(axis=1)
    log_multinomial = gammaln(n + 1) - gammaln(counts + 1).sum(axis=1)
    with np.errstate(divide="ignore"):
        log_terms = xlogy(counts, g).sum(axis=1)
    return log_multinomial + log_terms


def type_class_log_probability(t: EmpiricalType, g) -> float:
    """Natural log of g^N(T), the probability of the whole type class of ``t``."""
    g = as_distribution(g)
    _check_same_alphabet(t.alphabet_size, g.alphabet_size)
    return float(type_class_log_probabilities(t.counts[None, :], g)[0])
