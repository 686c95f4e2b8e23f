"""Compound tests for K independent objects sharing one hypothesis set.

A compound hypothesis is a K-tuple of labels in 1..M.  Tensor entries are
computed on demand from the K per-object matrices, never stored in full.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .projection import BallConstraint, min_div_in_ball
from .single import (
    ConditionReport,
    GivenExponents,
    HypothesisSet,
    ReliabilityMatrix,
    Violation,
    build_matrix,
    check_conditions,
)

DENSE_EXPORT_LIMIT = 10_000


@dataclass(frozen=True)
class MultiObjectSpec:
    """Prescribed exponents for K objects.

    ``given[(m, i)]`` is the exponent of wrongly rejecting hypothesis m for
    object i in favour of M while every other object is judged correctly,
    that is E_{m..m | m..M..m} with M in slot i.  Inside family A this is
    the object's own diagonal exponent E_{m|m}.
    """

    K: int
    H: HypothesisSet
    given: Mapping[tuple[int, int], float]

    def __post_init__(self):
        if self.K < 2:
            raise ValueError("a compound test needs K >= 2 objects")
        expected = {(m, i) for m in range(1, self.H.M) for i in range(1, self.K + 1)}
        keys = set(self.given)
        if keys != expected:
            missing = sorted(expected - keys)
            extra = sorted(keys - expected)
            raise ValueError(f"given exponents mismatch: missing {missing}, unexpected {extra}")
        clean = {}
        for key, v in self.given.items():
            v = float(v)
            if not (v >= 0) or math.isinf(v):
                raise ValueError(f"given exponent {key} must be finite and nonnegative")
            clean[key] = v
        object.__setattr__(self, "given", clean)

    @classmethod
    def from_slices(cls, H: HypothesisSet, slices: Sequence[Sequence[float]]) -> "MultiObjectSpec":
        """Build from one list of M-1 diagonal exponents per object."""
        given = {}
        for i, diag in enumerate(slices, start=1):
            if len(diag) != H.M - 1:
                raise ValueError(f"object {i}: expected {H.M - 1} exponents, got {len(diag)}")
            for m, v in enumerate(diag, start=1):
                given[(m, i)] = v
        return cls(len(slices), H, given)

    def slice(self, i: int) -> GivenExponents:
        return GivenExponents(tuple(self.given[(m, i)] for m in range(1, self.H.M)))

    def slices(self) -> list[list[float]]:
        return [list(self.slice(i).diag) for i in range(1, self.K + 1)]


@dataclass(frozen=True, eq=False)
class CompoundReliabilityTensor:
    """Lazy map (true tuple, accepted tuple) -> exponent.

    An entry sums E_{m_i|l_i} over the objects whose decision is wrong.  Each
    correctly judged object i adds ``right_exponents[i][m_i]``, the decay
    rate of its probability of deciding correctly.  That rate is zero unless
    the object's test was prescribed a zero diagonal.  Entries with all
    objects correct follow the diagonal rule: the minimum over every other
    accepted tuple.
    """

    matrices: tuple[ReliabilityMatrix, ...]
    right_exponents: np.ndarray | None = None

    def __post_init__(self):
        mats = tuple(self.matrices)
        if len(mats) < 2:
            raise ValueError("a compound tensor needs K >= 2 objects")
        Ms = {m.M for m in mats}
        if len(Ms) != 1:
            raise ValueError(f"per-object matrices disagree on M: {sorted(Ms)}")
        object.__setattr__(self, "matrices", mats)
        M = mats[0].M
        a = np.zeros((len(mats), M)) if self.right_exponents is None else np.array(self.right_exponents, float)
        if a.shape != (len(mats), M) or np.any(a < 0):
            raise ValueError("right_exponents must be a nonnegative K x M array")
        a.setflags(write=False)
        object.__setattr__(self, "right_exponents", a)

    @property
    def K(self) -> int:
        return len(self.matrices)

    @property
    def M(self) -> int:
        return self.matrices[0].M

    @property
    def log_base(self) -> float:
        return self.matrices[0].log_base

    def _check(self, t) -> tuple[int, ...]:
        t = tuple(int(x) for x in t)
        if len(t) != self.K or not all(1 <= x <= self.M for x in t):
            raise IndexError(f"hypothesis tuple {t} is not in [1..{self.M}]^{self.K}")
        return t

    def decomposition(self, m_tuple, l_tuple) -> list[dict]:
        """Per-object summands of an off-diagonal entry."""
        m, l = self._check(m_tuple), self._check(l_tuple)
        if m == l:
            raise ValueError("diagonal entries are minima, not sums; use diagonal()")
        parts = []
        for i, (mi, li) in enumerate(zip(m, l)):
            if mi != li:
                parts.append({"object": i + 1, "true": mi, "accepted": li,
                              "kind": "error", "value": self.matrices[i](mi, li)})
            elif self.right_exponents[i, mi - 1] > 0:
                parts.append({"object": i + 1, "true": mi, "accepted": li,
                              "kind": "right", "value": float(self.right_exponents[i, mi - 1])})
        return parts

    def diagonal(self, m_tuple) -> float:
        """min over l != m of E_{m|l}.

        Each object independently contributes either its cheapest error or
        its right-decision exponent, with at least one error.
        """
        m = self._check(m_tuple)
        errs = np.array([mat.entries[mi - 1, mi - 1] for mat, mi in zip(self.matrices, m)])
        rights = np.array([self.right_exponents[i, mi - 1] for i, mi in enumerate(m)])
        take = errs <= rights
        if not take.any():
            take[np.argmin(errs - rights)] = True
        return float(np.where(take, errs, rights).sum())

    def __call__(self, m_tuple, l_tuple) -> float:
        m, l = self._check(m_tuple), self._check(l_tuple)
        if m == l:
            return self.diagonal(m)
        return float(sum(p["value"] for p in self.decomposition(m, l)))

    def tuples(self):
        return list(itertools.product(range(1, self.M + 1), repeat=self.K))

    def dense(self) -> np.ndarray:
        """Full (M^K, M^K) array, rows and columns in lexicographic tuple order."""
        M, K = self.M, self.K
        if M ** K > DENSE_EXPORT_LIMIT:
            raise ValueError(f"dense export needs M^K <= {DENSE_EXPORT_LIMIT}, got {M ** K}")
        total = np.zeros((M,) * (2 * K))
        for i, mat in enumerate(self.matrices):
            x = np.array(mat.entries, dtype=float)
            np.fill_diagonal(x, self.right_exponents[i])
            shape = [1] * (2 * K)
            shape[i], shape[K + i] = M, M
            total = total + x.reshape(shape)
        out = total.reshape(M ** K, M ** K)
        for r, t in enumerate(self.tuples()):
            out[r, r] = self.diagonal(t)
        return out

    def permuted(self, perm: Sequence[int]) -> "CompoundReliabilityTensor":
        """Tensor of the same test with objects reordered (0-based ``perm``)."""
        return CompoundReliabilityTensor(
            tuple(self.matrices[p] for p in perm), self.right_exponents[list(perm)]
        )


def compose_tensor(per_object: Sequence[ReliabilityMatrix], right_exponents=None) -> CompoundReliabilityTensor:
    return CompoundReliabilityTensor(tuple(per_object), right_exponents)


def check_conditions_multi(spec: MultiObjectSpec) -> ConditionReport:
    """Feasibility of the K(M-1) prescribed compound exponents.

    For each object slot i the exponents E_{m..m | ..M at i..} must be
    positive and stay below both the divergences D(G_l||G_m), l > m, and
    the projections onto the slot-i balls of the earlier hypotheses.
    """
    H, K, M = spec.H, spec.K, spec.H.M
    violations = []
    bounds = {}
    for i in range(1, K + 1):
        for m in range(1, M):
            e = spec.given[(m, i)]
            div_b, div_l = min((H.divergence(l, m), l) for l in range(m + 1, M + 1))
            proj_b, proj_l = math.inf, None
            for l in range(1, m):
                ball = BallConstraint(H[l], spec.given[(l, i)])
                v = min_div_in_ball(H[m], ball, H.log_base).value
                if v < proj_b:
                    proj_b, proj_l = v, l
            bounds[(m, i)] = min(div_b, proj_b)
            if not e > 0:
                violations.append(Violation(m, "positive", e, 0.0, obj=i))
            if not e < div_b:
                violations.append(Violation(m, "divergence", e, div_b, div_l, obj=i))
            if not e < proj_b:
                violations.append(Violation(m, "projection", e, proj_b, proj_l, obj=i))
    return ConditionReport(tuple(violations), bounds)


def per_object_reports(spec: MultiObjectSpec) -> list[ConditionReport]:
    return [check_conditions(spec.H, spec.slice(i)) for i in range(1, spec.K + 1)]


def build_compound(spec: MultiObjectSpec, force: bool = False) -> CompoundReliabilityTensor:
    """Compound reliabilities of the product of per-object LAO tests.

    Each slice of the prescription becomes its object's diagonal; zero
    entries produce Stein columns.
    """
    mats = [build_matrix(spec.H, spec.slice(i), force=force) for i in range(1, spec.K + 1)]
    return compose_tensor(mats)


@dataclass(frozen=True)
class FamilyLabel:
    """Which per-object diagonals vanish.

    ``A`` means none vanish.  ``C`` means that at every affected hypothesis
    all K objects vanish.  ``B`` means that at some affected hypothesis
    between 2 and K-1 objects vanish.  ``outside`` means that some
    hypothesis has a single vanishing object; then one of the prescribed
    compound exponents is necessarily zero.
    """

    label: str
    witness: tuple[tuple[int, int], ...] = field(default_factory=tuple)


def classify_family(per_object_diags: Sequence[Sequence[float]]) -> FamilyLabel:
    """Family of a compound test from its per-object diagonals (zeros are exact)."""
    K = len(per_object_diags)
    if K < 2:
        raise ValueError("need K >= 2 objects")
    witness = tuple(
        (i, m)
        for i, diag in enumerate(per_object_diags, start=1)
        for m, e in enumerate(diag, start=1)
        if e == 0
    )
    if not witness:
        return FamilyLabel("A")
    counts: dict[int, int] = {}
    for _, m in witness:
        counts[m] = counts.get(m, 0) + 1
    if any(c == 1 for c in counts.values()):
        return FamilyLabel("outside", witness)
    if all(c == K for c in counts.values()):
        return FamilyLabel("C", witness)
    return FamilyLabel("B", witness)


@dataclass(frozen=True)
class FamilyCFill:
    hypothesis: int
    right_exponents: tuple[float, float, float]
    tensor: CompoundReliabilityTensor

    def givens(self) -> tuple[float, float, float]:
        """The three compound exponents rebuilt from the tensor."""
        mp, M = self.hypothesis, self.tensor.M
        full = (mp, mp, mp)
        out = []
        for i in range(3):
            l = list(full)
            l[i] = M
            out.append(self.tensor(full, tuple(l)))
        return tuple(out)


def recover_right_exponents(compound_givens: Sequence[float]) -> tuple[float, float, float]:
    """Split three pairwise sums back into their summands.

    ``compound_givens[i]`` is the exponent with object i rejected and the
    other two judged correctly, i.e. the sum of the other two objects'
    right-decision exponents.
    """
    g1, g2, g3 = (float(g) for g in compound_givens)
    return (0.5 * (g2 + g3 - g1), 0.5 * (g1 + g3 - g2), 0.5 * (g1 + g2 - g3))


def family_c_fill(spec: MultiObjectSpec, zero_witness: int, compound_givens: Sequence[float],
                  force: bool = False) -> FamilyCFill:
    """Reliabilities of a three-object test whose diagonals vanish at ``zero_witness``.

    The three prescribed compound exponents at that hypothesis fix each
    object's right-decision exponent.  Every other entry then follows from
    the per-object Stein-type matrices.  The entry with all three objects
    rejected in favour of M is zero.
    """
    if spec.K != 3:
        raise ValueError("the family C recovery is stated for three objects")
    mp = int(zero_witness)
    if not 1 <= mp <= spec.H.M - 1:
        raise IndexError(f"hypothesis {mp} outside 1..{spec.H.M - 1}")
    if any(spec.given[(mp, i)] != 0 for i in (1, 2, 3)):
        raise ValueError(f"not family C: some object has a positive diagonal at hypothesis {mp}")
    if len(compound_givens) != 3 or any(not (g >= 0) or math.isinf(g) for g in compound_givens):
        raise ValueError("need three finite nonnegative compound exponents")
    a = recover_right_exponents(compound_givens)
    if min(a) < 0:
        raise ValueError(
            f"inconsistent compound exponents {tuple(compound_givens)}: "
            f"recovered right-decision exponents {a} include a negative value"
        )
    mats = [build_matrix(spec.H, spec.slice(i), force=force) for i in (1, 2, 3)]
    right = np.zeros((3, spec.H.M))
    right[:, mp - 1] = a
    return FamilyCFill(mp, a, compose_tensor(mats, right))
