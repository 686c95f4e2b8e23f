"""LAO test for a single object.

Hypotheses are labelled 1..M in every public signature.  Arrays such as
``ReliabilityMatrix.entries`` are plain 0-based numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._logbase import resolve_base
from .probability import (
    Distribution,
    as_distribution,
    empirical_type,
    kl_divergence,
    kl_divergence_rows,
)
from .projection import BallConstraint, min_div_in_ball, min_div_in_complement

# Agreement required between a prescribed diagonal and the row minimum.
DIAGONAL_TOL = 1e-9


class ConditionsViolated(ValueError):
    def __init__(self, report: "ConditionReport"):
        self.report = report
        super().__init__("; ".join(str(v) for v in report.violations))


@dataclass(frozen=True)
class HypothesisSet:
    dists: tuple[Distribution, ...]
    log_base: float = 2.0

    def __post_init__(self):
        dists = tuple(as_distribution(d) for d in self.dists)
        object.__setattr__(self, "dists", dists)
        object.__setattr__(self, "log_base", resolve_base(self.log_base))
        if len(dists) < 2:
            raise ValueError("need at least two hypotheses")
        sizes = {d.alphabet_size for d in dists}
        if len(sizes) != 1:
            raise ValueError(f"hypotheses live on different alphabets: {sorted(sizes)}")
        for i, a in enumerate(dists):
            for j, b in enumerate(dists[:i]):
                if a == b:
                    raise ValueError(f"hypotheses {j + 1} and {i + 1} coincide")

    @property
    def M(self) -> int:
        return len(self.dists)

    @property
    def alphabet_size(self) -> int:
        return self.dists[0].alphabet_size

    def __getitem__(self, m: int) -> Distribution:
        """Distribution of hypothesis ``m`` (1-based)."""
        if not 1 <= m <= self.M:
            raise IndexError(f"hypothesis index {m} outside 1..{self.M}")
        return self.dists[m - 1]

    def divergence(self, a: int, b: int) -> float:
        """D(G_a||G_b) in this set's log base."""
        return kl_divergence(self[a], self[b], self.log_base)

    def divergence_matrix(self) -> np.ndarray:
        """0-based array with entry [a, b] = D(G_a||G_b)."""
        return np.array([[self.divergence(a, b) for b in range(1, self.M + 1)]
                         for a in range(1, self.M + 1)])


@dataclass(frozen=True)
class GivenExponents:
    """Prescribed E_{1|1}, ..., E_{M-1|M-1}."""

    diag: tuple[float, ...]

    def __post_init__(self):
        diag = tuple(float(e) for e in self.diag)
        if any(not (e >= 0) or math.isinf(e) for e in diag):
            raise ValueError(f"given exponents must be finite and nonnegative: {diag}")
        object.__setattr__(self, "diag", diag)

    def __len__(self):
        return len(self.diag)

    def __getitem__(self, m: int) -> float:
        return self.diag[m - 1]


def _as_given(given) -> GivenExponents:
    return given if isinstance(given, GivenExponents) else GivenExponents(tuple(given))


@dataclass(frozen=True)
class Violation:
    hypothesis: int
    kind: str  # "positive", "divergence" or "projection"
    value: float
    bound: float
    witness: int | None = None
    obj: int | None = None

    def __str__(self):
        where = f"object {self.obj}, " if self.obj is not None else ""
        if self.kind == "positive":
            return f"{where}E_{self.hypothesis}|{self.hypothesis} = {self.value:g} is not > 0"
        return (f"{where}E_{self.hypothesis}|{self.hypothesis} = {self.value:.6g} "
                f"is not < {self.bound:.6g} ({self.kind} bound via hypothesis {self.witness})")

    def to_dict(self) -> dict:
        d = {"hypothesis": self.hypothesis, "kind": self.kind, "value": self.value,
             "bound": self.bound, "witness": self.witness}
        if self.obj is not None:
            d["object"] = self.obj
        return d


@dataclass(frozen=True)
class ConditionReport:
    violations: tuple[Violation, ...] = ()
    bounds: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations


def diagonal_bounds(H: HypothesisSet, given) -> list[tuple[float, int, float, int | None]]:
    """Upper bounds on each prescribed diagonal exponent, for m = 1..M-1.

    Returns (divergence bound, its witness, projection bound, its witness);
    the projection bound is +inf for m = 1.
    """
    given = _as_given(given)
    M = H.M
    out = []
    for m in range(1, M):
        div_vals = [(H.divergence(l, m), l) for l in range(m + 1, M + 1)]
        div_bound, div_l = min(div_vals)
        proj_bound, proj_l = math.inf, None
        for l in range(1, m):
            e = min_div_in_ball(H[m], BallConstraint(H[l], given[l]), H.log_base).value
            if e < proj_bound:
                proj_bound, proj_l = e, l
        out.append((div_bound, div_l, proj_bound, proj_l))
    return out


def check_conditions(H: HypothesisSet, given, allow_zero: bool = False) -> ConditionReport:
    """Check that the prescribed diagonal admits an all-positive reliability matrix.

    Every violated strict inequality is listed; equality counts as a
    violation.  Bounds for hypothesis m use the projections of the earlier
    balls, evaluated at the given (not necessarily valid) radii.  With
    ``allow_zero`` a zero entry is accepted as a Stein-type prescription.
    """
    given = _as_given(given)
    if len(given) != H.M - 1:
        raise ValueError(f"expected {H.M - 1} given exponents, got {len(given)}")
    violations = []
    bounds = {}
    for m, (div_b, div_l, proj_b, proj_l) in enumerate(diagonal_bounds(H, given), start=1):
        e = given[m]
        bounds[m] = min(div_b, proj_b)
        if e <= 0 and not (allow_zero and e == 0):
            violations.append(Violation(m, "positive", e, 0.0))
        if not e < div_b:
            violations.append(Violation(m, "divergence", e, div_b, div_l))
        if not e < proj_b:
            violations.append(Violation(m, "projection", e, proj_b, proj_l))
    return ConditionReport(tuple(violations), bounds)


@dataclass(frozen=True)
class DecisionRegions:
    """Balls around G_1..G_{M-1}; whatever lies outside all of them goes to M."""

    hypotheses: HypothesisSet
    balls: tuple[BallConstraint, ...]

    @classmethod
    def from_given(cls, H: HypothesisSet, given) -> "DecisionRegions":
        given = _as_given(given)
        if len(given) != H.M - 1:
            raise ValueError(f"expected {H.M - 1} radii, got {len(given)}")
        return cls(H, tuple(BallConstraint(H[l], given[l]) for l in range(1, H.M)))

    @property
    def M(self) -> int:
        return self.hypotheses.M

    @property
    def radii(self) -> tuple[float, ...]:
        return tuple(b.radius for b in self.balls)

    def classify_types(self, distributions: np.ndarray) -> np.ndarray:
        """Decision (1..M) for each row of empirical distributions.

        First match wins when balls overlap.
        """
        q = np.atleast_2d(distributions)
        decision = np.full(len(q), self.M, dtype=np.int64)
        undecided = np.ones(len(q), dtype=bool)
        for l, ball in enumerate(self.balls, start=1):
            d = kl_divergence_rows(q, ball.center, self.hypotheses.log_base)
            hit = undecided & (d <= ball.radius)
            decision[hit] = l
            undecided &= ~hit
        return decision


def classify(regions: DecisionRegions, x: Sequence[int]) -> int:
    """Accepted hypothesis for sample ``x``: the first ball holding its type, else M."""
    t = empirical_type(x, regions.hypotheses.alphabet_size)
    q = t.counts / t.length
    return int(regions.classify_types(q[None, :])[0])


@dataclass(frozen=True, eq=False)
class ReliabilityMatrix:
    """Exponents E_{m|l} (true m, accepted l) as a 0-based M x M array."""

    entries: np.ndarray
    log_base: float = 2.0
    prescribed: tuple[float, ...] = ()
    forced: bool = False

    def __post_init__(self):
        e = np.array(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError("reliability matrix must be square")
        if np.any(np.isnan(e)) or np.any(e < 0):
            raise ValueError("reliabilities must be nonnegative")
        gap = _diagonal_gap(e)
        if np.any(gap > DIAGONAL_TOL):
            raise ValueError(f"diagonal differs from the row minima by up to {gap.max():.3g}")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def M(self) -> int:
        return len(self.entries)

    def __call__(self, m: int, l: int) -> float:
        """E_{m|l} with 1-based labels."""
        return float(self.entries[m - 1, l - 1])

    def has_zero(self) -> bool:
        return bool(np.any(self.entries == 0))

    def to_dict(self) -> dict:
        return {
            "log_base": self.log_base,
            "M": self.M,
            "entries": [[_json_real(v) for v in row] for row in self.entries],
            "prescribed": list(self.prescribed),
            "forced": self.forced,
        }


def _row_minima(e: np.ndarray) -> np.ndarray:
    return (e + np.diag(np.full(len(e), np.inf))).min(axis=1)


def _diagonal_gap(e: np.ndarray) -> np.ndarray:
    """|E_{m|m} - min_{l != m} E_{m|l}|, zero where both are infinite."""
    row_min, diag = _row_minima(e), np.diag(e)
    both_inf = np.isinf(row_min) & np.isinf(diag)
    return np.abs(np.where(both_inf, 0.0, diag) - np.where(both_inf, 0.0, row_min))


def _json_real(v: float):
    return "inf" if math.isinf(v) else float(v)


def stein_row(H: HypothesisSet, m: int) -> list[float]:
    """Exponents E_{l|m}, l != m, when E_{m|m} is prescribed as zero.

    The acceptance region of m shrinks to {G_m}, so each one is D(G_m||G_l).
    Returned in increasing l.
    """
    if not 1 <= m <= H.M - 1:
        raise IndexError(f"hypothesis index {m} outside 1..{H.M - 1}")
    return [H.divergence(m, l) for l in range(1, H.M + 1) if l != m]


def build_matrix(H: HypothesisSet, given, force: bool = False) -> ReliabilityMatrix:
    """Reliability matrix of the LAO test for the prescribed diagonal.

    Column l < M holds the projections of every G_m onto the ball around
    G_l.  Column M holds projections onto the region outside all balls.
    Zero radii give the Stein column automatically.

    Unless ``force`` is set, the conditions must hold (zeros allowed).  Under
    ``force`` the diagonal is whatever the rows give.  Per the diagonal rule
    it may then differ from the prescription.
    """
    given = _as_given(given)
    if len(given) != H.M - 1:
        raise ValueError(f"expected {H.M - 1} given exponents, got {len(given)}")
    if not force:
        report = check_conditions(H, given, allow_zero=True)
        if not report.ok:
            raise ConditionsViolated(report)
    M = H.M
    base = H.log_base
    regions = DecisionRegions.from_given(H, given)
    E = np.zeros((M, M))
    for l in range(1, M):
        ball = regions.balls[l - 1]
        for m in range(1, M + 1):
            if m != l:
                E[m - 1, l - 1] = min_div_in_ball(H[m], ball, base).value
        E[l - 1, l - 1] = given[l]
    for m in range(1, M):
        E[m - 1, M - 1] = min_div_in_complement(H[m], regions.balls, base).value
    E[M - 1, M - 1] = E[M - 1, : M - 1].min()

    if np.any(_diagonal_gap(E) > DIAGONAL_TOL):
        if not force:
            raise ArithmeticError("prescribed diagonal is not the row minimum")
        np.fill_diagonal(E, _row_minima(E))
    return ReliabilityMatrix(E, base, given.diag, force)
