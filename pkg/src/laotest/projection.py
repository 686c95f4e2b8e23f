"""Information projections onto divergence balls and their complements.

Every routine measures divergences in the active log base unless ``base`` is
given.  Internally the work happens in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize
from scipy.special import logsumexp

from ._logbase import resolve_base
from .probability import (
    AlphabetMismatch,
    Distribution,
    as_distribution,
    kl_divergence_rows,
)

BISECTION_TOL = 1e-12
MAX_BISECTION_ITER = 200


class InfeasibleGeometry(ValueError):
    """The target and ball center share no support, so every divergence is infinite."""


class ConvergenceFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class BallConstraint:
    """The set {Q : D(Q||center) <= radius}."""

    center: Distribution
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_distribution(self.center))
        r = float(self.radius)
        if not r >= 0:
            raise ValueError(f"ball radius must be nonnegative, got {self.radius!r}")
        object.__setattr__(self, "radius", r)


@dataclass(frozen=True)
class ProjectionResult:
    value: float
    argmin: Distribution | None
    active: bool


@dataclass(frozen=True)
class ComplementResult:
    """Infimum over the closure of the region outside every ball.

    ``boundary`` lists the balls whose sphere carries the minimizer.
    """

    value: float
    argmin: Distribution | None
    empty: bool = False
    boundary: tuple[int, ...] = field(default_factory=tuple)


def _kl_nats(q: np.ndarray, g: np.ndarray) -> float:
    if np.any((q > 0) & (g == 0)):
        return math.inf
    m = q > 0
    return max(float(np.sum(q[m] * (np.log(q[m]) - np.log(g[m])))), 0.0)


def _bisect(f, lo: float, hi: float, target: float, increasing: bool) -> float:
    """Point x in [lo, hi] with f(x) within BISECTION_TOL of target.

    ``f`` is monotone.  The returned point sits on the side where
    f(x) <= target.  If the bracket collapses to adjacent floats first
    (f jumps across ``target``), the feasible end is returned.
    """
    feasible, infeasible = (lo, hi) if increasing else (hi, lo)
    for _ in range(MAX_BISECTION_ITER):
        mid = 0.5 * (feasible + infeasible)
        if mid == feasible or mid == infeasible:
            return feasible
        fm = f(mid)
        if fm <= target:
            feasible = mid
            if target - fm <= BISECTION_TOL:
                return feasible
        else:
            infeasible = mid
    raise ConvergenceFailure(
        f"bisection did not reach |f - {target}| <= {BISECTION_TOL} "
        f"within {MAX_BISECTION_ITER} iterations"
    )


def tilted(center: np.ndarray, target: np.ndarray, alpha: float) -> np.ndarray:
    """Geometric mixture center^alpha * target^(1 - alpha), normalized.

    Both inputs must be strictly positive.  ``alpha`` may leave [0, 1]: the
    family then extrapolates past either endpoint.
    """
    logq = alpha * np.log(center) + (1.0 - alpha) * np.log(target)
    return np.exp(logq - logsumexp(logq))


def _restrict(target: np.ndarray, center: np.ndarray):
    common = (target > 0) & (center > 0)
    if not common.any():
        raise InfeasibleGeometry("target and ball center have disjoint supports")
    t_mass = target[common].sum()
    c_mass = center[common].sum()
    return common, target[common] / t_mass, center[common] / c_mass, t_mass, c_mass


def _embed(common: np.ndarray, q: np.ndarray) -> Distribution:
    full = np.zeros(common.size)
    full[common] = q
    return Distribution(full)


def min_div_in_ball(target, ball: BallConstraint, base: float | None = None) -> ProjectionResult:
    """inf { D(Q||target) : D(Q||ball.center) <= ball.radius }.

    The minimizer lies on the geometric mixtures of center and target.  The
    mixture weight is located by bisection on the constraint value.  When the
    supports differ, the problem is solved on their intersection and the
    missing target mass is added back as a constant.
    """
    T = as_distribution(target)
    C = ball.center
    if T.alphabet_size != C.alphabet_size:
        raise AlphabetMismatch(f"alphabet sizes differ: {T.alphabet_size} vs {C.alphabet_size}")
    scale = math.log(resolve_base(base))
    radius = ball.radius * scale
    t, c = T.probs, C.probs

    if _kl_nats(t, c) <= radius:
        return ProjectionResult(0.0, T, False)

    common, t_r, c_r, t_mass, c_mass = _restrict(t, c)
    offset = -math.log(t_mass)
    # shrinking to the common support costs -log C(common) of the radius
    radius_r = radius + math.log(c_mass)
    if radius_r < -BISECTION_TOL:
        return ProjectionResult(math.inf, None, True)
    radius_r = max(radius_r, 0.0)

    if _kl_nats(t_r, c_r) <= radius_r:
        return ProjectionResult(offset / scale, _embed(common, t_r), False)

    def constraint(alpha):
        return _kl_nats(tilted(c_r, t_r, alpha), c_r)

    if radius_r <= BISECTION_TOL:
        alpha = 1.0
    else:
        alpha = _bisect(constraint, 0.0, 1.0, radius_r, increasing=False)
    q = tilted(c_r, t_r, alpha)
    value = (_kl_nats(q, t_r) + offset) / scale
    return ProjectionResult(value, _embed(common, q), True)


def inverse_reliability(given_E_ml: float, m_dist, l_dist, base: float | None = None) -> float:
    """inf { D(Q||l_dist) : D(Q||m_dist) <= given_E_ml }.

    Recovers the diagonal exponent of ``l`` that produces ``given_E_ml`` as
    the off-diagonal exponent E_{m|l}.
    """
    if given_E_ml < 0:
        raise ValueError("exponent must be nonnegative")
    return min_div_in_ball(l_dist, BallConstraint(as_distribution(m_dist), given_E_ml), base).value


# ---------------------------------------------------------------------------
# complement of a union of balls


def _binary_ball_interval(center: np.ndarray, radius: float) -> tuple[float, float]:
    """Interval of q = Q(0) with D((q, 1-q)||center) <= radius (nats)."""
    c = center[0]

    def d(q):
        return _kl_nats(np.array([q, 1.0 - q]), center)

    lo = 0.0 if d(0.0) <= radius else _bisect(d, 0.0, c, radius, increasing=False)
    hi = 1.0 if d(1.0) <= radius else _bisect(d, c, 1.0, radius, increasing=True)
    return lo, hi


def _binary_complement(t: np.ndarray, balls, scale: float) -> ComplementResult:
    intervals = sorted(
        (*_binary_ball_interval(b.center.probs, b.radius * scale), i) for i, b in enumerate(balls)
    )
    merged: list[list] = []
    for lo, hi, i in intervals:
        if merged and lo <= merged[-1][1]:
            if hi > merged[-1][1]:
                merged[-1][1], merged[-1][3] = hi, i
        else:
            merged.append([lo, hi, i, i])

    qt = t[0]
    for lo, hi, left_ball, right_ball in merged:
        inside = (lo < qt or lo == 0.0) and (qt < hi or hi == 1.0) and hi > lo
        if not inside:
            continue
        candidates = []
        if lo > 0.0:
            candidates.append((lo, left_ball))
        if hi < 1.0:
            candidates.append((hi, right_ball))
        if not candidates:
            return ComplementResult(math.inf, None, empty=True)
        best = min(candidates, key=lambda c: _kl_nats(np.array([c[0], 1 - c[0]]), t))
        q = np.array([best[0], 1.0 - best[0]])
        return ComplementResult(_kl_nats(q, t) / scale, Distribution(q), boundary=(best[1],))
    return ComplementResult(0.0, Distribution(t))


def simplex_grid(alphabet_size: int, step: float) -> np.ndarray:
    """Rows are the simplex points whose coordinates are multiples of ``step``."""
    n = int(round(1.0 / step))
    if alphabet_size == 2:
        q = np.arange(n + 1) / n
        return np.column_stack([q, 1.0 - q])
    from .probability import type_counts

    return type_counts(n, alphabet_size) / n


def _family_sphere_points(t: np.ndarray, c: np.ndarray, radius: float) -> list[np.ndarray]:
    """Points on {D(Q||c) = radius} along the tilted family through c and t.

    The family is extended past both endpoints; the constraint decreases in
    alpha below 1 and increases above it.
    """
    if not (np.all(t > 0) and np.all(c > 0)) or radius <= 0:
        return []

    def g(alpha):
        return _kl_nats(tilted(c, t, alpha), c)

    points = []
    for sign in (-1.0, 1.0):
        span = 1.0
        while g(1.0 + sign * span) < radius and span < 1e6:
            span *= 2.0
        edge = 1.0 + sign * span
        if g(edge) < radius:
            continue
        lo, hi = (edge, 1.0) if sign < 0 else (1.0, edge)
        alpha = _bisect(g, lo, hi, radius, increasing=sign > 0)
        points.append(tilted(c, t, alpha))
    return points


def _grid_step_for(alphabet_size: int) -> float:
    if alphabet_size == 3:
        return 2e-3
    # keep the scan near 2e5 points
    n = 1
    while math.comb(n + 1 + alphabet_size - 1, alphabet_size - 1) <= 200_000:
        n += 1
    return 1.0 / n


def _general_complement(t, balls, scale, grid_step) -> ComplementResult:
    centers = [b.center.probs for b in balls]
    radii = np.array([b.radius * scale for b in balls])

    def outside(q, tol=0.0):
        return all(_kl_nats(q, c) >= r - tol for c, r in zip(centers, radii))

    best_val, best_q, best_ball = math.inf, None, ()

    def consider(q, ball_idx):
        nonlocal best_val, best_q, best_ball
        v = _kl_nats(q, t)
        if v < best_val:
            best_val, best_q, best_ball = v, q, ball_idx

    for i, (c, r) in enumerate(zip(centers, radii)):
        if r == 0:
            if outside(c, 1e-12):
                consider(c, (i,))
            continue
        for q in _family_sphere_points(t, c, r):
            if outside(q, 1e-12):
                consider(q, (i,))

    step = grid_step or _grid_step_for(t.size)
    grid = simplex_grid(t.size, step)
    mask = np.ones(len(grid), dtype=bool)
    for c, r in zip(centers, radii):
        mask &= kl_divergence_rows(grid, c, math.e) > r
    feasible = grid[mask]
    if feasible.size:
        vals = kl_divergence_rows(feasible, t, math.e)
        order = np.argsort(vals)[:5]
        for q0 in feasible[order]:
            q = _refine_outside(q0, t, centers, radii)
            if q is not None and outside(q, 1e-10):
                consider(q, _active_balls(q, centers, radii))
            consider(q0, _active_balls(q0, centers, radii))

    if best_q is None:
        return ComplementResult(math.inf, None, empty=True)
    return ComplementResult(best_val / scale, Distribution(best_q / best_q.sum()), boundary=best_ball)


def _active_balls(q, centers, radii, tol=1e-7) -> tuple[int, ...]:
    return tuple(i for i, (c, r) in enumerate(zip(centers, radii)) if abs(_kl_nats(q, c) - r) <= tol)


def _refine_outside(q0, t, centers, radii):
    eps = 1e-300
    support = t > 0
    if not support.all():
        return None

    def obj(q):
        q = np.clip(q, eps, None)
        return float(np.sum(q * (np.log(q) - np.log(t))))

    cons = [{"type": "eq", "fun": lambda q: q.sum() - 1.0}]
    for c, r in zip(centers, radii):
        if np.all(c > 0):
            cons.append({"type": "ineq", "fun": lambda q, c=c, r=r: obj_c(q, c) - r})

    def obj_c(q, c):
        q = np.clip(q, eps, None)
        return float(np.sum(q * (np.log(q) - np.log(c))))

    res = optimize.minimize(
        obj, q0, method="SLSQP", bounds=[(0.0, 1.0)] * len(q0), constraints=cons,
        options={"ftol": 1e-14, "maxiter": 500},
    )
    if not res.success:
        return None
    q = np.clip(res.x, 0.0, None)
    return q / q.sum()


def min_div_in_complement(
    target,
    balls: Sequence[BallConstraint],
    base: float | None = None,
    grid_step: float | None = None,
) -> ComplementResult:
    """inf D(Q||target) over Q with D(Q||center_l) > radius_l for every ball.

    The infimum is taken over the closure of that open region.  Binary
    alphabets are exact: balls are intervals and the answer is the nearest
    uncovered endpoint.  Larger alphabets combine the sphere crossings of the
    tilted families with a grid scan refined by SLSQP.  Only alphabets of
    size 3 get a fine default grid; beyond that the value carries grid
    resolution.
    """
    if not balls:
        raise ValueError("need at least one ball")
    T = as_distribution(target)
    for b in balls:
        if b.center.alphabet_size != T.alphabet_size:
            raise AlphabetMismatch("ball and target alphabets differ")
    scale = math.log(resolve_base(base))
    t = T.probs
    if all(_kl_nats(t, b.center.probs) >= b.radius * scale for b in balls):
        return ComplementResult(0.0, T)
    if T.alphabet_size == 2:
        return _binary_complement(t, balls, scale)
    return _general_complement(t, balls, scale, grid_step)


# ---------------------------------------------------------------------------
# brute-force verifier


def _ray_directions(alphabet_size: int, angles: np.ndarray) -> np.ndarray:
    if alphabet_size == 2:
        return np.array([[1.0, -1.0], [-1.0, 1.0]]) / math.sqrt(2)
    e1 = np.array([1.0, -1.0, 0.0]) / math.sqrt(2)
    e2 = np.array([1.0, 1.0, -2.0]) / math.sqrt(6)
    return np.cos(angles)[:, None] * e1 + np.sin(angles)[:, None] * e2


def _ray_boundary(center: np.ndarray, radius: float, dirs: np.ndarray) -> np.ndarray:
    """Farthest point of the ball along each ray from its center."""
    with np.errstate(divide="ignore"):
        limits = np.where(dirs < 0, -center / np.where(dirs < 0, dirs, -1.0), np.inf)
    t_max = limits.min(axis=1)
    lo = np.zeros(len(dirs))
    hi = t_max.copy()
    edge = center + hi[:, None] * dirs
    inside_at_edge = kl_divergence_rows(np.clip(edge, 0, None), center, math.e) <= radius
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        pts = np.clip(center + mid[:, None] * dirs, 0, None)
        ok = kl_divergence_rows(pts, center, math.e) <= radius
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    t = np.where(inside_at_edge, t_max, lo)
    pts = np.clip(center + t[:, None] * dirs, 0, None)
    return pts / pts.sum(axis=1, keepdims=True)


def min_div_in_ball_oracle(
    target, ball: BallConstraint, grid_step: float, base: float | None = None
) -> float:
    """Brute-force value of :func:`min_div_in_ball` for alphabets of size 2 or 3.

    Scans every grid point inside the ball.  The ball's boundary is then
    swept ray by ray from the center, with each ray's crossing found by
    bisection, and the best ray is zoomed in on.  No geometric mixture is
    involved.
    """
    T = as_distribution(target)
    C = ball.center
    k = T.alphabet_size
    if k not in (2, 3) or C.alphabet_size != k:
        raise ValueError("the grid oracle handles alphabets of size 2 or 3 only")
    if grid_step > 1e-3:
        raise ValueError("grid_step must be at most 1e-3")
    scale = math.log(resolve_base(base))
    radius = ball.radius * scale
    t, c = T.probs, C.probs

    grid = simplex_grid(k, grid_step)
    inside = kl_divergence_rows(grid, c, math.e) <= radius
    best = math.inf
    if inside.any():
        best = float(kl_divergence_rows(grid[inside], t, math.e).min())

    def boundary_values(dirs):
        pts = _ray_boundary(c, radius, dirs)
        return pts, kl_divergence_rows(pts, t, math.e)

    if k == 2:
        _, vals = boundary_values(_ray_directions(2, np.empty(0)))
        best = min(best, float(vals.min()))
    else:
        n = 20_000
        angles = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        width = 2 * np.pi / n
        for _ in range(12):
            _, vals = boundary_values(_ray_directions(3, angles))
            i = int(np.argmin(vals))
            best = min(best, float(vals[i]))
            angles = np.linspace(angles[i] - 2 * width, angles[i] + 2 * width, 41)
            width = angles[1] - angles[0]
    if _kl_nats(t, c) <= radius:
        best = 0.0
    return best / scale


def min_div_in_complement_oracle(
    target, balls: Sequence[BallConstraint], grid_step: float, base: float | None = None
) -> float:
    """Grid value of :func:`min_div_in_complement` (binary grids are zoomed)."""
    T = as_distribution(target)
    k = T.alphabet_size
    scale = math.log(resolve_base(base))
    t = T.probs

    def scan(points):
        mask = np.ones(len(points), dtype=bool)
        for b in balls:
            mask &= kl_divergence_rows(points, b.center.probs, math.e) > b.radius * scale
        if not mask.any():
            return math.inf, None
        vals = kl_divergence_rows(points[mask], t, math.e)
        i = int(np.argmin(vals))
        return float(vals[i]), points[mask][i]

    best, q = scan(simplex_grid(k, grid_step))
    if k == 2 and q is not None:
        h = grid_step
        for _ in range(6):
            lo, hi = max(q[0] - 2 * h, 0.0), min(q[0] + 2 * h, 1.0)
            qs = np.linspace(lo, hi, 401)
            val, q_new = scan(np.column_stack([qs, 1 - qs]))
            if q_new is not None and val <= best:
                best, q = val, q_new
            h = (hi - lo) / 400
    return best / scale
