"""Social optima, Cournot candidates and equilibria, monopoly outputs.

Every solve reduces to monotone scalar problems on the aggregate quantity X:
the suppliers' responses to a price (and, for candidates, a demand slope)
are closed form or one-dimensional bisections.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._numeric import bisect_boundary, bisect_boundary_vec, maximize_on_interval
from .cost import (cost_values, marginal_at_zero, marginal_values, share_values, supply_hi,
                   supply_lo)
from .errors import (NoCandidateError, NoDifferentiableCandidateError, NoMaximumError,
                     NonConvexDemandError)
from .model import MarketInstance, as_allocation, require_nondegenerate

QUANTITY_TOL = 1e-12
DEFICIT_TOL = 1e-6
SCAN_POINTS = 512
VERIFY_GRID = 10_001
MONOPOLY_GRID = 4_001
_EPS = np.finfo(float).eps


def residual_tol() -> float:
    """Tolerance on optimality/candidate residuals (env ``COURNOT_TOL``)."""
    raw = os.environ.get("COURNOT_TOL")
    return float(raw) if raw else 1e-8


@dataclass
class SolveResult:
    x: np.ndarray
    role: str
    residual: float
    verified: bool
    info: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return float(self.x.sum())


class Verification(NamedTuple):
    verified: bool
    deficit: float


@dataclass
class DynamicsResult:
    x: np.ndarray
    trajectory: list[np.ndarray]
    converged: bool
    verified: bool


def _left_slope(inst: MarketInstance, q):
    """Left derivative, falling back to the right one at q = 0."""
    q = np.asarray(q, dtype=float)
    safe = np.where(q > 0, q, 1.0)
    return np.where(q > 0, inst.demand.dminus(safe), inst.demand.dplus(np.zeros_like(q)))


# --- residuals ------------------------------------------------------------

def optimality_residual(inst: MarketInstance, x) -> float:
    """Largest violation of the social optimality conditions at ``x``."""
    x = as_allocation(inst, x)
    price = inst.demand.price(x.sum())
    mc = marginal_values(inst.coef, inst.expo, x)
    active = x > 0
    viol = np.where(active, np.abs(mc - price), np.maximum(0.0, price - mc))
    return float(viol.max())


def candidate_residual(inst: MarketInstance, x) -> float:
    """Largest violation of the first-order Cournot conditions (one-sided slopes)."""
    x = as_allocation(inst, x)
    X = x.sum()
    d = inst.demand
    price = d.price(X)
    dp = d.dplus(X)
    dm = _left_slope(inst, X)
    mc = marginal_values(inst.coef, inst.expo, x)
    with np.errstate(invalid="ignore"):
        upper = np.where(x > 0, np.maximum(0.0, mc - (price + x * dm)), 0.0)
        lower = np.maximum(0.0, price + np.where(x > 0, x * dp, 0.0) - mc)
    return float(np.nan_to_num(np.maximum(upper, lower), nan=np.inf).max())


# --- aggregate cost -------------------------------------------------------

def _aggregate(inst: MarketInstance, X: np.ndarray, iters: int = 90):
    """Cheapest split of each total in ``X``: (cost, marginal, split[N, G])."""
    X = np.atleast_1d(np.asarray(X, dtype=float))
    coef, expo, R = inst.coef, inst.expo, inst.R
    mc_r = marginal_values(coef, expo, np.full(inst.n, R))
    lo = np.full(X.shape, float(marginal_at_zero(coef, expo).min()) - 1.0)
    hi = np.full(X.shape, float(mc_r.max()))

    def enough(m):
        return supply_hi(coef, expo, m[None, :], R).sum(axis=0) >= X

    lo, hi = bisect_boundary_vec(enough, lo, hi, iters=iters)
    a = supply_hi(coef, expo, lo[None, :], R)
    b = supply_hi(coef, expo, hi[None, :], R)
    gap = (b - a).sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        theta = np.where(gap > 0, (X - a.sum(axis=0)) / gap, 0.0)
    theta = np.clip(theta, 0.0, 1.0)
    split = a + theta[None, :] * (b - a)
    split = np.where(X[None, :] <= 0, 0.0, split)
    cost = cost_values(coef, expo, split).sum(axis=0)
    return cost, hi, split


def aggregate_cost(inst: MarketInstance, X: float) -> tuple[float, np.ndarray]:
    """Least total cost of producing ``X`` and a split achieving it."""
    if X < 0:
        raise ValueError("aggregate quantity must be nonnegative")
    if X == 0:
        return 0.0, np.zeros(inst.n)
    if X > inst.n * inst.R * (1 + 1e-12):
        raise ValueError(f"X={X} exceeds total capacity N*R={inst.n * inst.R}")
    cost, _, split = _aggregate(inst, np.array([X]))
    return float(cost[0]), split[:, 0]


# --- social optimum -------------------------------------------------------

def solve_social_optimum(inst: MarketInstance) -> SolveResult:
    """Welfare-maximizing allocation with the smallest aggregate quantity."""
    require_nondegenerate(inst)
    d, coef, expo, R = inst.demand, inst.coef, inst.expo, inst.R

    def past_optimum(X: float) -> bool:
        return X >= supply_lo(coef, expo, d.price(X), R).sum()

    lo, hi = bisect_boundary(past_optimum, 0.0, inst.n * R, xtol=QUANTITY_TOL)
    X = hi
    _, split = aggregate_cost(inst, X)
    res = optimality_residual(inst, split)
    return SolveResult(split, "social_optimum", res, res <= residual_tol())


# --- Cournot candidates ---------------------------------------------------

def _fixed_point_gap(inst: MarketInstance, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    y = inst.demand.price(X)
    m = -_left_slope(inst, X)
    shares = share_values(inst.coef, inst.expo, y[None, :], m[None, :])
    return shares.sum(axis=0) - X


def _shares(inst: MarketInstance, X: float) -> np.ndarray:
    y = inst.demand.price(X)
    m = -float(_left_slope(inst, X))
    return share_values(inst.coef, inst.expo, np.array([[y]]), np.array([[m]]))[:, 0]


def cournot_candidates(inst: MarketInstance, points: int = SCAN_POINTS) -> list[SolveResult]:
    """All candidate profiles found on a geometric scan of aggregate supply.

    Sorted by aggregate quantity. Fixed points sitting on a demand kink are
    discarded, since a candidate must see a differentiable demand curve.
    """
    require_nondegenerate(inst)
    if not inst.demand.is_convex():
        raise NonConvexDemandError("candidate search needs a convex inverse demand")
    top = inst.n * inst.R
    grid = np.geomspace(1e-9 * top, top, points)
    F = _fixed_point_gap(inst, grid)
    kinks = inst.demand.kinks
    tol = residual_tol()

    def gap(X: float) -> float:
        return float(_fixed_point_gap(inst, np.array([X]))[0])

    roots: list[float] = []
    for i in range(points - 1):
        fa, fb = F[i], F[i + 1]
        if fa == 0:
            roots.append(float(grid[i]))
            continue
        if np.sign(fa) == np.sign(fb) or fb == 0:
            continue
        if fa > 0:
            lo, hi = bisect_boundary(lambda X: gap(X) <= 0, grid[i], grid[i + 1], xtol=QUANTITY_TOL)
        else:
            lo, hi = bisect_boundary(lambda X: gap(X) >= 0, grid[i], grid[i + 1], xtol=QUANTITY_TOL)
        roots.append(lo if abs(gap(lo)) <= abs(gap(hi)) else hi)
    if F[-1] == 0:
        roots.append(float(grid[-1]))

    found, on_kink = [], []
    for X in roots:
        k_hit = [k for k in kinks if abs(X - k) <= 1e-9 * max(1.0, k)]
        if any(inst.demand.dminus(k) != inst.demand.dplus(k) for k in k_hit):
            on_kink.append(X)
            continue
        x = _shares(inst, X)
        if not np.all(np.isfinite(x)):
            continue
        res = abs(x.sum() - X) + candidate_residual(inst, x)
        if res <= tol * max(1.0, X):
            found.append(SolveResult(x, "cournot_candidate", res, True, {"X": X}))
        else:
            on_kink.append(X)
    if not found:
        if on_kink:
            raise NoDifferentiableCandidateError(
                f"no differentiable candidate: fixed points only at kinks {on_kink}")
        raise NoCandidateError("no Cournot candidate found on the scan")
    return found


def solve_cournot_candidate(inst: MarketInstance) -> SolveResult:
    """The candidate with the smallest aggregate quantity; all are in ``info``."""
    cands = cournot_candidates(inst)
    first = cands[0]
    first.info["all"] = cands
    return first


# --- best responses and equilibrium checks -------------------------------

def best_response(inst: MarketInstance, x, n: int, grid: int = VERIFY_GRID) -> tuple[float, float]:
    """Global maximizer over [0, R] of supplier ``n``'s profit, others fixed."""
    x = as_allocation(inst, x)
    d, c = inst.demand, inst.costs[n]
    others = float(x.sum() - x[n])

    def prof(z):
        z = np.asarray(z, dtype=float)
        q = others + z
        with np.errstate(invalid="ignore"):
            rev = np.where(z > 0, z * d.price(q), 0.0)
        return rev - c.cost(z)

    def slope(z: float) -> float:
        q = others + z
        dl = float(_left_slope(inst, q))
        return float(d.price(q) + (z * dl if z > 0 else 0.0) - c.marginal(z))

    extra = [x[n]] + [k - others for k in d.kinks]
    z, val = maximize_on_interval(prof, 0.0, inst.R, grid=grid, slope=slope, extra=extra)
    cur = float(prof(np.array([x[n]]))[0])
    if cur >= val - 4 * _EPS * max(1.0, abs(val)):
        return float(x[n]), cur
    return z, val


def verify_equilibrium(inst: MarketInstance, x, grid: int = VERIFY_GRID) -> Verification:
    """Global unilateral-deviation check; deficit is the largest profit gain."""
    x = as_allocation(inst, x)
    worst_rel, worst = -math.inf, 0.0
    # Suppliers with the same cost and quantity face the same deviation problem.
    seen: dict[tuple, int] = {}
    for n in range(inst.n):
        seen.setdefault((inst.costs[n], float(x[n])), n)
    for n in seen.values():
        cur = float(x[n] * inst.demand.price(x.sum()) - inst.costs[n].cost(x[n])) if x[n] > 0 else 0.0
        _, best = best_response(inst, x, n, grid)
        gain = max(0.0, best - cur)
        rel = gain / max(1.0, abs(cur))
        if rel > worst_rel:
            worst_rel, worst = rel, gain
    return Verification(worst_rel <= DEFICIT_TOL, worst)


def solve_cournot_equilibrium(inst: MarketInstance) -> SolveResult:
    """First candidate (in increasing X) that survives the global check."""
    for cand in cournot_candidates(inst):
        ok, deficit = verify_equilibrium(inst, cand.x)
        if ok:
            return SolveResult(cand.x, "cournot_equilibrium", cand.residual, True,
                               {**cand.info, "deficit": deficit})
    raise NoCandidateError("no candidate passed the equilibrium check")


def best_response_dynamics(inst: MarketInstance, start, max_iters: int = 500,
                           tol: float = 1e-9) -> DynamicsResult:
    """Round-robin global best responses until a sweep moves less than ``tol``."""
    x = as_allocation(inst, start).copy()
    traj = [x.copy()]
    converged = False
    for _ in range(max_iters):
        move = 0.0
        for n in range(inst.n):
            z, _ = best_response(inst, x, n)
            move = max(move, abs(z - x[n]))
            x[n] = z
        traj.append(x.copy())
        if move < tol:
            converged = True
            break
    verified = converged and verify_equilibrium(inst, x).verified
    return DynamicsResult(x, traj, converged, verified)


# --- monopoly -------------------------------------------------------------

def solve_monopoly(inst: MarketInstance) -> SolveResult:
    """Joint-profit maximizing output, split at least cost among suppliers."""
    require_nondegenerate(inst)
    d = inst.demand
    top = inst.n * inst.R

    def joint(X):
        X = np.asarray(X, dtype=float)
        with np.errstate(invalid="ignore"):
            rev = np.where(X > 0, X * d.price(X), 0.0)
        cost, _, _ = _aggregate(inst, X)
        return rev - cost

    def slope(X: float) -> float:
        if X <= 0:
            return math.inf
        _, mc, _ = _aggregate(inst, np.array([X]))
        return float(d.price(X) + X * d.dminus(X) - mc[0])

    X, _ = maximize_on_interval(joint, 0.0, top, grid=MONOPOLY_GRID, slope=slope,
                                extra=list(d.kinks))
    if X >= top * (1 - 1e-9) and slope(top) > 0:
        raise NoMaximumError("joint profit still increasing at the search bound")
    _, split = aggregate_cost(inst, X)
    _, mc, _ = _aggregate(inst, np.array([X]))
    left = d.price(X) + X * (d.dminus(X) if X > 0 else d.dplus(X)) - mc[0]
    right = d.price(X) + X * d.dplus(X) - mc[0]
    res = float(max(0.0, -left if X > 0 else 0.0, right))
    return SolveResult(split, "monopoly", res, res <= residual_tol(), {"X": X})
