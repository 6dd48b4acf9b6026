"""Realized efficiency, curvature statistics and the closed-form lower bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional, Union

import numpy as np

from ._numeric import bisect_boundary
from .cost import CostFunction, marginal_values
from .demand import (AffineDemand, LogDemand, PiecewiseLinearDemand, PowerDemand,
                     ShiftedPowerDemand)
from .errors import (CournotError, DomainError, EqualPricesError, NotAffineError,
                     SociallyOptimalError)
from .model import MarketInstance, as_allocation, check_assumptions, welfare
from .solver import (SolveResult, best_response_dynamics, cournot_candidates, optimality_residual,
                     residual_tol, solve_monopoly, solve_social_optimum, verify_equilibrium)

PRICE_TOL = 1e-12
CBAR_SLACK = 1e-9
BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class Inapplicable:
    """A bound that does not apply to the instance, with the reason why."""

    reason: str

    def __bool__(self) -> bool:
        return False


Bound = Union[float, Inapplicable]


# --- closed-form bounds ---------------------------------------------------

def bound_g(beta: float) -> float:
    """3β² − 4β + 2, the tight bound for affine demand."""
    if not 0.5 - CBAR_SLACK <= beta <= 1.0:
        raise DomainError(f"beta must lie in [1/2, 1], got {beta}")
    return 3.0 * beta * beta - 4.0 * beta + 2.0


def phi(cbar: float) -> float:
    _check_cbar(cbar)
    return max((2.0 - cbar + math.sqrt(cbar * cbar - 4.0 * cbar + 12.0)) / 2.0, 1.0)


def bound_f(cbar: float) -> float:
    """(φ² + 2)/(φ² + 2φ + c̄) for convex demand."""
    p = phi(cbar)
    return (p * p + 2.0) / (p * p + 2.0 * p + cbar)


def bound_mono(cbar: float) -> float:
    _check_cbar(cbar)
    return 3.0 / (3.0 + cbar)


def _check_cbar(cbar: float) -> None:
    if not cbar >= 1.0:
        raise DomainError(f"curvature ratio must be >= 1, got {cbar}")


# --- realized quantities --------------------------------------------------

def gamma(inst: MarketInstance, x, opt: Optional[SolveResult] = None) -> float:
    """Welfare of ``x`` relative to the optimal welfare."""
    x = as_allocation(inst, x)
    opt = opt or solve_social_optimum(inst)
    return welfare(inst, x) / welfare(inst, opt.x)


def beta(inst: MarketInstance, x) -> float:
    """aX / (b − min_n C'_n(x_n)) for affine demand."""
    d = inst.demand
    if not isinstance(d, AffineDemand):
        raise NotAffineError("beta is defined for affine demand only")
    x = as_allocation(inst, x)
    X = float(x.sum())
    if X > d.b / d.a:
        raise DomainError("X > b/a: the allocation is socially optimal, beta is undefined")
    alpha = marginal_values(inst.coef, inst.expo, x)
    return d.a * X / (d.b - float(alpha.min()))


def prices_differ(inst: MarketInstance, X: float, XS: float) -> bool:
    pX, pS = float(inst.demand.price(X)), float(inst.demand.price(XS))
    return abs(pX - pS) > PRICE_TOL * max(1.0, abs(pS))


def curvature(inst: MarketInstance, x, opt: SolveResult) -> tuple[float, float, float]:
    """(c, d, c̄): tangent slope at X, chord slope from X to X^S, their ratio."""
    x = as_allocation(inst, x)
    X, XS = float(x.sum()), opt.total
    if not prices_differ(inst, X, XS):
        raise EqualPricesError("p(X) = p(X^S): efficiency is 1 and curvature is undefined")
    dem = inst.demand
    c = abs(float(dem.dminus(X))) if X > 0 else abs(float(dem.dplus(0.0)))
    d = abs((float(dem.price(XS)) - float(dem.price(X))) / (XS - X))
    cbar = c / d
    if dem.is_convex() and 1.0 - CBAR_SLACK <= cbar < 1.0:
        cbar = 1.0
    return c, d, cbar


# --- ex-ante quantities ---------------------------------------------------

def bound_mu(inst: MarketInstance) -> Bound:
    """f(μ) with μ = ∂₊p(0)/∂₋p(Q) when both slopes are finite and nonzero."""
    d = inst.demand
    if not d.is_convex():
        return Inapplicable("inverse demand is not convex")
    Q = d.q_max
    if not math.isfinite(Q):
        return Inapplicable("demand never reaches zero price")
    top = float(d.dplus(0.0))
    bottom = float(d.dminus(Q))
    if not math.isfinite(top):
        return Inapplicable("right derivative of p at 0 is infinite")
    if bottom == 0.0:
        return Inapplicable("left derivative of p at Q is zero")
    return bound_f(max(top / bottom, 1.0))


def compute_s_t(inst: MarketInstance, closed_form: bool = True) -> tuple[float, float]:
    """Upper bound s on optimal supply and lower bound t on candidate supply."""
    d = inst.demand
    c0 = inst.min_marginal_at_zero
    linear = bool(np.all(inst.expo == 1.0))
    if closed_form:
        hit = _closed_form_s_t(d, c0, linear)
        if hit is not None:
            return hit
    s = _numeric_s(inst, c0)
    return s, _numeric_t(inst, s)


def _closed_form_s_t(d, c: float, linear: bool) -> Optional[tuple[float, float]]:
    if isinstance(d, LogDemand):
        s = math.exp((d.alpha - c) / d.beta)
        return (s, math.exp((d.alpha - d.beta - c) / d.beta)) if linear else None
    if isinstance(d, PowerDemand):
        if c >= d.alpha:
            return None
        s = ((d.alpha - c) / d.beta) ** (1.0 / d.delta)
        t = ((d.alpha - c) / (d.beta * (d.delta + 1.0))) ** (1.0 / d.delta)
        return (s, t) if linear else None
    if isinstance(d, AffineDemand):
        if c >= d.b:
            return None
        return ((d.b - c) / d.a, (d.b - c) / (2.0 * d.a)) if linear else None
    return None


def _numeric_s(inst: MarketInstance, c0: float) -> float:
    if c0 <= 0 and math.isfinite(inst.demand.q_max):
        return inst.demand.q_max
    if isinstance(inst.demand, ShiftedPowerDemand):
        dm = inst.demand
        return dm.Q - (c0 / dm.alpha) ** (1.0 / dm.beta)
    _, hi = bisect_boundary(lambda q: inst.demand.price(q) <= c0, 0.0, inst.R)
    return hi


def _numeric_t(inst: MarketInstance, s: float, points: int = 4096) -> float:
    d = inst.demand

    def h(q):
        q = np.asarray(q, dtype=float)
        mc = marginal_values(inst.coef, inst.expo, np.broadcast_to(q, (inst.n,) + q.shape)).min(axis=0)
        with np.errstate(invalid="ignore"):
            marg = d.price(q) + np.where(q > 0, q * d.dplus(q), 0.0)
        return mc - marg

    if s <= 0:
        return 0.0
    grid = np.concatenate([[0.0], np.geomspace(s * 1e-12, s, points)])
    vals = h(grid)
    ok = np.flatnonzero(np.nan_to_num(vals, nan=-np.inf) >= 0)
    if ok.size == 0:
        return s
    i = int(ok[0])
    if i == 0:
        return 0.0
    _, t = bisect_boundary(lambda q: h(np.array([q]))[0] >= 0, grid[i - 1], grid[i])
    return t


def _st_ratio(inst: MarketInstance) -> Union[float, Inapplicable]:
    d = inst.demand
    if not d.is_convex():
        return Inapplicable("inverse demand is not convex")
    s, t = compute_s_t(inst)
    ds = float(d.dminus(s)) if s > 0 else float(d.dplus(0.0))
    if not ds < 0:
        return Inapplicable("left derivative of p at s is zero")
    dt = float(d.dplus(t))
    if not math.isfinite(dt):
        return Inapplicable("right derivative of p at t is infinite")
    return max(dt / ds, 1.0)


def bound_st(inst: MarketInstance) -> Bound:
    """f(∂₊p(t)/∂₋p(s)): ex-ante bound for Cournot candidates."""
    r = _st_ratio(inst)
    return r if isinstance(r, Inapplicable) else bound_f(r)


def bound_st_mono(inst: MarketInstance) -> Bound:
    """3/(3 + ∂₊p(t)/∂₋p(s)): ex-ante bound for monopoly outputs."""
    r = _st_ratio(inst)
    return r if isinstance(r, Inapplicable) else bound_mono(r)


# --- worst-case transforms -----------------------------------------------

def linearize_costs(inst: MarketInstance, x) -> MarketInstance:
    """Replace each cost by the linear cost with slope C'_n(x_n)."""
    x = as_allocation(inst, x)
    if optimality_residual(inst, x) <= residual_tol():
        raise SociallyOptimalError(
            "allocation is socially optimal; the linearized model can have zero optimal welfare")
    slopes = marginal_values(inst.coef, inst.expo, x)
    costs = tuple(c if c.kind == "linear" else CostFunction.linear(float(a))
                  for c, a in zip(inst.costs, slopes))
    return MarketInstance(inst.demand, costs, inst.R)


def p0_transform(inst: MarketInstance, x, opt: SolveResult) -> MarketInstance:
    """Piecewise linear demand tangent at X and chordal through (X^S, p(X^S))."""
    x = as_allocation(inst, x)
    c, d, _ = curvature(inst, x, opt)
    X = float(x.sum())
    y = float(inst.demand.price(X))
    pts = [(0.0, y + c * X), (X, y), (X + y / d, 0.0)] if X > 0 else [(0.0, y), (y / d, 0.0)]
    return MarketInstance(PiecewiseLinearDemand(pts), inst.costs, inst.R)


# --- reports --------------------------------------------------------------

def _num(v) -> Any:
    if isinstance(v, Inapplicable):
        return None
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


@dataclass
class EfficiencyReport:
    """Efficiency of one allocation, its curvature statistics and bounds."""

    role: str
    x: np.ndarray
    gamma: float
    price: float
    price_opt: float
    verified: bool
    residual: float
    beta: Bound = Inapplicable("not computed")
    c: Bound = Inapplicable("not computed")
    d: Bound = Inapplicable("not computed")
    cbar: Bound = Inapplicable("not computed")
    phi: Bound = Inapplicable("not computed")
    bounds: dict[str, Bound] = field(default_factory=dict)

    def violations(self, slack: float = BOUND_SLACK) -> list[str]:
        """Names of bounds that the realized efficiency falls below."""
        if not self.verified:
            return []
        return [k for k, v in self.bounds.items()
                if not isinstance(v, Inapplicable) and self.gamma < v - slack]

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "role": self.role, "x": [float(v) for v in self.x], "X": float(self.x.sum()),
            "gamma": self.gamma, "price": self.price, "price_opt": self.price_opt,
            "verified": self.verified, "residual": self.residual,
        }
        reasons = {}
        for name in ("beta", "c", "d", "cbar", "phi"):
            v = getattr(self, name)
            out[name] = _num(v)
            if isinstance(v, Inapplicable):
                reasons[name] = v.reason
        for name, v in self.bounds.items():
            out[name] = _num(v)
            if isinstance(v, Inapplicable):
                reasons[name] = v.reason
        out["reasons"] = reasons
        out["violations"] = self.violations()
        return out


def report(inst: MarketInstance, sol: SolveResult, opt: SolveResult,
           monopoly: bool = False) -> EfficiencyReport:
    """Efficiency report for a candidate/equilibrium or, with ``monopoly``, a monopoly output."""
    x = sol.x
    X, XS = sol.total, opt.total
    dem = inst.demand
    rep = EfficiencyReport(sol.role, x, gamma(inst, x, opt), float(dem.price(X)),
                           float(dem.price(XS)), sol.verified, sol.residual)
    convex = dem.is_convex()
    if not prices_differ(inst, X, XS):
        reason = "p(X) = p(X^S), efficiency bounds are trivially met"
        rep.c = rep.d = rep.cbar = rep.phi = Inapplicable(reason)
    else:
        rep.c, rep.d, rep.cbar = curvature(inst, x, opt)
        if rep.cbar >= 1.0:
            rep.phi = phi(rep.cbar)
    not_convex = Inapplicable("inverse demand is not convex")
    if monopoly:
        if not convex:
            rep.bounds["bound_mono"] = not_convex
        elif isinstance(rep.cbar, Inapplicable):
            rep.bounds["bound_mono"] = rep.cbar
        else:
            rep.bounds["bound_mono"] = bound_mono(rep.cbar)
        rep.bounds["bound_st_mono"] = bound_st_mono(inst)
        return rep
    if isinstance(dem, AffineDemand):
        try:
            rep.beta = beta(inst, x)
            rep.bounds["bound_g"] = bound_g(rep.beta) if rep.beta >= 0.5 - CBAR_SLACK else Inapplicable(
                "beta below 1/2: allocation is not a candidate")
        except DomainError as exc:
            rep.beta = Inapplicable(str(exc))
            rep.bounds["bound_g"] = Inapplicable(str(exc))
    else:
        rep.beta = Inapplicable("inverse demand is not affine")
    if not convex:
        rep.bounds["bound_f"] = not_convex
    elif isinstance(rep.cbar, Inapplicable):
        rep.bounds["bound_f"] = rep.cbar
    else:
        rep.bounds["bound_f"] = bound_f(rep.cbar)
    rep.bounds["bound_mu"] = bound_mu(inst)
    rep.bounds["bound_st"] = bound_st(inst)
    return rep


@dataclass
class Analysis:
    """Everything computed for one instance by :func:`analyze`."""

    instance: MarketInstance
    assumptions: dict[str, bool]
    optimum: SolveResult
    welfare_opt: float
    candidates: list[EfficiencyReport]
    monopoly: Optional[EfficiencyReport]
    s: Optional[float]
    t: Optional[float]
    notes: list[str] = field(default_factory=list)

    @property
    def equilibria(self) -> list[EfficiencyReport]:
        return [r for r in self.candidates if r.verified]

    def violations(self) -> list[str]:
        out = []
        for r in self.candidates + ([self.monopoly] if self.monopoly else []):
            out.extend(f"{r.role}@X={float(r.x.sum()):.17g}: gamma below {b}" for b in r.violations())
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": 1,
            "instance": self.instance.to_dict(),
            "assumptions": self.assumptions,
            "optimum": {"x": [float(v) for v in self.optimum.x], "X": self.optimum.total,
                        "welfare": self.welfare_opt, "residual": self.optimum.residual,
                        "verified": self.optimum.verified},
            "s": self.s, "t": self.t,
            "candidates": [r.to_dict() for r in self.candidates],
            "monopoly": self.monopoly.to_dict() if self.monopoly else None,
            "violations": self.violations(),
            "notes": self.notes,
        }


def analyze(inst: MarketInstance) -> Analysis:
    """Solve optimum, candidates (with global checks) and monopoly; attach bounds."""
    opt = solve_social_optimum(inst)
    notes: list[str] = []
    reports: list[EfficiencyReport] = []
    if inst.demand.is_convex():
        for cand in cournot_candidates(inst):
            ok, deficit = verify_equilibrium(inst, cand.x)
            role = "cournot_equilibrium" if ok else "cournot_candidate"
            sol = SolveResult(cand.x, role, cand.residual, ok, {"deficit": deficit})
            reports.append(report(inst, sol, opt))
    else:
        notes.append("inverse demand is not convex: candidates searched by best-response dynamics")
        dyn = best_response_dynamics(inst, np.zeros(inst.n))
        if dyn.converged:
            sol = SolveResult(dyn.x, "cournot_equilibrium" if dyn.verified else "cournot_candidate",
                              0.0, dyn.verified)
            reports.append(report(inst, sol, opt))
    try:
        mono = report(inst, solve_monopoly(inst), opt, monopoly=True)
    except CournotError as exc:
        mono = None
        notes.append(f"monopoly: {exc}")
    s = t = None
    if inst.demand.is_convex():
        s, t = compute_s_t(inst)
    return Analysis(inst, check_assumptions(inst).to_dict(), opt, welfare(inst, opt.x),
                    reports, mono, s, t, notes)
