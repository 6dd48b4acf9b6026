"""Market instances: demand + suppliers + search bound, welfare and profits."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from .cost import CostFunction, bank, cost_from_dict, cost_values, marginal_at_zero
from .demand import InverseDemand, demand_from_dict
from .errors import DegenerateInstanceError, DomainError, InstanceError


@dataclass(frozen=True)
class MarketInstance:
    """A single-good market with ``N`` quantity-setting suppliers.

    ``R`` bounds every individual quantity in the searches. When omitted it
    is derived from the demand curve so that p(R) <= min_n C'_n(0).
    """

    demand: InverseDemand
    costs: tuple[CostFunction, ...]
    R: float = field(default=math.nan)
    coef: np.ndarray = field(init=False, repr=False, compare=False)
    expo: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        costs = tuple(self.costs)
        if not costs:
            raise InstanceError("a market needs at least one supplier")
        object.__setattr__(self, "costs", costs)
        coef, expo = bank(costs)
        object.__setattr__(self, "coef", coef)
        object.__setattr__(self, "expo", expo)
        R = self.R
        if R is None or (isinstance(R, float) and math.isnan(R)):
            R = derive_bound(self.demand, float(marginal_at_zero(coef, expo).min()))
        if not R > 0:
            raise InstanceError(f"search bound R must be positive, got {R}")
        object.__setattr__(self, "R", float(R))

    @property
    def n(self) -> int:
        return len(self.costs)

    @property
    def min_marginal_at_zero(self) -> float:
        return float(marginal_at_zero(self.coef, self.expo).min())

    def with_costs(self, costs: Sequence[CostFunction]) -> "MarketInstance":
        return MarketInstance(self.demand, tuple(costs), self.R)

    def with_demand(self, demand: InverseDemand) -> "MarketInstance":
        return MarketInstance(demand, self.costs, self.R)

    def to_dict(self) -> dict[str, Any]:
        return {"demand": self.demand.to_dict(),
                "costs": [c.to_dict() for c in self.costs],
                "R": self.R}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def derive_bound(demand: InverseDemand, floor_price: float) -> float:
    """Smallest power of two with p(R) <= floor_price, doubled."""
    for k in range(-30, 80):
        r = 2.0 ** k
        if demand.price(r) <= floor_price:
            return 2.0 * r
    raise InstanceError(
        "no search bound R with p(R) <= min_n C'_n(0) exists; pass R explicitly")


def instance_from_dict(data: dict[str, Any]) -> MarketInstance:
    if not isinstance(data, dict) or "demand" not in data or "costs" not in data:
        raise InstanceError("instance JSON needs 'demand' and 'costs'")
    if not isinstance(data["costs"], list):
        raise InstanceError("'costs' must be a list")
    R = data.get("R")
    return MarketInstance(demand_from_dict(data["demand"]),
                          tuple(cost_from_dict(c) for c in data["costs"]),
                          math.nan if R is None else float(R))


def instance_from_json(text: str) -> MarketInstance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"invalid JSON: {exc}") from None
    return instance_from_dict(data)


def as_allocation(inst: MarketInstance, x) -> np.ndarray:
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.shape != (inst.n,):
        raise DomainError(f"allocation needs {inst.n} quantities, got {arr.shape[0]}")
    if np.any(arr < 0) or np.any(~np.isfinite(arr)):
        raise DomainError("allocation quantities must be finite and nonnegative")
    return arr


def total_cost(inst: MarketInstance, x) -> float:
    x = as_allocation(inst, x)
    return float(cost_values(inst.coef, inst.expo, x).sum())


def welfare(inst: MarketInstance, x) -> float:
    """Area under demand up to X minus the suppliers' total cost."""
    x = as_allocation(inst, x)
    return float(inst.demand.integral(x.sum())) - total_cost(inst, x)


def profit(inst: MarketInstance, x, n: int) -> float:
    """x_n p(X) - C_n(x_n) for supplier ``n`` (0-based)."""
    x = as_allocation(inst, x)
    if not 0 <= n < inst.n:
        raise IndexError(f"supplier index {n} out of range for N={inst.n}")
    if x[n] == 0:
        return 0.0
    return float(x[n] * inst.demand.price(x.sum()) - inst.costs[n].cost(x[n]))


@dataclass(frozen=True)
class AssumptionReport:
    costs_convex: bool          # A1
    demand_regular: bool        # A2
    bound_valid: bool           # A3
    nondegenerate: bool         # A4
    demand_convex: bool
    strategic_substitutes: bool

    @property
    def all_hold(self) -> bool:
        return self.costs_convex and self.demand_regular and self.bound_valid and self.nondegenerate

    def to_dict(self) -> dict[str, bool]:
        return {"A1": self.costs_convex, "A2": self.demand_regular, "A3": self.bound_valid,
                "A4": self.nondegenerate, "demand_convex": self.demand_convex,
                "strategic_substitutes": self.strategic_substitutes}


def check_assumptions(inst: MarketInstance, resolution: int = 2000) -> AssumptionReport:
    d = inst.demand
    c0 = inst.min_marginal_at_zero
    # A1 holds by construction for the cost kinds accepted by CostFunction.
    a1 = all(c.coef >= 0 and c.exponent >= 1 for c in inst.costs)
    upper = d.q_max if math.isfinite(d.q_max) else inst.R
    q = np.linspace(0.0, max(upper, inst.R) * 1.05, resolution)
    p = d.price(q)
    a2 = bool(d.price(0.0) > 0 and np.all(p >= 0) and np.all(np.diff(p) <= 1e-12))
    a3 = bool(d.price(inst.R) <= c0)
    a4 = bool(d.price(0.0) > c0)
    return AssumptionReport(a1, a2, a3, a4, d.is_convex(), d.check_novshek(resolution))


def require_nondegenerate(inst: MarketInstance) -> None:
    if not inst.demand.price(0.0) > inst.min_marginal_at_zero:
        raise DegenerateInstanceError(
            "degenerate instance: p(0) <= min_n C'_n(0), optimal welfare is zero")
