"""Worked examples, the affine tightness family and seeded random instances."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional, Sequence

import numpy as np

from .cost import CostFunction
from .demand import (AffineDemand, InverseDemand, LogDemand, PiecewiseLinearDemand, PowerDemand,
                     ShiftedPowerDemand)
from .errors import DomainError, InstanceError
from .model import MarketInstance, check_assumptions

CONVEX_FAMILIES = ("affine", "log", "power", "shifted_power")
ALL_FAMILIES = CONVEX_FAMILIES + ("concave",)

Exact = tuple[Fraction, ...]


@dataclass
class CatalogEntry:
    """An instance with the allocations and efficiencies known in closed form.

    ``allocations`` maps a role (equilibrium, candidate, optimum, monopoly)
    to exact quantities; ``efficiency`` maps the same roles to exact γ.
    ``values`` holds irrational reference numbers as floats.
    """

    name: str
    instance: MarketInstance
    allocations: dict[str, Exact] = field(default_factory=dict)
    efficiency: dict[str, Fraction] = field(default_factory=dict)
    values: dict[str, float] = field(default_factory=dict)
    notes: str = ""

    def allocation(self, role: str) -> np.ndarray:
        return np.array([float(v) for v in self.allocations[role]])

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "instance": self.instance.to_dict(),
            "allocations": {k: [[v.numerator, v.denominator] for v in xs]
                            for k, xs in self.allocations.items()},
            "efficiency": {k: [v.numerator, v.denominator] for k, v in self.efficiency.items()},
            "values": self.values,
            "notes": self.notes,
        }


def _fr(*vals) -> Exact:
    return tuple(Fraction(v) for v in vals)


def _ex1() -> CatalogEntry:
    # Perfectly elastic demand never drops to the cost floor, so R is given.
    inst = MarketInstance(PiecewiseLinearDemand([(0.0, 1.0), (1.0, 1.0)]),
                          (CostFunction.quadratic(1.0), CostFunction.quadratic(1.0)), R=4.0)
    half = Fraction(1, 2)
    return CatalogEntry("ex1", inst,
                        {"candidate": (half, half), "equilibrium": (half, half), "optimum": (half, half)},
                        {"equilibrium": Fraction(1)},
                        notes="p is constant, so the search bound R is supplied explicitly")


def _ex2() -> CatalogEntry:
    pts = [(0.0, 4.0), (4.0 / 3.0, 8.0 / 3.0), (44.0 / 3.0, 0.0)]
    inst = MarketInstance(PiecewiseLinearDemand(pts), (CostFunction.quadratic(1.0),))
    return CatalogEntry("ex2", inst,
                        {"candidate": _fr(1), "equilibrium": _fr(1), "optimum": _fr(Fraction(4, 3)),
                         "linearized_candidates": _fr(1, Fraction(7, 3)),
                         "linearized_best_response": _fr(Fraction(7, 3))},
                        values={"linearized_slope": 2.0})


def _ex3() -> CatalogEntry:
    inst = MarketInstance(PiecewiseLinearDemand([(0.0, 2.0), (1.0, 1.0)]),
                          (CostFunction.linear(1.0), CostFunction.linear(1.0)))
    third, half = Fraction(1, 3), Fraction(1, 2)
    return CatalogEntry("ex3", inst,
                        {"candidate": (third, third), "equilibrium": _fr(1, 1), "optimum": (half, half)},
                        {"candidate": Fraction(8, 9), "equilibrium": Fraction(1)})


def _ex4(M: float) -> CatalogEntry:
    if not M > 2:
        raise DomainError(f"ex4 needs M > 2, got {M}")
    Mf = Fraction(M).limit_denominator(10**9)
    inst = MarketInstance(PiecewiseLinearDemand([(0.0, 1.0), (1.0, 1.0), (1.0 + 1.0 / M, 0.0)]),
                          (CostFunction.linear(1.0), CostFunction.quadratic(1.0)))
    eq = (1 - 1 / Mf, 1 / Mf)
    return CatalogEntry(f"ex4(M={M:g})", inst,
                        {"equilibrium": eq, "optimum": _fr(0, Fraction(1, 2))},
                        {"equilibrium": 4 * (1 / Mf - 1 / Mf ** 2)},
                        {"welfare_opt": 0.25},
                        notes="supplier 2 (quadratic cost) produces 1/M at the equilibrium")


def _ex8(N: int) -> CatalogEntry:
    if N < 2:
        raise DomainError(f"ex8 needs N >= 2, got {N}")
    slope = Fraction(1, 3) - Fraction(1, 3 * (N - 1))
    costs = (CostFunction.linear(0.0),) + tuple(CostFunction.linear(float(slope)) for _ in range(N - 1))
    inst = MarketInstance(AffineDemand(1.0, 1.0), costs)
    eq = (Fraction(1, 3),) + (Fraction(1, 3 * (N - 1)),) * (N - 1)
    return CatalogEntry(f"ex8(N={N})", inst,
                        {"equilibrium": eq, "candidate": eq,
                         "monopoly": (Fraction(1, 2),) + (Fraction(0),) * (N - 1),
                         "optimum": (Fraction(1),) + (Fraction(0),) * (N - 1)},
                        {"equilibrium": Fraction(6 * N - 4, 9 * N - 9), "monopoly": Fraction(3, 4)},
                        {"beta": 2.0 / 3.0, "bound_g": 2.0 / 3.0, "bound_mono": 0.75})


def _family(name: str, demand: InverseDemand, c: float, s: float,
            t: Optional[float] = None, ratio: Optional[float] = None) -> CatalogEntry:
    from .efficiency import bound_f, bound_mono
    inst = MarketInstance(demand, (CostFunction.linear(c), CostFunction.linear(c)))
    values = {"s": s}
    if t is not None:
        values["t"] = t
    if ratio is not None:
        values.update(ratio=ratio, bound_st=bound_f(ratio), bound_st_mono=bound_mono(ratio))
    return CatalogEntry(name, inst, values=values)


def _log(alpha: float = 2.0, beta: float = 1.0, c: float = 0.0) -> CatalogEntry:
    return _family(f"log(alpha={alpha:g},beta={beta:g},c={c:g})", LogDemand(alpha, beta), c,
                   math.exp((alpha - c) / beta), math.exp((alpha - beta - c) / beta), math.e)


def _power(alpha: float = 1.0, beta: float = 1.0, delta: float = 0.5, c: float = 0.0) -> CatalogEntry:
    s = ((alpha - c) / beta) ** (1 / delta)
    t = ((alpha - c) / (beta * (delta + 1))) ** (1 / delta)
    return _family(f"power(alpha={alpha:g},beta={beta:g},delta={delta:g},c={c:g})",
                   PowerDemand(alpha, beta, delta), c, s, t, (delta + 1) ** ((1 - delta) / delta))


def _shifted_power(alpha: float = 1.0, beta: float = 1.0, Q: float = 1.0, c: float = 0.0) -> CatalogEntry:
    # Only s has a closed form; with beta = 1 the demand is affine and the ratio is 1.
    s = Q - (c / alpha) ** (1 / beta)
    if beta == 1:
        return _family(f"shifted_power(alpha={alpha:g},beta=1,Q={Q:g},c={c:g})",
                       ShiftedPowerDemand(alpha, beta, Q), c, s, s / 2, 1.0)
    return _family(f"shifted_power(alpha={alpha:g},beta={beta:g},Q={Q:g},c={c:g})",
                   ShiftedPowerDemand(alpha, beta, Q), c, s)


def _tight_mono() -> CatalogEntry:
    inst = MarketInstance(AffineDemand(1.0, 1.0), (CostFunction.linear(0.0),))
    return CatalogEntry("tight_mono", inst,
                        {"monopoly": _fr(Fraction(1, 2)), "optimum": _fr(1)},
                        {"monopoly": Fraction(3, 4)})


_BUILDERS = {"ex1": _ex1, "ex2": _ex2, "ex3": _ex3, "ex4": _ex4, "ex8": _ex8,
             "log": _log, "power": _power, "shifted_power": _shifted_power,
             "tight_mono": _tight_mono}

NAMES = tuple(_BUILDERS)


def example(name: str, **params) -> CatalogEntry:
    """Build a named example, e.g. ``example("ex8", N=10)`` or ``example("ex4", M=10)``."""
    try:
        build = _BUILDERS[name]
    except KeyError:
        raise InstanceError(f"unknown catalog entry {name!r}; choose from {', '.join(NAMES)}") from None
    try:
        return build(**params)
    except TypeError as exc:
        raise InstanceError(f"bad parameters for {name}: {exc}") from None


def default_entries() -> list[CatalogEntry]:
    """The fixed set checked by the worked-examples regression suite."""
    return ([_ex1(), _ex2(), _ex3()] + [_ex4(M) for M in (4, 10, 100)]
            + [_ex8(N) for N in (2, 5, 10, 50)]
            + [_log(), _log(3.0, 1.5, 0.5), _power(1.0, 1.0, 0.5), _power(2.0, 1.0, 1.0, 0.5),
               _shifted_power(1.0, 1.0, 1.0), _shifted_power(2.0, 2.0, 1.5, 0.3), _tight_mono()])


def theorem1_tight(beta: float, N: int) -> CatalogEntry:
    """Affine instance whose Cournot equilibrium has efficiency near g(β) for large N."""
    if not 0.5 <= beta < 1:
        raise DomainError(f"beta must lie in [1/2, 1), got {beta}")
    if N < 2:
        raise DomainError(f"N must be at least 2, got {N}")
    b = Fraction(beta).limit_denominator(10**12) if not isinstance(beta, Fraction) else beta
    x1 = 1 - b
    xn = (2 * b - 1) / (N - 1)
    slope = x1 - xn      # p(X) - x_n with p(X) = 1 - X = 1 - b
    if slope < 0:
        raise DomainError(f"beta={beta}, N={N} would need a negative cost slope")
    costs = (CostFunction.linear(0.0),) + tuple(CostFunction.linear(float(slope)) for _ in range(N - 1))
    inst = MarketInstance(AffineDemand(1.0, 1.0), costs)
    g = 3 * b * b - 4 * b + 2
    return CatalogEntry(f"theorem1_tight(beta={float(b):.6g},N={N})", inst,
                        {"equilibrium": (x1,) + (xn,) * (N - 1)},
                        {"equilibrium": g + 2 * (2 * b - 1) ** 2 / (N - 1)},
                        {"bound_g": float(g)})


def _draw_demand(rng: np.random.Generator, family: str) -> InverseDemand:
    if family == "affine":
        return AffineDemand(rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0))
    if family == "log":
        beta = rng.uniform(0.5, 1.5)
        return LogDemand(beta * rng.uniform(0.5, 1.5), beta)
    if family == "power":
        beta = rng.uniform(0.5, 2.0)
        return PowerDemand(beta * rng.uniform(0.5, 1.5), beta, rng.uniform(0.3, 1.0))
    if family == "shifted_power":
        return ShiftedPowerDemand(rng.uniform(0.5, 2.0), rng.uniform(1.0, 3.0), rng.uniform(0.5, 3.0))
    if family == "concave":
        M = rng.uniform(2.5, 50.0)
        level = rng.uniform(0.5, 2.0)
        return PiecewiseLinearDemand([(0.0, level), (1.0, level), (1.0 + level / M, 0.0)])
    raise InstanceError(f"unknown random family {family!r}; choose from {', '.join(ALL_FAMILIES)}")


def _price_ceiling(d: InverseDemand) -> float:
    # Log demand has p(0) = inf; cap slopes by the price at a small quantity.
    p0 = float(d.price(0.0))
    return p0 if math.isfinite(p0) else float(d.price(0.05 * d.q_max))


def random_instance(seed, family: str = "affine", n_range: Sequence[int] = (1, 6),
                    max_tries: int = 1000) -> MarketInstance:
    """Seeded instance with A1-A4 satisfied; demand convex unless family is ``concave``."""
    rng = np.random.default_rng(seed)
    lo, hi = n_range
    for _ in range(max_tries):
        demand = _draw_demand(rng, family)
        n = int(rng.integers(lo, hi + 1))
        ceiling = 0.9 * _price_ceiling(demand)
        costs = []
        for _ in range(n):
            if rng.random() < 0.5:
                costs.append(CostFunction.linear(rng.uniform(0.0, ceiling)))
            else:
                costs.append(CostFunction.quadratic(rng.uniform(0.1, 2.0)))
        try:
            inst = MarketInstance(demand, tuple(costs))
        except InstanceError:
            continue
        rep = check_assumptions(inst)
        if rep.all_hold and (rep.demand_convex or family == "concave"):
            return inst
    raise InstanceError(f"rejection sampling failed for family {family!r}")


def random_instances(seed: int, count: int, families: Sequence[str] = CONVEX_FAMILIES,
                     n_range: Sequence[int] = (1, 6)) -> list[tuple[str, MarketInstance]]:
    """``count`` independent instances, cycling through ``families``."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [(families[i % len(families)],
             random_instance(children[i], families[i % len(families)], n_range))
            for i in range(count)]
