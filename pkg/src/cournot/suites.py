"""Regression and randomized property suites behind ``cournot verify``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import efficiency as eff
from .catalog import CONVEX_FAMILIES, CatalogEntry, default_entries, random_instances
from .errors import CournotError
from .model import MarketInstance, welfare
from .solver import (cournot_candidates, optimality_residual, solve_monopoly, solve_social_optimum,
                     verify_equilibrium)

SLACK = 1e-9
EQUAL_TOL = 1e-8


@dataclass
class Violation:
    check: str
    detail: str
    instance: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {"check": self.check, "detail": self.detail, "instance": self.instance}


@dataclass
class SuiteResult:
    """Outcome of a suite run: checks performed, violations and bound margins."""

    name: str
    instances: int = 0
    checks: dict[str, int] = field(default_factory=dict)
    violations: list[Violation] = field(default_factory=list)
    margins: dict[str, float] = field(default_factory=dict)
    skipped: dict[str, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def check(self, name: str, passed: bool, inst: MarketInstance, detail: str = "") -> bool:
        self.checks[name] = self.checks.get(name, 0) + 1
        if not passed:
            self.violations.append(Violation(name, detail, inst.to_dict()))
        return passed

    def margin(self, name: str, value: float) -> None:
        self.margins[name] = min(self.margins.get(name, math.inf), value)

    def skip(self, name: str) -> None:
        self.skipped[name] = self.skipped.get(name, 0) + 1

    def count(self, name: str) -> int:
        return self.checks.get(name, 0)

    def failures(self, prefix: str) -> list[Violation]:
        return [v for v in self.violations if v.check.startswith(prefix)]

    def summary(self) -> str:
        lines = [f"suite {self.name}: {self.instances} instances, "
                 f"{sum(self.checks.values())} checks, {len(self.violations)} violations"]
        for k in sorted(self.margins):
            lines.append(f"  min margin {k}: {self.margins[k]:.3e}")
        for k in sorted(self.skipped):
            lines.append(f"  skipped {k}: {self.skipped[k]}")
        for v in self.violations[:20]:
            lines.append(f"  VIOLATION {v.check}: {v.detail}")
        return "\n".join(lines)

    def to_dict(self) -> dict[str, Any]:
        return {"suite": self.name, "instances": self.instances, "checks": self.checks,
                "violations": [v.to_dict() for v in self.violations],
                "margins": self.margins, "skipped": self.skipped}


# --- random property suite ------------------------------------------------

def check_instance(inst: MarketInstance, res: SuiteResult, family: str = "") -> None:
    """Run every bound, ordering and transform property on one instance."""
    opt = solve_social_optimum(inst)
    res.check("optimum.residual", opt.residual <= 1e-8, inst, f"residual {opt.residual:.3e}")
    convex = inst.demand.is_convex()
    if not convex:
        _check_nonconvex(inst, opt, res)
        return
    w_opt = welfare(inst, opt.x)
    dem = inst.demand
    s, t = eff.compute_s_t(inst)
    st = eff.bound_st(inst)
    for cand in cournot_candidates(inst):
        x, X = cand.x, cand.total
        g = welfare(inst, x) / w_opt
        ok, deficit = verify_equilibrium(inst, x)
        pX, pS = float(dem.price(X)), float(dem.price(opt.total))
        differ = eff.prices_differ(inst, X, opt.total)

        res.check("order.price", pX >= pS - EQUAL_TOL * max(1.0, pS), inst, f"p(X)={pX} < p(XS)={pS}")
        res.check("st.t", X >= t - 1e-9 * max(1.0, t), inst, f"X={X} < t={t}")
        res.check("st.s", opt.total <= s + 1e-9 * max(1.0, s), inst, f"XS={opt.total} > s={s}")
        if differ:
            res.check("order.quantity", X < opt.total, inst, f"X={X} >= XS={opt.total} with p(X) != p(XS)")
            c, d, cbar = eff.curvature(inst, x, opt)
            res.check("curvature.cbar", cbar >= 1.0, inst, f"cbar={cbar}")
            f = eff.bound_f(cbar)
            if not isinstance(st, eff.Inapplicable):
                res.check("st.relaxation", st <= f + SLACK, inst, f"bound_st={st} > f(cbar)={f}")
            if ok:
                res.margin("gamma-f", g - f)
                res.check("bound.f", g >= f - SLACK, inst, f"gamma={g} < f(cbar)={f}")
                if family == "affine" or isinstance(dem, eff.AffineDemand):
                    b = eff.beta(inst, x)
                    res.check("affine.beta_range", 0.5 - SLACK <= b < 1.0, inst, f"beta={b}")
                    gb = eff.bound_g(min(max(b, 0.5), 1.0))
                    res.margin("gamma-g", g - gb)
                    res.check("bound.g", g >= gb - SLACK, inst, f"gamma={g} < g(beta)={gb}")
            _check_transforms(inst, x, g, opt, res)
        else:
            slope = abs(float(dem.dminus(X))) if X > 0 else abs(float(dem.dplus(0.0)))
            res.check("equal.slope", slope <= EQUAL_TOL, inst, f"|p'(X)|={slope}")
            res.check("equal.gamma", abs(g - 1.0) <= EQUAL_TOL, inst, f"gamma={g}")
    try:
        mono = solve_monopoly(inst)
    except CournotError as exc:
        res.check("monopoly.solved", False, inst, str(exc))
        return
    res.check("monopoly.residual", mono.verified, inst, f"residual {mono.residual:.3e}")
    if eff.prices_differ(inst, mono.total, opt.total):
        g = welfare(inst, mono.x) / w_opt
        _, _, cbar = eff.curvature(inst, mono.x, opt)
        bm = eff.bound_mono(cbar)
        res.margin("gamma-mono", g - bm)
        res.check("bound.mono", g >= bm - SLACK, inst, f"gamma={g} < 3/(3+cbar)={bm}")
        res.check("bound.mono_dominates", bm >= eff.bound_f(cbar) - SLACK, inst, f"cbar={cbar}")
    else:
        res.skip("bound.mono (equal prices)")


def _check_transforms(inst, x, g, opt, res: SuiteResult) -> None:
    if optimality_residual(inst, x) <= 1e-8:
        res.skip("transform (allocation optimal)")
        return
    lin = eff.linearize_costs(inst, x)
    g_lin = eff.gamma(lin, x)
    res.margin("gamma-gamma_linearized", g - g_lin)
    res.check("transform.linearize", 0 < g_lin <= g + SLACK, inst, f"gamma_lin={g_lin} > gamma={g}")
    p0 = eff.p0_transform(inst, x, opt)
    g0 = eff.gamma(p0, x)
    res.margin("gamma-gamma_p0", g - g0)
    res.check("transform.p0", g0 <= g + SLACK, inst, f"gamma0={g0} > gamma={g}")


def _check_nonconvex(inst, opt, res: SuiteResult) -> None:
    # Bounds need convex demand; only report that they are flagged inapplicable.
    res.check("nonconvex.inapplicable",
              isinstance(eff.bound_mu(inst), eff.Inapplicable)
              and isinstance(eff.bound_st(inst), eff.Inapplicable), inst, "bound reported for concave demand")
    res.skip("bounds (nonconvex demand)")


def run_random(seed: int = 42, count: int = 500, families: Sequence[str] = CONVEX_FAMILIES,
               n_range: Sequence[int] = (1, 6),
               progress: Optional[Callable[[int], None]] = None) -> SuiteResult:
    res = SuiteResult(f"random(seed={seed}, count={count})")
    for i, (family, inst) in enumerate(random_instances(seed, count, families, n_range)):
        res.instances += 1
        try:
            check_instance(inst, res, family)
        except CournotError as exc:
            res.check("solver.error", False, inst, f"{type(exc).__name__}: {exc}")
        if progress:
            progress(i)
    return res


# --- worked-examples regression suite --------------------------------------

def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(b))


def check_entry(entry: CatalogEntry, res: SuiteResult) -> None:
    inst = entry.instance
    name = entry.name
    opt = solve_social_optimum(inst)
    res.check(f"{name}.optimum", opt.residual <= 1e-10, inst, f"residual {opt.residual:.3e}")
    if "optimum" in entry.allocations:
        want = entry.allocation("optimum")
        res.check(f"{name}.optimum_welfare", _close(welfare(inst, opt.x), welfare(inst, want), 1e-9),
                  inst, f"welfare {welfare(inst, opt.x)} vs {welfare(inst, want)}")
    for role in ("equilibrium",):
        if role in entry.allocations:
            x = entry.allocation(role)
            ok, deficit = verify_equilibrium(inst, x)
            res.check(f"{name}.{role}.verified", ok, inst, f"deficit {deficit:.3e}")
    for role, want in entry.efficiency.items():
        if role == "monopoly":
            x = solve_monopoly(inst).x
        elif role == "candidate":
            x = cournot_candidates(inst)[0].x
        else:
            x = entry.allocation(role)
        g = eff.gamma(inst, x, opt)
        res.check(f"{name}.{role}.gamma", _close(g, float(want), 1e-9), inst, f"gamma {g} vs {float(want)}")
    if "candidate" in entry.allocations and inst.demand.is_convex():
        want = entry.allocation("candidate")
        xs = [c.x for c in cournot_candidates(inst)]
        res.check(f"{name}.candidate", any(np.max(np.abs(x - want)) <= 1e-8 for x in xs), inst,
                  f"candidates {[x.tolist() for x in xs]}")
    if "s" in entry.values:
        s, t = eff.compute_s_t(inst)
        res.check(f"{name}.s", _close(s, entry.values["s"], 1e-9), inst, f"s={s}")
        if "t" in entry.values:
            res.check(f"{name}.t", _close(t, entry.values["t"], 1e-9), inst, f"t={t}")
        if "bound_st" in entry.values:
            b = eff.bound_st(inst)
            res.check(f"{name}.bound_st", not isinstance(b, eff.Inapplicable)
                      and _close(b, entry.values["bound_st"], 1e-9), inst, f"bound_st={b}")
    if not inst.demand.is_convex():
        res.check(f"{name}.inapplicable", isinstance(eff.bound_mu(inst), eff.Inapplicable), inst,
                  "bound_mu applied to nonconvex demand")
    if "linearized_candidates" in entry.allocations:
        x = entry.allocation("equilibrium")
        lin = eff.linearize_costs(inst, x)
        xs = sorted(c.total for c in cournot_candidates(lin))
        wanted = [float(v) for v in entry.allocations["linearized_candidates"]]
        res.check(f"{name}.linearized_candidates",
                  all(any(abs(a - w) <= 1e-8 for a in xs) for w in wanted), inst, f"candidates {xs}")
        ok, _ = verify_equilibrium(lin, x)
        res.check(f"{name}.linearized_not_equilibrium", not ok, inst, "x still verifies")


def run_worked_examples(entries: Optional[Sequence[CatalogEntry]] = None) -> SuiteResult:
    res = SuiteResult("paper-examples")
    for entry in entries or default_entries():
        res.instances += 1
        try:
            check_entry(entry, res)
        except CournotError as exc:
            res.check(f"{entry.name}.error", False, entry.instance, f"{type(exc).__name__}: {exc}")
    return res
