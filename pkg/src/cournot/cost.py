"""Convex production costs C(x) = coef * x**exponent with exponent >= 1.

Linear and quadratic costs are the exponent-1 and exponent-2 special cases.
The array helpers at the bottom evaluate a whole bank of suppliers at once
and are what the solvers use.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from ._numeric import bisect_boundary_vec
from .errors import DomainError, InstanceError, UnboundedShareError

SHARE_XTOL = 1e-12


@dataclass(frozen=True)
class CostFunction:
    kind: str
    coef: float
    exponent: float

    def __post_init__(self):
        if self.kind not in ("linear", "quadratic", "power"):
            raise InstanceError(f"unknown cost kind {self.kind!r}")
        if self.kind == "linear":
            if self.exponent != 1 or self.coef < 0:
                raise InstanceError("linear cost needs slope >= 0")
        elif self.kind == "quadratic":
            if self.exponent != 2 or self.coef <= 0:
                raise InstanceError("quadratic cost needs coef > 0")
        elif self.coef <= 0 or self.exponent < 1:
            raise InstanceError("power cost needs coef > 0 and exponent >= 1")

    @classmethod
    def linear(cls, slope: float) -> "CostFunction":
        return cls("linear", float(slope), 1.0)

    @classmethod
    def quadratic(cls, coef: float) -> "CostFunction":
        return cls("quadratic", float(coef), 2.0)

    @classmethod
    def power(cls, coef: float, exponent: float) -> "CostFunction":
        return cls("power", float(coef), float(exponent))

    @property
    def slope(self) -> float:
        """Marginal cost at zero output, C'(0)."""
        return self.coef if self.exponent == 1 else 0.0

    def cost(self, x):
        arr = _nonneg(x)
        return _scalar(cost_values(self._c, self._e, arr[None, ...])[0], x)

    def marginal(self, x):
        arr = _nonneg(x)
        return _scalar(marginal_values(self._c, self._e, arr[None, ...])[0], x)

    def share_at(self, y, m):
        """Quantity x with C'(x) + m x = y, or 0 when C'(0) >= y."""
        y_arr = np.asarray(y, dtype=float)
        m_arr = np.asarray(m, dtype=float)
        if np.any(m_arr < 0):
            raise DomainError("demand-slope magnitude must be nonnegative")
        out = share_values(self._c, self._e, y_arr[None, ...], m_arr[None, ...])[0]
        if np.any(np.isinf(out)):
            raise UnboundedShareError(
                f"flat demand at price {y} above constant marginal cost {self.coef}")
        return _scalar(out, y if np.ndim(y) >= np.ndim(m) else m)

    def supply_at(self, y, R: float):
        """Largest x <= R with C'(x) <= y (0 if even C'(0) > y)."""
        y_arr = np.asarray(y, dtype=float)
        return _scalar(supply_hi(self._c, self._e, y_arr[None, ...], R)[0], y)

    @property
    def _c(self) -> np.ndarray:
        return np.array([self.coef])

    @property
    def _e(self) -> np.ndarray:
        return np.array([self.exponent])

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "linear":
            return {"kind": "linear", "slope": self.coef}
        if self.kind == "quadratic":
            return {"kind": "quadratic", "coef": self.coef}
        return {"kind": "power", "coef": self.coef, "exponent": self.exponent}


def cost_from_dict(data: dict[str, Any]) -> CostFunction:
    try:
        kind = data["kind"]
        if kind == "linear":
            return CostFunction.linear(data["slope"])
        if kind == "quadratic":
            return CostFunction.quadratic(data["coef"])
        if kind == "power":
            return CostFunction.power(data["coef"], data["exponent"])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InstanceError):
            raise
        raise InstanceError(f"bad cost descriptor {data!r}: {exc}") from None
    raise InstanceError(f"unknown cost kind in {data!r}")


def _nonneg(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError(f"quantity must be nonnegative, got {x!r}")
    return arr


def _scalar(arr: np.ndarray, like):
    return float(arr) if np.ndim(like) == 0 else arr


def bank(costs: Sequence[CostFunction]) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient and exponent arrays for a list of cost functions."""
    return (np.array([c.coef for c in costs], dtype=float),
            np.array([c.exponent for c in costs], dtype=float))


def _col(a: np.ndarray, ndim: int) -> np.ndarray:
    return a.reshape(a.shape + (1,) * (ndim - 1))


# Array helpers. ``coef`` and ``expo`` have shape (N,); value arguments have
# shape (N, ...) or broadcast against it.

def cost_values(coef, expo, x):
    x = np.asarray(x, dtype=float)
    nd = max(x.ndim, 1)
    return _col(coef, nd) * x ** _col(expo, nd)


def marginal_values(coef, expo, x):
    x = np.asarray(x, dtype=float)
    nd = max(x.ndim, 1)
    c, e = _col(coef, nd), _col(expo, nd)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = c * e * x ** (e - 1.0)
    return np.where(e == 1.0, c * np.ones_like(x), v)


def marginal_at_zero(coef, expo):
    return np.where(expo == 1.0, coef, 0.0)


def _inverse_marginal(c, e, y):
    """x with C'(x) = y for strictly convex power costs (y >= 0)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(e > 1.0, (np.maximum(y, 0.0) / (c * e)) ** (1.0 / np.where(e > 1.0, e - 1.0, 1.0)), 0.0)


def supply_hi(coef, expo, y, R):
    """sup{x <= R : C'(x) <= y}, elementwise."""
    y = np.asarray(y, dtype=float)
    nd = max(y.ndim, 1)
    c, e = _col(coef, nd), _col(expo, nd)
    lin = np.where(c <= y, R, 0.0)
    return np.where(e == 1.0, lin, np.minimum(_inverse_marginal(c, e, y), R))


def supply_lo(coef, expo, y, R):
    """inf{x : C'(x) >= y}, capped at R."""
    y = np.asarray(y, dtype=float)
    nd = max(y.ndim, 1)
    c, e = _col(coef, nd), _col(expo, nd)
    lin = np.where(c >= y, 0.0, R)
    return np.where(e == 1.0, lin, np.minimum(_inverse_marginal(c, e, y), R))


def share_values(coef, expo, y, m):
    """Solve C'(x) + m x = y for x >= 0 elementwise; ``inf`` when unbounded."""
    y = np.asarray(y, dtype=float)
    m = np.asarray(m, dtype=float)
    y, m = np.broadcast_arrays(y, m)
    nd = max(y.ndim, 1)
    c, e = _col(coef, nd), _col(expo, nd)
    y = np.broadcast_to(y, np.broadcast_shapes(y.shape, c.shape))
    m = np.broadcast_to(m, y.shape)
    c = np.broadcast_to(c, y.shape)
    e = np.broadcast_to(e, y.shape)
    active = marginal_at_zero(c, e) < y
    out = np.zeros(y.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        lin = np.where(m > 0, (y - c) / m, np.inf)
        quad = y / (2.0 * c + m)
    out = np.where(active & (e == 1.0), lin, out)
    out = np.where(active & (e == 2.0), quad, out)
    general = active & (e != 1.0) & (e != 2.0)
    if np.any(general):
        cg, eg, yg, mg = c[general], e[general], y[general], m[general]
        hi = _inverse_marginal(cg, eg, yg)
        with np.errstate(divide="ignore"):
            hi = np.minimum(hi, np.where(mg > 0, yg / mg, np.inf))
        lo = np.zeros_like(hi)

        def over(x):
            return marginal_values_flat(cg, eg, x) + mg * x >= yg

        lo, hi = bisect_boundary_vec(over, lo, hi, iters=200)
        out = out.copy()
        out[general] = 0.5 * (lo + hi)
    return out


def marginal_values_flat(c, e, x):
    with np.errstate(divide="ignore", invalid="ignore"):
        v = c * e * x ** (e - 1.0)
    return np.where(e == 1.0, c, v)
