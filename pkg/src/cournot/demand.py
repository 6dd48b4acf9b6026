"""Inverse demand curves p(q) with exact one-sided slopes and surplus integrals.

Every family accepts scalars or numpy arrays. Scalars come back as floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, ClassVar, Sequence

import numpy as np

from .errors import DomainError, InstanceError

SLOPE_TOL = 1e-12


def _prep(q, *, strict: bool = False) -> tuple[np.ndarray, bool]:
    arr = np.asarray(q, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("quantity is NaN")
    if strict:
        if np.any(arr <= 0):
            raise DomainError(f"left derivative needs q > 0, got {q!r}")
    elif np.any(arr < 0):
        raise DomainError(f"quantity must be nonnegative, got {q!r}")
    return arr, arr.ndim == 0


def _out(arr: np.ndarray, scalar: bool):
    return float(arr) if scalar else arr


class InverseDemand:
    """Nonincreasing, nonnegative price curve on [0, inf)."""

    family: ClassVar[str] = ""

    # Subclasses implement the array versions below.
    def _p(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _dm(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _dp(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _F(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def q_max(self) -> float:
        """Smallest quantity at which the price reaches zero (``inf`` if never)."""
        raise NotImplementedError

    @property
    def kinks(self) -> tuple[float, ...]:
        """Quantities where the one-sided slopes differ."""
        q = self.q_max
        return (q,) if math.isfinite(q) else ()

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError

    def price(self, q):
        """p(q). The log family returns ``inf`` at q = 0."""
        arr, scalar = _prep(q)
        return _out(self._p(arr), scalar)

    __call__ = price

    def dminus(self, q):
        """Left derivative of p at q > 0."""
        arr, scalar = _prep(q, strict=True)
        return _out(self._dm(arr), scalar)

    def dplus(self, q):
        """Right derivative of p at q >= 0 (``-inf`` where the slope blows up)."""
        arr, scalar = _prep(q)
        return _out(self._dp(arr), scalar)

    def integral(self, X):
        """Exact consumer-side area under the curve from 0 to X."""
        arr, scalar = _prep(X)
        return _out(self._F(arr), scalar)

    def second_derivative(self, q):
        """p''(q) away from kinks; zero on linear pieces."""
        arr, scalar = _prep(q)
        return _out(self._d2(arr), scalar)

    def _d2(self, q: np.ndarray) -> np.ndarray:
        return np.zeros_like(q)

    def is_convex(self) -> bool:
        """One-sided slopes nondecreasing in q (absolute tolerance 1e-12)."""
        return True

    def check_novshek(self, resolution: int = 2000, tol: float = 1e-12) -> bool:
        """Strategic-substitutes test p'(q) + q p''(q) <= 0 on [0, q_max)."""
        upper = self.q_max if math.isfinite(self.q_max) else max(self.kinks + (1.0,)) * 4
        q = np.linspace(0.0, upper, resolution + 2)[1:-1]
        lhs = self._dp(q) + q * self._d2(q)
        return bool(np.all(lhs <= tol))


@dataclass(frozen=True)
class AffineDemand(InverseDemand):
    """p(q) = max(b - a q, 0)."""

    a: float
    b: float
    family: ClassVar[str] = "affine"

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise InstanceError(f"affine demand needs a > 0 and b > 0, got a={self.a}, b={self.b}")

    @property
    def q_max(self) -> float:
        return self.b / self.a

    def _p(self, q):
        return np.maximum(self.b - self.a * q, 0.0)

    def _dm(self, q):
        return np.where(q <= self.q_max, -self.a, 0.0)

    def _dp(self, q):
        return np.where(q < self.q_max, -self.a, 0.0)

    def _F(self, q):
        x = np.minimum(q, self.q_max)
        return self.b * x - 0.5 * self.a * x * x

    def to_dict(self):
        return {"family": self.family, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class PiecewiseLinearDemand(InverseDemand):
    """Linear interpolation through ``points``, flat beyond the last one.

    A curve that should reach zero price must list its zero crossing.
    """

    points: tuple[tuple[float, float], ...]
    family: ClassVar[str] = "piecewise_linear"
    _q: np.ndarray = field(init=False, repr=False, compare=False)
    _pk: np.ndarray = field(init=False, repr=False, compare=False)
    _slopes: np.ndarray = field(init=False, repr=False, compare=False)
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = tuple((float(q), float(p)) for q, p in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise InstanceError("piecewise_linear demand needs at least two points")
        q = np.array([p[0] for p in pts])
        p = np.array([p[1] for p in pts])
        if q[0] != 0.0:
            raise InstanceError("first breakpoint must be at q = 0")
        if np.any(np.diff(q) <= 0):
            raise InstanceError("breakpoints must be strictly increasing in q")
        if np.any(p < 0):
            raise InstanceError("prices must be nonnegative")
        if p[0] <= 0:
            raise InstanceError("p(0) must be positive")
        slopes = np.diff(p) / np.diff(q)
        if np.any(slopes > 0):
            raise InstanceError("piecewise_linear demand must be nonincreasing")
        areas = 0.5 * (p[1:] + p[:-1]) * np.diff(q)
        object.__setattr__(self, "_q", q)
        object.__setattr__(self, "_pk", p)
        object.__setattr__(self, "_slopes", slopes)
        object.__setattr__(self, "_cum", np.concatenate([[0.0], np.cumsum(areas)]))

    @property
    def q_max(self) -> float:
        zero = np.flatnonzero(self._pk == 0.0)
        return float(self._q[zero[0]]) if zero.size else math.inf

    @property
    def kinks(self) -> tuple[float, ...]:
        all_slopes = np.append(self._slopes, 0.0)
        out = []
        for i in range(1, len(self._q)):
            if abs(all_slopes[i] - all_slopes[i - 1]) > 0:
                out.append(float(self._q[i]))
        return tuple(out)

    @property
    def breakpoints(self) -> tuple[tuple[float, float], ...]:
        """Breakpoints as floats."""
        return tuple(zip(self._q.tolist(), self._pk.tolist()))

    def _p(self, q):
        return np.interp(q, self._q, self._pk)

    def _slope_at(self, idx):
        tail = np.append(self._slopes, 0.0)
        return tail[np.clip(idx, 0, len(tail) - 1)]

    def _dm(self, q):
        return self._slope_at(np.searchsorted(self._q, q, side="left") - 1)

    def _dp(self, q):
        return self._slope_at(np.searchsorted(self._q, q, side="right") - 1)

    def _F(self, q):
        idx = np.clip(np.searchsorted(self._q, q, side="right") - 1, 0, len(self._q) - 1)
        base_q = self._q[idx]
        dq = q - base_q
        slope = self._slope_at(idx)
        return self._cum[idx] + self._pk[idx] * dq + 0.5 * slope * dq * dq

    def is_convex(self) -> bool:
        s = np.append(self._slopes, 0.0)
        return bool(np.all(np.diff(s) >= -SLOPE_TOL))

    def check_novshek(self, resolution: int = 2000, tol: float = 1e-12) -> bool:
        # p'' = 0 on every segment, so the condition reduces to slope <= 0.
        return bool(np.all(self._slopes <= tol))

    def to_dict(self):
        return {"family": self.family, "points": [list(p) for p in self.points]}


@dataclass(frozen=True)
class LogDemand(InverseDemand):
    """p(q) = max(0, alpha - beta log q); infinite at q = 0."""

    alpha: float
    beta: float
    family: ClassVar[str] = "log"

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise InstanceError("log demand needs alpha > 0 and beta > 0")

    @property
    def q_max(self) -> float:
        return math.exp(self.alpha / self.beta)

    def _p(self, q):
        with np.errstate(divide="ignore"):
            v = self.alpha - self.beta * np.log(q)
        return np.maximum(v, 0.0)

    def _dm(self, q):
        return np.where(q <= self.q_max, -self.beta / q, 0.0)

    def _dp(self, q):
        with np.errstate(divide="ignore"):
            s = -self.beta / q
        return np.where(q < self.q_max, s, 0.0)

    def _d2(self, q):
        with np.errstate(divide="ignore"):
            return np.where(q < self.q_max, self.beta / (q * q), 0.0)

    def _F(self, q):
        x = np.minimum(q, self.q_max)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = self.alpha * x - self.beta * (x * np.log(x) - x)
        return np.where(x > 0, v, 0.0)

    def check_novshek(self, resolution: int = 2000, tol: float = 1e-12) -> bool:
        # p' + q p'' = -beta/q + beta/q = 0 identically.
        return True

    def to_dict(self):
        return {"family": self.family, "alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class PowerDemand(InverseDemand):
    """p(q) = max(alpha - beta q^delta, 0) with 0 < delta <= 1."""

    alpha: float
    beta: float
    delta: float
    family: ClassVar[str] = "power"

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0 and 0 < self.delta <= 1):
            raise InstanceError("power demand needs alpha > 0, beta > 0, 0 < delta <= 1")

    @property
    def q_max(self) -> float:
        return (self.alpha / self.beta) ** (1.0 / self.delta)

    def _p(self, q):
        return np.maximum(self.alpha - self.beta * q ** self.delta, 0.0)

    def _slope(self, q):
        with np.errstate(divide="ignore"):
            return -self.beta * self.delta * q ** (self.delta - 1.0)

    def _dm(self, q):
        return np.where(q <= self.q_max, self._slope(q), 0.0)

    def _dp(self, q):
        return np.where(q < self.q_max, self._slope(q), 0.0)

    def _d2(self, q):
        d = self.delta
        with np.errstate(divide="ignore", invalid="ignore"):
            v = -self.beta * d * (d - 1.0) * q ** (d - 2.0)
        return np.where((q < self.q_max) & (q > 0), v, 0.0)

    def _F(self, q):
        x = np.minimum(q, self.q_max)
        d = self.delta
        return self.alpha * x - self.beta * x ** (d + 1.0) / (d + 1.0)

    def check_novshek(self, resolution: int = 2000, tol: float = 1e-12) -> bool:
        # p' + q p'' = -beta delta^2 q^(delta-1) <= 0.
        return True

    def to_dict(self):
        return {"family": self.family, "alpha": self.alpha, "beta": self.beta,
                "delta": self.delta}


@dataclass(frozen=True)
class ShiftedPowerDemand(InverseDemand):
    """p(q) = alpha (Q - q)^beta on [0, Q], zero beyond; beta >= 1."""

    alpha: float
    beta: float
    Q: float
    family: ClassVar[str] = "shifted_power"

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta >= 1 and self.Q > 0):
            raise InstanceError("shifted_power demand needs alpha > 0, beta >= 1, Q > 0")

    @property
    def q_max(self) -> float:
        return self.Q

    def _p(self, q):
        return self.alpha * np.maximum(self.Q - q, 0.0) ** self.beta

    def _slope(self, q):
        return -self.alpha * self.beta * np.maximum(self.Q - q, 0.0) ** (self.beta - 1.0)

    def _dm(self, q):
        return np.where(q <= self.Q, self._slope(q), 0.0)

    def _dp(self, q):
        return np.where(q < self.Q, self._slope(q), 0.0)

    def _d2(self, q):
        b = self.beta
        if b == 1:
            return np.zeros_like(q)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = self.alpha * b * (b - 1.0) * np.maximum(self.Q - q, 0.0) ** (b - 2.0)
        return np.where(q < self.Q, v, 0.0)

    def _F(self, q):
        x = np.minimum(q, self.Q)
        b1 = self.beta + 1.0
        return self.alpha * (self.Q ** b1 - (self.Q - x) ** b1) / b1

    def to_dict(self):
        return {"family": self.family, "alpha": self.alpha, "beta": self.beta, "Q": self.Q}


_FAMILIES = {
    "affine": (AffineDemand, ("a", "b")),
    "piecewise_linear": (PiecewiseLinearDemand, ("points",)),
    "log": (LogDemand, ("alpha", "beta")),
    "power": (PowerDemand, ("alpha", "beta", "delta")),
    "shifted_power": (ShiftedPowerDemand, ("alpha", "beta", "Q")),
}


def demand_from_dict(data: dict[str, Any]) -> InverseDemand:
    """Build a demand curve from its JSON descriptor."""
    try:
        cls, keys = _FAMILIES[data["family"]]
    except (KeyError, TypeError):
        raise InstanceError(f"unknown or missing demand family in {data!r}") from None
    missing = [k for k in keys if k not in data]
    if missing:
        raise InstanceError(f"{data['family']} demand is missing {missing}")
    if cls is PiecewiseLinearDemand:
        pts = data["points"]
        if not all(isinstance(p, Sequence) and len(p) == 2 for p in pts):
            raise InstanceError("points must be [q, p] pairs")
        return cls(tuple((float(q), float(p)) for q, p in pts))
    try:
        return cls(**{k: float(data[k]) for k in keys})
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InstanceError):
            raise
        raise InstanceError(str(exc)) from None
