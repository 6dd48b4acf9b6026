"""Scalar root bracketing and bounded maximization helpers."""

from __future__ import annotations

from typing import Callable, Iterable, Optional

import numpy as np
from scipy.optimize import minimize_scalar


def bisect_boundary(pred: Callable[[float], bool], lo: float, hi: float,
                    xtol: float = 1e-12, max_iter: int = 400) -> tuple[float, float]:
    """Shrink ``[lo, hi]`` around the switch point of a monotone predicate.

    ``pred`` must be false at ``lo`` and true at ``hi``; the returned bracket
    keeps that property and has width at most ``xtol`` (or float resolution).
    """
    for _ in range(max_iter):
        if hi - lo <= xtol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


def bisect_boundary_vec(pred: Callable[[np.ndarray], np.ndarray], lo: np.ndarray,
                        hi: np.ndarray, iters: int = 120) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise :func:`bisect_boundary` over arrays of brackets."""
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ok = pred(mid)
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    return lo, hi


def maximize_on_interval(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                         grid: int = 10_001,
                         slope: Optional[Callable[[float], float]] = None,
                         extra: Iterable[float] = (),
                         n_refine: int = 6) -> tuple[float, float]:
    """Global maximum of a possibly nonconcave function on ``[lo, hi]``.

    A dense grid locates the basins; the best few local maxima are refined
    by bisection on ``slope`` (when it changes sign across the cell) and by
    bounded golden-section/Brent search. Returns ``(argmax, max)``.
    """
    xs = np.linspace(lo, hi, grid)
    extra = [e for e in extra if lo <= e <= hi]
    if extra:
        xs = np.unique(np.concatenate([xs, np.asarray(extra, dtype=float)]))
    ys = np.asarray(f(xs), dtype=float)
    ys = np.where(np.isnan(ys), -np.inf, ys)

    left = np.concatenate([[-np.inf], ys[:-1]])
    right = np.concatenate([ys[1:], [-np.inf]])
    peaks = np.flatnonzero((ys >= left) & (ys >= right))
    peaks = peaks[np.argsort(-ys[peaks], kind="stable")][:n_refine]

    best_i = int(np.argmax(ys))
    found = [(float(ys[best_i]), False, float(xs[best_i]))]

    def f1(x: float) -> float:
        v = float(np.asarray(f(np.array([x])), dtype=float)[0])
        return -np.inf if np.isnan(v) else v

    for i in peaks:
        a = float(xs[max(i - 1, 0)])
        b = float(xs[min(i + 1, len(xs) - 1)])
        if b <= a:
            continue
        res = minimize_scalar(lambda x: -f1(x), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-13, "maxiter": 500})
        found.append((f1(float(res.x)), False, float(res.x)))
        if slope is not None and slope(a) > 0 > slope(b):
            l, h = bisect_boundary(lambda x: slope(x) <= 0, a, b, xtol=1e-14)
            found.extend((f1(x), True, x) for x in (l, h))

    # A slope sign change pins a peak far tighter than Brent or the grid can
    # on a flat top, so it wins any comparison decided by rounding noise.
    top = max(y for y, _, _ in found)
    noise = 1e-12 * max(1.0, abs(top))
    precise = [(y, x) for y, p, x in found if p and y >= top - noise]
    if precise:
        y, x = max(precise)
        return x, y
    y, _, x = max(found, key=lambda t: t[0])
    return x, y
