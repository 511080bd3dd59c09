"""Grid scan plus golden-section refinement for one-dimensional extrema."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(fn: Callable[[float], float], lo: float, hi: float,
                   maximize: bool = False, tol: float = 1e-10) -> tuple[float, float]:
    """Golden-section search on ``[lo, hi]``; returns ``(argbest, best)``.

    Assumes ``fn`` is unimodal on the bracket.  The end points are also
    compared so a monotone function reports its boundary extremum.
    """
    sign = -1.0 if maximize else 1.0

    def g(x):
        return sign * fn(x)

    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    gc, gd = g(c), g(d)
    while b - a > tol:
        if gc < gd:
            b, d, gd = d, c, gc
            c = b - INV_PHI * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + INV_PHI * (b - a)
            gd = g(d)
    candidates = [(g(lo), lo), (g(hi), hi), (gc, c), (gd, d)]
    best_val, best_x = min(candidates)
    return best_x, sign * best_val


def scan_extremum(fn: Callable, lo: float, hi: float, points: int = 401,
                  maximize: bool = False, tol: float = 1e-10) -> tuple[float, float]:
    """Uniform scan of ``fn`` on ``[lo, hi]`` then refine the winning cell.

    ``fn`` must accept a numpy array.  Returns ``(argbest, best)``.
    """
    if lo == hi:
        return lo, float(fn(np.array([lo]))[0])
    xs = np.linspace(lo, hi, points)
    vals = np.asarray(fn(xs), dtype=float)
    i = int(np.argmax(vals) if maximize else np.argmin(vals))
    left, right = xs[max(i - 1, 0)], xs[min(i + 1, points - 1)]
    x, v = golden_section(lambda z: float(fn(np.array([z]))[0]), left, right,
                          maximize=maximize, tol=tol)
    grid_best = vals[i]
    if (maximize and grid_best > v) or (not maximize and grid_best < v):
        return float(xs[i]), float(grid_best)
    return x, v
