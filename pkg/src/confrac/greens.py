r"""Green's kernels for :math:`-D^\beta D^\alpha x = h` and their bounds.

Boundary conditions are of Sturm-Liouville type,

.. math::

    \gamma x(0) - \delta D^\alpha x(0) = 0 = \eta x(1) + \zeta D^\alpha x(1),

with :math:`d = \eta\delta + \gamma\zeta + \gamma\eta/\alpha > 0`.  The
conjugate (``x(0) = x(1) = 0``) and right-focal (``x(0) = D^\alpha x(1) = 0``)
kernels are the special cases ``(1, 0, 1, 0)`` and ``(1, 0, 0, 1)``.

All evaluation functions broadcast over numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import PreconditionError
from .frac_core import (
    DEFAULT_NODES,
    FracOrder,
    SampledFunction,
    _check_order,
    _evaluate,
    apply_fractional_operator,
    beta_rule,
)
from .scan import scan_extremum

FAMILIES = ("sturm_liouville", "conjugate", "right_focal")
_CANONICAL = {"conjugate": (1.0, 0.0, 1.0, 0.0), "right_focal": (1.0, 0.0, 0.0, 1.0)}

# diagonal values below this are treated as zero in ratio checks
DIAGONAL_FLOOR = 1e-14


@dataclass(frozen=True)
class SLParams:
    """Boundary coefficients ``(gamma, delta, eta, zeta)`` and order ``alpha``."""

    gamma: float
    delta: float
    eta: float
    zeta: float
    alpha: float
    d: float = field(init=False)

    def __post_init__(self):
        for name in ("gamma", "delta", "eta", "zeta"):
            value = float(getattr(self, name))
            if not value >= 0 or not math.isfinite(value):
                raise PreconditionError(f"{name} must be a finite nonnegative real, got {value!r}")
            object.__setattr__(self, name, value)
        alpha = _check_order(self.alpha, "alpha")
        object.__setattr__(self, "alpha", alpha)
        d = self.eta * self.delta + self.gamma * self.zeta + self.gamma * self.eta / alpha
        if not d > 0:
            raise PreconditionError(f"boundary coefficients give d = {d!r}; need d > 0")
        object.__setattr__(self, "d", d)

    @classmethod
    def conjugate(cls, alpha: float) -> "SLParams":
        return cls(*_CANONICAL["conjugate"], alpha)

    @classmethod
    def right_focal(cls, alpha: float) -> "SLParams":
        return cls(*_CANONICAL["right_focal"], alpha)

    @property
    def coefficients(self) -> tuple[float, float, float, float]:
        return (self.gamma, self.delta, self.eta, self.zeta)


def _left_factor(p: SLParams, v):
    # delta + gamma v^alpha / alpha
    return p.delta + p.gamma * np.power(v, p.alpha) / p.alpha


def _right_factor(p: SLParams, v):
    # zeta + eta (1 - v^alpha) / alpha
    return p.zeta + p.eta * (1.0 - np.power(v, p.alpha)) / p.alpha


def _sl_kernel(p: SLParams, t, s):
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    lower = s <= t
    lo = np.where(lower, s, t)
    hi = np.where(lower, t, s)
    return _left_factor(p, lo) * _right_factor(p, hi) / p.d


def _conjugate_kernel(alpha, t, s):
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    lower = s <= t
    return np.where(lower, np.power(s, alpha) * (1 - np.power(t, alpha)),
                    np.power(t, alpha) * (1 - np.power(s, alpha))) / alpha


def _right_focal_kernel(alpha, t, s):
    return np.power(np.minimum(t, s), alpha) / alpha


@dataclass(frozen=True)
class GreenKernel:
    """An evaluable kernel ``G(t, s)`` on the unit square.

    For the ``conjugate`` and ``right_focal`` families the closed forms are
    checked against the general formula on a 33x33 grid when the kernel is
    built (skipped under ``python -O``).
    """

    params: SLParams
    family: str = "sturm_liouville"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise PreconditionError(f"unknown kernel family {self.family!r}")
        if self.family != "sturm_liouville":
            if self.params.coefficients != _CANONICAL[self.family]:
                raise PreconditionError(
                    f"{self.family} kernel needs (gamma, delta, eta, zeta) = "
                    f"{_CANONICAL[self.family]}, got {self.params.coefficients}")
            if __debug__:
                g = np.linspace(0.0, 1.0, 33)
                tt, ss = np.meshgrid(g, g, indexing="ij")
                gap = np.max(np.abs(self(tt, ss) - _sl_kernel(self.params, tt, ss)))
                assert gap <= 1e-13 * max(1.0, 1.0 / self.params.alpha), gap

    @classmethod
    def build(cls, family: str, alpha: float, coefficients=None) -> "GreenKernel":
        """Kernel for ``family``; ``coefficients`` only for ``sturm_liouville``."""
        if family == "sturm_liouville":
            if coefficients is None:
                raise PreconditionError("sturm_liouville needs (gamma, delta, eta, zeta)")
            return cls(SLParams(*coefficients, alpha), family)
        if family not in _CANONICAL:
            raise PreconditionError(f"unknown kernel family {family!r}")
        return cls(SLParams(*_CANONICAL[family], alpha), family)

    @property
    def alpha(self) -> float:
        return self.params.alpha

    def __call__(self, t, s):
        return green_eval(self, t, s)

    def diagonal(self, s):
        """``G(s, s)``, the maximum of ``G(., s)``."""
        return green_eval(self, s, s)


def green_eval(k: GreenKernel, t, s):
    """Evaluate ``G(t, s)``.

    At ``t == s`` the ``s <= t`` branch is used; the branches agree there.
    Scalars in give a float out; arrays broadcast.
    """
    t_arr, s_arr = np.asarray(t, dtype=float), np.asarray(s, dtype=float)
    if np.any((t_arr < 0) | (t_arr > 1) | (s_arr < 0) | (s_arr > 1)):
        raise PreconditionError("G is defined on [0, 1] x [0, 1]")
    if k.family == "conjugate":
        out = _conjugate_kernel(k.alpha, t_arr, s_arr)
    elif k.family == "right_focal":
        out = _right_focal_kernel(k.alpha, t_arr, s_arr)
    else:
        out = _sl_kernel(k.params, t_arr, s_arr)
    return float(out) if np.ndim(out) == 0 else out


def green_dalpha(k: GreenKernel, t, s):
    r"""Conformable derivative :math:`D^\alpha_t G(t, s)` in the first argument.

    Piecewise constant in ``t``: ``-(eta/d)(delta + gamma s^a/a)`` for
    ``s < t`` and ``(gamma/d)(zeta + eta(1 - s^a)/a)`` for ``t < s``.  At
    ``t == s`` the ``s <= t`` side is returned, matching :func:`green_eval`.
    """
    p = k.params
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    out = np.where(s <= t, -p.eta * _left_factor(p, s), p.gamma * _right_factor(p, s)) / p.d
    return float(out) if out.ndim == 0 else out


def diagonal_ratio(params: SLParams, t, s):
    """Closed-form ``G(t, s) / G(s, s)`` from the two kernel branches."""
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        below = _right_factor(params, t) / _right_factor(params, s)
        above = _left_factor(params, t) / _left_factor(params, s)
    return np.where(s <= t, below, above)


def g1(params: SLParams, t):
    """Lower envelope ``g1(t)`` with ``g1(t) G(s,s) <= G(t,s)`` on the square."""
    a = params.alpha
    ta = np.power(np.asarray(t, dtype=float), a)
    first = (a * params.delta + params.gamma * ta) / (a * params.delta + params.gamma)
    second = (a * params.zeta + params.eta * (1 - ta)) / (a * params.zeta + params.eta)
    out = np.minimum(first, second)
    return float(out) if out.ndim == 0 else out


def _check_n(n) -> int:
    if int(n) != n or n < 3:
        raise PreconditionError(f"n must be an integer >= 3, got {n!r}")
    return int(n)


def r_cross(params: SLParams, n: int = 4) -> float:
    """Value of ``s`` where the strip minimum switches end points.

    For ``s <= r`` the minimum of ``G(., s)`` over ``[1/n, 1-1/n]`` sits at
    ``t = 1 - 1/n``; for ``s >= r`` it sits at ``t = 1/n``.
    """
    n = _check_n(n)
    a, g, dl, e, z = params.alpha, params.gamma, params.delta, params.eta, params.zeta
    if g == 0:
        return 1.0 - 1.0 / n
    num = a * g * z + g * e + a * dl * e * (n - 1) ** a
    den = (a * dl * e + a * g * z + g * e) * n ** a - g * e * (n - 1) ** a + g * e
    return (num / den) ** (1.0 / a)


def g2(params: SLParams, n: int, s):
    """Sharper strip envelope ``g2(s)``, split at :func:`r_cross`."""
    n = _check_n(n)
    a = params.alpha
    s = np.asarray(s, dtype=float)
    r = r_cross(params, n)
    sa = np.power(s, a)
    with np.errstate(divide="ignore", invalid="ignore"):
        upper = ((a * params.zeta + params.eta * (1 - (1 - 1 / n) ** a))
                 / (a * params.zeta + params.eta * (1 - sa)))
        lower = (a * params.delta + params.gamma * (1 / n) ** a) / (a * params.delta + params.gamma * sa)
    out = np.where(s <= r, upper, lower)
    return float(out) if out.ndim == 0 else out


def g3(params: SLParams, n: int = 4) -> float:
    """Constant strip envelope: ``min_t G(t,s) >= g3 G(s,s)`` for ``t`` in the strip."""
    n = _check_n(n)
    a = params.alpha
    first = (a * params.zeta + params.eta * (1 - (1 - 1 / n) ** a)) / (a * params.zeta + params.eta)
    second = (a * params.delta + params.gamma * (1 / n) ** a) / (a * params.delta + params.gamma)
    return min(first, second)


def cone_ratio_constant(alpha: float) -> float:
    """``1 / (1 - (3/4)**alpha)``: bound on ``max_t G / min_{[1/4,3/4]} G``."""
    alpha = _check_order(alpha, "alpha")
    return 1.0 / (1.0 - 0.75 ** alpha)


@dataclass(frozen=True)
class StripBounds:
    n: int
    g3: float
    r_cross: float
    alpha: float

    def __post_init__(self):
        n = _check_n(self.n)
        # r_cross == 1/n only through rounding at alpha -> tiny; keep a hair of slack
        if not (1.0 / n - 1e-15 < self.r_cross <= 1.0 - 1.0 / n + 1e-15):
            raise PreconditionError(f"r_cross {self.r_cross!r} outside (1/n, 1-1/n]")
        if not (0.0 < self.g3 <= 1.0):
            raise PreconditionError(f"g3 {self.g3!r} outside (0, 1]")

    @classmethod
    def of(cls, params: SLParams, n: int = 4) -> "StripBounds":
        return cls(n, g3(params, n), r_cross(params, n), params.alpha)


def strip_min(k: GreenKernel, s: float, n: int = 4, points: int = 401) -> tuple[float, float]:
    """``(argmin, min)`` of ``G(., s)`` over ``[1/n, 1 - 1/n]`` by scan + refinement."""
    n = _check_n(n)
    return scan_extremum(lambda t: green_eval(k, t, np.full_like(t, s)),
                         1.0 / n, 1.0 - 1.0 / n, points)


def column_max(k: GreenKernel, s: float, points: int = 401) -> tuple[float, float]:
    """``(argmax, max)`` of ``G(., s)`` over ``[0, 1]``."""
    return scan_extremum(lambda t: green_eval(k, t, np.full_like(t, s)),
                         0.0, 1.0, points, maximize=True)


def graded_grid(beta: float, points: int) -> np.ndarray:
    """Nodes ``t_i = u_i**(1/beta)`` for ``points`` uniform ``u_i`` on ``[0, 1]``."""
    beta = _check_order(beta, "beta")
    if points < 2:
        raise PreconditionError("need at least 2 grid points")
    return np.linspace(0.0, 1.0, int(points)) ** (1.0 / beta)


def split_rule(beta: float, t: float, n: int = DEFAULT_NODES, panels: int = 8):
    """Quadrature rule on ``[0, 1]`` for the weight ``s**(beta-1)`` split at ``t``.

    Each side of ``t`` gets ``panels`` equal panels in ``u = s**beta`` so no
    panel straddles the kernel kink at ``s = t``.
    """
    ut = t ** beta
    parts = []
    if ut > 0:
        parts.append(np.linspace(0.0, ut, panels + 1))
    if ut < 1:
        parts.append(np.linspace(ut, 1.0, panels + 1))
    nodes, weights = zip(*(beta_rule(beta, b, n) for b in parts))
    return np.concatenate(nodes), np.concatenate(weights)


@dataclass(frozen=True, eq=False)
class GreenIdentityReport:
    """Outcome of :func:`verify_green_identity`."""

    solution: SampledFunction
    interior_residual: float
    boundary_residuals: tuple[float, float]
    interior: tuple[float, float]


def verify_green_identity(k: GreenKernel, order: FracOrder, h: Callable, grid: int = 513,
                          interior: tuple[float, float] = (0.02, 0.98),
                          n: int = DEFAULT_NODES, panels: int = 8,
                          grading: float = 2.0) -> GreenIdentityReport:
    r"""Check that ``x = \int G(., s) h(s) d_beta s`` solves the boundary problem.

    ``x`` is formed by quadrature at nodes ``t = u**grading`` (uniform ``u``),
    ``-D^beta D^alpha`` is applied by finite differences and compared with
    ``h`` on nodes inside ``interior``.  The boundary residuals
    ``gamma x(0) - delta D^a x(0)`` and ``eta x(1) + zeta D^a x(1)`` use the
    kernel's own conformable derivative under the integral.
    """
    if not math.isclose(order.alpha, k.alpha, rel_tol=0, abs_tol=1e-15):
        raise PreconditionError("kernel alpha and operator alpha differ")
    beta = order.beta
    if grid < 5:
        raise PreconditionError("need at least 5 grid points")
    t = np.linspace(0.0, 1.0, int(grid)) ** grading
    x = np.empty_like(t)
    flux = np.empty(2)
    for i, ti in enumerate(t):
        s, w = split_rule(beta, ti, n, panels)
        hs = _evaluate(h, s)
        x[i] = np.dot(w, green_eval(k, np.full_like(s, ti), s) * hs)
        if i in (0, t.size - 1):
            flux[0 if i == 0 else 1] = np.dot(w, green_dalpha(k, np.full_like(s, ti), s) * hs)
    p = k.params
    bc0 = p.gamma * x[0] - p.delta * flux[0]
    bc1 = p.eta * x[-1] + p.zeta * flux[1]
    lhs = apply_fractional_operator(SampledFunction(t, x, (0.0, 1.0)), order)
    mask = (t >= interior[0]) & (t <= interior[1])
    resid = np.abs(lhs.values[mask] - _evaluate(h, t[mask]))
    return GreenIdentityReport(SampledFunction(t, x, (0.0, 1.0)), float(resid.max(initial=0.0)),
                               (float(bc0), float(bc1)), interior)


def bound_margins(k: GreenKernel, n: int = 4, points: int = 401) -> dict:
    """Smallest slack of each kernel bound over a ``points x points`` scan.

    Keys: ``upper`` (``G(s,s) - G(t,s)``), ``g1`` (``G(t,s) - g1(t) G(s,s)``),
    ``g2`` and ``g3`` (strip minimum minus ``g2(s) G(s,s)`` / ``g3 G(s,s)``).
    Negative values are violations.
    """
    n = _check_n(n)
    p = k.params
    grid = np.linspace(0.0, 1.0, points)
    tt, ss = np.meshgrid(grid, grid, indexing="ij")
    G = green_eval(k, tt, ss)
    diag = green_eval(k, grid, grid)
    strip_t = np.linspace(1.0 / n, 1.0 - 1.0 / n, points)
    strip = green_eval(k, strip_t[:, None], grid[None, :]).min(axis=0)
    return {
        "upper": float(np.min(diag[None, :] - G)),
        "g1": float(np.min(G - g1(p, tt) * diag[None, :])),
        "g2": float(np.min(strip - g2(p, n, grid) * diag)),
        "g3": float(np.min(strip - g3(p, n) * diag)),
    }
