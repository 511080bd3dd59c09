r"""Conformable fractional derivative and the :math:`\beta`-fractional integral.

For a differentiable ``f`` the conformable derivative of order ``alpha`` is

.. math::

    D^\alpha f(t) = t^{1-\alpha} f'(t),

and the :math:`\beta`-fractional integral is
:math:`\int_a^b f(s)\, s^{\beta-1}\, ds`.  The integral is evaluated after the
change of variables :math:`u = s^\beta`, which turns the weight into the
constant :math:`1/\beta` and removes the endpoint singularity at ``s = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import EvaluationError, PreconditionError

DEFAULT_STEP = 1e-5
DEFAULT_NODES = 64
DEFAULT_PANELS = 8
# geometric panel ratio used when the integrand is singular at the left end
DEFAULT_GRADING = 0.15


def _check_order(value: float, name: str) -> float:
    value = float(value)
    if not (0.0 < value <= 1.0) or math.isnan(value):
        raise PreconditionError(f"{name} must lie in (0, 1], got {value!r}")
    return value


@dataclass(frozen=True)
class FracOrder:
    """Pair of conformable orders ``(alpha, beta)``, each in ``(0, 1]``."""

    alpha: float
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", _check_order(self.alpha, "alpha"))
        object.__setattr__(self, "beta", _check_order(self.beta, "beta"))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """A real function known only at strictly increasing nodes on ``[a, b]``.

    ``low_accuracy`` optionally marks samples that were extrapolated rather
    than computed from a centred stencil.
    """

    nodes: np.ndarray
    values: np.ndarray
    domain: Optional[tuple] = None
    low_accuracy: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        nodes = _frozen(self.nodes)
        values = _frozen(self.values)
        if nodes.ndim != 1 or nodes.size < 2:
            raise PreconditionError("a sampled function needs at least 2 nodes")
        if values.shape != nodes.shape:
            raise PreconditionError("need exactly one value per node")
        if np.any(np.diff(nodes) <= 0):
            raise PreconditionError("nodes must be strictly increasing")
        domain = self.domain
        if domain is None:
            domain = (float(nodes[0]), float(nodes[-1]))
        a, b = float(domain[0]), float(domain[1])
        if not (0.0 <= a < b):
            raise PreconditionError(f"invalid domain [{a}, {b}]")
        if nodes[0] < a or nodes[-1] > b:
            raise PreconditionError("nodes must lie inside the domain")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "domain", (a, b))
        if self.low_accuracy is not None:
            flags = np.array(self.low_accuracy, dtype=bool)
            flags.setflags(write=False)
            object.__setattr__(self, "low_accuracy", flags)

    def __len__(self):
        return self.nodes.size


def _scalar(f: Callable, t: float) -> float:
    try:
        value = float(f(t))
    except (ArithmeticError, ValueError) as exc:
        raise EvaluationError(f"function evaluation failed at t={t!r}: {exc}", t) from exc
    if not math.isfinite(value):
        raise EvaluationError(f"non-finite function value at t={t!r}", t)
    return value


def conformable_derivative(
    f: Callable[[float], float], alpha: float, t: float, h: float = DEFAULT_STEP
) -> float:
    """Conformable derivative ``t**(1-alpha) * f'(t)`` by finite differences.

    ``f'`` uses a central difference, switching to the 3-point one-sided
    stencil when ``t -/+ h`` would leave ``[0, 1]``.  At ``t = 0`` the value is
    the right limit, approximated by evaluating at ``t = h``.
    """
    alpha = _check_order(alpha, "alpha")
    t = float(t)
    if not (0.0 <= t <= 1.0):
        raise PreconditionError(f"t must lie in [0, 1], got {t!r}")
    if not h > 0:
        raise PreconditionError(f"step h must be positive, got {h!r}")
    if t == 0.0:
        t = h
    if t - h >= 0.0 and t + h <= 1.0:
        slope = (_scalar(f, t + h) - _scalar(f, t - h)) / (2 * h)
    elif t - h < 0.0:
        slope = (-3 * _scalar(f, t) + 4 * _scalar(f, t + h) - _scalar(f, t + 2 * h)) / (2 * h)
    else:
        slope = (3 * _scalar(f, t) - 4 * _scalar(f, t - h) + _scalar(f, t - 2 * h)) / (2 * h)
    return t ** (1.0 - alpha) * slope


def limit_quotient(f: Callable[[float], float], alpha: float, t: float, eps: float) -> float:
    """Difference quotient ``(f(t*exp(eps*t**-alpha)) - f(t)) / eps``.

    As ``eps -> 0`` this tends to the conformable derivative at ``t > 0``.
    """
    alpha = _check_order(alpha, "alpha")
    if not t > 0:
        raise PreconditionError("the limit quotient needs t > 0")
    shifted = t * math.exp(eps * t ** (-alpha))
    return (_scalar(f, shifted) - _scalar(f, t)) / eps


def definition_agreement(
    f: Callable[[float], float],
    alpha: float,
    points: Sequence[float],
    eps_values: Sequence[float] = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6),
    h: float = DEFAULT_STEP,
) -> list[dict]:
    """Compare the limit quotient against :func:`conformable_derivative`.

    Returns one record per ``(t, eps)`` pair with the absolute difference.
    Nothing is asserted; the rate in ``eps`` is reported for inspection.
    """
    rows = []
    for t in points:
        reference = conformable_derivative(f, alpha, t, h)
        for eps in eps_values:
            q = limit_quotient(f, alpha, t, eps)
            rows.append({"t": float(t), "eps": float(eps), "quotient": q,
                         "derivative": reference, "abs_diff": abs(q - reference)})
    return rows


@lru_cache(maxsize=32)
def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def beta_rule(
    beta: float, breaks: Sequence[float], n: int = DEFAULT_NODES
) -> tuple[np.ndarray, np.ndarray]:
    r"""Nodes and weights for :math:`\int g(s) s^{\beta-1} ds` on panels.

    ``breaks`` are panel boundaries in the transformed variable
    ``u = s**beta`` (increasing, within ``[0, 1]`` or beyond).  Each panel
    gets an ``n``-point Gauss-Legendre rule; the returned nodes are in ``s``
    and the weights already include the constant ``1/beta``.
    """
    beta = _check_order(beta, "beta")
    if n < 2:
        raise PreconditionError("need at least 2 quadrature nodes per panel")
    breaks = np.asarray(breaks, dtype=float)
    x, w = _gauss_legendre(int(n))
    lo, hi = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (hi - lo)
    u = (lo + hi) * 0.5 + half * x
    weights = (half * w) / beta
    return (u ** (1.0 / beta)).ravel(), weights.ravel()


def panel_breaks(lo: float, hi: float, panels: int,
                 grading: Optional[float] = None) -> np.ndarray:
    """Panel boundaries on ``[lo, hi]``: equal, or geometric toward ``lo``."""
    if grading is None:
        return np.linspace(lo, hi, int(panels) + 1)
    if not 0 < grading < 1:
        raise PreconditionError(f"grading ratio must lie in (0, 1), got {grading!r}")
    frac = np.concatenate([[0.0], grading ** np.arange(int(panels) - 1, -1, -1.0)])
    return lo + (hi - lo) * frac


def _evaluate(f: Callable, s: np.ndarray) -> np.ndarray:
    try:
        values = np.asarray(f(s), dtype=float)
    except EvaluationError:
        raise
    except Exception:
        values = None
    if values is not None and values.ndim == 0:
        values = np.full(s.shape, float(values))
    if values is None or values.shape != s.shape:
        values = np.array([_scalar(f, float(si)) for si in s])
    bad = ~np.isfinite(values)
    if bad.any():
        point = float(s[np.argmax(bad)])
        raise EvaluationError(f"non-finite integrand at s={point!r}", point)
    return values


def beta_integral(
    f: Callable,
    beta: float,
    a: float,
    b: float,
    n: int = DEFAULT_NODES,
    panels: int = DEFAULT_PANELS,
    grading: Optional[float] = None,
) -> float:
    r"""Compute :math:`\int_a^b f(s)\, s^{\beta-1}\, ds`.

    Parameters
    ----------
    f : callable
        Integrand. Called with a numpy array of nodes when it supports
        that, otherwise point by point.
    beta : float
        Order in ``(0, 1]``.
    a, b : float
        Limits with ``0 <= a < b``.
    n : int
        Gauss-Legendre nodes per panel.
    panels : int
        Number of panels in ``u = s**beta``.
    grading : float, optional
        If given, panels shrink geometrically by this ratio toward ``a``
        instead of being equal.  Use it when ``f`` behaves like a fractional
        power ``s**p`` at ``a = 0``.

    Returns
    -------
    float
        The integral value.
    """
    beta = _check_order(beta, "beta")
    a, b = float(a), float(b)
    if not (0.0 <= a < b):
        raise PreconditionError(f"need 0 <= a < b, got a={a}, b={b}")
    if panels < 1:
        raise PreconditionError("need at least one panel")
    breaks = panel_breaks(a ** beta, b ** beta, panels, grading)
    s, w = beta_rule(beta, breaks, n)
    return float(np.dot(w, _evaluate(f, s)))


def apply_fractional_operator(x: SampledFunction, order: FracOrder) -> SampledFunction:
    r"""Sample :math:`-D^\beta D^\alpha x = -t^{1-\beta}(t^{1-\alpha}x')'`.

    Since :math:`D^\alpha x = dx/d\tau` with :math:`\tau = t^\alpha/\alpha`,
    each conformable derivative is taken as an ordinary second-order
    difference in its own coordinate (``t**alpha/alpha``, then
    ``t**beta/beta``) on the given nodes.  Powers ``t**alpha`` are then
    differentiated exactly and the stencils stay accurate near ``t = 0``.
    The two end samples come from one-sided 3-point stencils and are
    flagged in ``low_accuracy``.
    """
    if len(x) < 5:
        raise PreconditionError("need at least 5 nodes for nested differences")
    t = x.nodes
    tau_a = np.power(t, order.alpha) / order.alpha
    tau_b = np.power(t, order.beta) / order.beta
    flux = np.gradient(x.values, tau_a, edge_order=2)
    result = -np.gradient(flux, tau_b, edge_order=2)
    flags = np.zeros(t.size, dtype=bool)
    flags[[0, -1]] = True
    return SampledFunction(t, result, x.domain, low_accuracy=flags)
