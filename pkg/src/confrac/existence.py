r"""Existence certificates for positive solutions of the conjugate problem.

For :math:`-D^\beta D^\alpha x = f(t, x)`, ``x(0) = x(1) = 0``, a pair of
radii ``0 < r`` and ``R`` with ``cone_const * r < R`` certifies a positive
solution when

* ``f(s, x) <= R (alpha+beta)(2 alpha+beta)`` on ``[0,1] x [0,R]``, and
* ``f(s, x) >= r N`` on ``[1/4,3/4] x [r, cone_const * r]``,

where ``cone_const = 1/(1 - (3/4)^alpha)`` and
``N = 1 / ((1 - (3/4)^alpha) * int_{1/4}^{3/4} G(s,s) d_beta s)``.
The solution then satisfies ``r <= min_{[1/4,3/4]} x`` and ``max x <= R``.

The sup/inf conditions are checked by a grid scan over each rectangle with
golden-section refinement of the winning cell, so margins are numerical
estimates, not enclosures.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Union

import numpy as np

from . import __version__
from .errors import EvaluationError, PreconditionError
from .expr import Expr, evaluate, parse, to_text
from .frac_core import DEFAULT_GRADING, FracOrder, beta_integral
from .greens import GreenKernel, cone_ratio_constant
from .scan import golden_section

STATUSES = ("certified", "failed_gap", "failed_cond_i", "failed_cond_ii")
INTEGRAL_FORM = ("(1/alpha)[s^(alpha+beta)/(alpha+beta) - s^(2alpha+beta)/(2alpha+beta)], "
                 "i.e. with the 1/alpha factor of G(s,s); confirmed by beta quadrature")
REFINE_TOL = 1e-10


class Nonlinearity:
    """Right-hand side ``f(s, x)``, from expression text or a callable.

    Calls broadcast over numpy arrays.  Callables must accept arrays.
    """

    def __init__(self, source: Union[str, Expr, Callable]):
        if isinstance(source, str):
            self.expression = parse(source)
            self._fn = None
        elif callable(source):
            self.expression = None
            self._fn = source
        else:
            self.expression = source
            self._fn = None

    @property
    def text(self) -> str:
        if self.expression is not None:
            return to_text(self.expression)
        return getattr(self._fn, "__name__", repr(self._fn))

    def __call__(self, s, x):
        if self._fn is None:
            return evaluate(self.expression, s, x)
        s_arr, x_arr = np.asarray(s, dtype=float), np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            value = np.broadcast_to(np.asarray(self._fn(s_arr, x_arr), dtype=float),
                                    np.broadcast(s_arr, x_arr).shape)
        bad = ~np.isfinite(value)
        if bad.any():
            i = int(np.argmax(bad))
            sb, xb = np.broadcast_arrays(s_arr, x_arr)
            point = (float(sb.flat[i]), float(xb.flat[i]))
            raise EvaluationError(f"non-finite value of f at (s, x) = {point}", point)
        return float(value) if value.ndim == 0 else np.array(value)

    def __repr__(self):
        return f"Nonlinearity({self.text!r})"


def _as_nonlinearity(f) -> Nonlinearity:
    return f if isinstance(f, Nonlinearity) else Nonlinearity(f)


def _decimal(v) -> Fraction:
    # shortest round-trip decimal, so 0.36 is read as 9/25
    return v if isinstance(v, Fraction) else Fraction(repr(float(v)))


def diagonal_antiderivative(order: FracOrder, s: float) -> float:
    r"""Antiderivative of :math:`G(s,s)s^{\beta-1}` for the conjugate kernel."""
    a, b = order.alpha, order.beta
    return (s ** (a + b) / (a + b) - s ** (2 * a + b) / (2 * a + b)) / a


def unscaled_closed_form(order: FracOrder) -> float:
    """The closed form of ``int_{1/4}^{3/4} G(s,s) d_beta s`` without the 1/alpha factor.

    Kept only to report how far it is from the quadrature value; it agrees
    with the true integral only at ``alpha = 1``.
    """
    a, b = order.alpha, order.beta
    return (0.75 ** (a + b) * (1 / (a + b) - 0.75 ** a / (2 * a + b))
            - 0.25 ** (a + b) * (1 / (a + b) - 0.25 ** a / (2 * a + b)))


def diagonal_integral(order: FracOrder, a: float = 0.25, b: float = 0.75) -> float:
    r"""``int_a^b G(s,s) d_beta s`` for the conjugate kernel, by quadrature."""
    k = GreenKernel.build("conjugate", order.alpha)
    if a == 0:
        # G(s,s) ~ s^alpha/alpha at the origin
        return beta_integral(k.diagonal, order.beta, a, b, panels=12, grading=DEFAULT_GRADING)
    return beta_integral(k.diagonal, order.beta, a, b)


def compute_N(order: FracOrder) -> float:
    """Lower-growth constant ``N`` of condition (ii).

    The integral is computed by quadrature and cross-checked against the
    antiderivative; a relative disagreement above ``1e-10`` is an error.
    """
    integral = diagonal_integral(order)
    exact = diagonal_antiderivative(order, 0.75) - diagonal_antiderivative(order, 0.25)
    if abs(integral - exact) > 1e-10 * abs(exact):
        raise ArithmeticError(f"quadrature {integral!r} disagrees with antiderivative {exact!r}")
    return 1.0 / ((1.0 - 0.75 ** order.alpha) * integral)


def cond_i_bound(order: FracOrder, R) -> float:
    """Upper cap ``R (alpha+beta)(2 alpha+beta)`` of condition (i).

    The product is formed exactly on the shortest decimal form of each input
    and rounded once, so ``R = 0.36``, ``alpha = 1``, ``beta = 0.5`` gives
    ``1.35`` on the nose.
    """
    if not float(R) > 0:
        raise PreconditionError(f"R must be positive, got {R!r}")
    a, b = _decimal(order.alpha), _decimal(order.beta)
    return float(_decimal(R) * (a + b) * (2 * a + b))


def cond_i_identity(order: FracOrder) -> float:
    """``(alpha+beta)(2 alpha+beta) int_0^1 G(s,s) d_beta s``; equals 1."""
    a, b = order.alpha, order.beta
    return (a + b) * (2 * a + b) * diagonal_integral(order, 0.0, 1.0)


@dataclass(frozen=True)
class ExistenceCertificate:
    r_inner: float
    R_outer: float
    N: float
    cone_const: float
    order: FracOrder
    cond_i_margin: float
    cond_ii_margin: float
    status: str
    cond_i_cap: float = math.nan
    cond_ii_floor: float = math.nan
    sup_f: float = math.nan
    inf_f: float = math.nan
    sup_at: tuple = ()
    inf_at: tuple = ()
    scan_resolution: int = 0
    nonlinearity: str = ""
    version: str = field(default=__version__)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise PreconditionError(f"unknown status {self.status!r}")
        if self.status == "certified":
            if not self.cone_const * self.r_inner < self.R_outer:
                raise PreconditionError("certified certificate violates the radius gap")
            if self.cond_i_margin < 0 or self.cond_ii_margin < 0:
                raise PreconditionError("certified certificate has a negative margin")

    @property
    def certified(self) -> bool:
        return self.status == "certified"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "r_inner": self.r_inner,
            "R_outer": self.R_outer,
            "N": self.N,
            "cone_const": self.cone_const,
            "order_alpha": self.order.alpha,
            "order_beta": self.order.beta,
            "cond_i_margin": self.cond_i_margin,
            "cond_ii_margin": self.cond_ii_margin,
            "cond_i_cap": self.cond_i_cap,
            "cond_ii_floor": self.cond_ii_floor,
            "sup_f": self.sup_f,
            "sup_at_s": self.sup_at[0] if self.sup_at else None,
            "sup_at_x": self.sup_at[1] if self.sup_at else None,
            "inf_f": self.inf_f,
            "inf_at_s": self.inf_at[0] if self.inf_at else None,
            "inf_at_x": self.inf_at[1] if self.inf_at else None,
            "nonlinearity": self.nonlinearity,
            "N_integral_form": INTEGRAL_FORM,
            "scan_resolution": self.scan_resolution,
            "version": self.version,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=_json_float)

    @classmethod
    def from_dict(cls, data: dict) -> "ExistenceCertificate":
        def pair(prefix):
            s, x = data.get(prefix + "_s"), data.get(prefix + "_x")
            return () if s is None else (s, x)

        return cls(
            r_inner=data["r_inner"], R_outer=data["R_outer"], N=data["N"],
            cone_const=data["cone_const"],
            order=FracOrder(data["order_alpha"], data["order_beta"]),
            cond_i_margin=data["cond_i_margin"], cond_ii_margin=data["cond_ii_margin"],
            status=data["status"], cond_i_cap=data.get("cond_i_cap", math.nan),
            cond_ii_floor=data.get("cond_ii_floor", math.nan),
            sup_f=data.get("sup_f", math.nan), inf_f=data.get("inf_f", math.nan),
            sup_at=pair("sup_at"), inf_at=pair("inf_at"),
            scan_resolution=data.get("scan_resolution", 0),
            nonlinearity=data.get("nonlinearity", ""),
            version=data.get("version", __version__),
        )


def _json_float(v):
    return float(v)


def rectangle_extremum(f: Nonlinearity, s_range, x_range, points: int,
                       maximize: bool) -> tuple[float, tuple[float, float]]:
    """Extremum of ``f`` over a rectangle: grid scan, then coordinate-wise
    golden-section sweeps inside the cells around the best grid point.

    Raises :class:`EvaluationError` if ``f`` is negative anywhere on the
    grid or during refinement.
    """
    ss = np.linspace(s_range[0], s_range[1], points)
    xs = np.linspace(x_range[0], x_range[1], points)
    S, X = np.meshgrid(ss, xs, indexing="ij")
    vals = f(S, X)
    neg = vals < 0
    if neg.any():
        i, j = np.unravel_index(int(np.argmax(neg)), neg.shape)
        point = (float(ss[i]), float(xs[j]))
        raise EvaluationError(f"f is negative at (s, x) = {point}", point)
    flat = int(np.argmax(vals) if maximize else np.argmin(vals))
    i, j = np.unravel_index(flat, vals.shape)
    best = float(vals[i, j])
    s0, x0 = float(ss[i]), float(xs[j])
    s_lo, s_hi = ss[max(i - 1, 0)], ss[min(i + 1, points - 1)]
    x_lo, x_hi = xs[max(j - 1, 0)], xs[min(j + 1, points - 1)]

    def checked(s, x):
        v = float(f(s, x))
        if v < 0:
            raise EvaluationError(f"f is negative at (s, x) = {(s, x)}", (s, x))
        return v

    s1, x1 = s0, x0
    for _ in range(4):
        if s_hi > s_lo:
            s1, _v = golden_section(lambda z: checked(z, x1), s_lo, s_hi, maximize, REFINE_TOL)
        if x_hi > x_lo:
            x1, _v = golden_section(lambda z: checked(s1, z), x_lo, x_hi, maximize, REFINE_TOL)
    refined = checked(s1, x1)
    if (refined > best) if maximize else (refined < best):
        return refined, (s1, x1)
    return best, (s0, x0)


def certify(f, order: FracOrder, r, R, grid: int = 201) -> ExistenceCertificate:
    """Check the radius gap and both growth conditions for ``f``.

    The status names the first failed check (gap, then (i), then (ii)).
    Margins are ``cap - sup f`` and ``inf f - r N``; both are computed
    whatever the status.
    """
    f = _as_nonlinearity(f)
    if grid < 101:
        raise PreconditionError("scan resolution must be at least 101 per axis")
    r_val, R_val = float(r), float(R)
    if not (r_val > 0 and R_val > 0):
        raise PreconditionError("radii r and R must be positive")
    cone_const = cone_ratio_constant(order.alpha)
    N = compute_N(order)
    cap = cond_i_bound(order, R)
    floor = float(_decimal(r) * Fraction(N))
    sup_f, sup_at = rectangle_extremum(f, (0.0, 1.0), (0.0, R_val), grid, maximize=True)
    inf_f, inf_at = rectangle_extremum(f, (0.25, 0.75), (r_val, cone_const * r_val), grid,
                                       maximize=False)
    margin_i = cap - sup_f
    margin_ii = inf_f - floor
    if not cone_const * r_val < R_val:
        status = "failed_gap"
    elif margin_i < 0:
        status = "failed_cond_i"
    elif margin_ii < 0:
        status = "failed_cond_ii"
    else:
        status = "certified"
    return ExistenceCertificate(
        r_inner=r_val, R_outer=R_val, N=N, cone_const=cone_const, order=order,
        cond_i_margin=margin_i, cond_ii_margin=margin_ii, status=status,
        cond_i_cap=cap, cond_ii_floor=floor, sup_f=sup_f, inf_f=inf_f,
        sup_at=sup_at, inf_at=inf_at, scan_resolution=grid, nonlinearity=f.text)


@dataclass(frozen=True)
class SearchReport:
    """Outcome of :func:`search_rR`: the best certificate tried and tallies."""

    certificate: Optional[ExistenceCertificate]
    certified: bool
    tried: int
    failures: dict

    def to_dict(self) -> dict:
        return {"certified": self.certified, "tried": self.tried, "failures": dict(self.failures),
                "certificate": None if self.certificate is None else self.certificate.to_dict()}


def search_rR(f, order: FracOrder, r_range, R_range, steps: int = 8,
              grid: int = 101) -> SearchReport:
    """Log sweep over ``(r, R)`` pairs that respect the radius gap.

    Returns the certified pair with the largest ``min(margin_i, margin_ii)``
    or, when nothing certifies, the failure that came closest.
    """
    f = _as_nonlinearity(f)
    r_min, r_max = map(float, r_range)
    R_min, R_max = map(float, R_range)
    if not (0 < r_min <= r_max and 0 < R_min <= R_max):
        raise PreconditionError("ranges must be positive with min <= max")
    if steps < 2:
        raise PreconditionError("need at least 2 steps per range")
    cone_const = cone_ratio_constant(order.alpha)
    best_ok = best_fail = None
    failures = {s: 0 for s in STATUSES[1:]}
    tried = 0
    for r in np.geomspace(r_min, r_max, steps):
        for R in np.geomspace(R_min, R_max, steps):
            if not cone_const * r < R:
                continue
            tried += 1
            cert = certify(f, order, float(r), float(R), grid)
            score = min(cert.cond_i_margin, cert.cond_ii_margin)
            if cert.certified:
                if best_ok is None or score > best_ok[0]:
                    best_ok = (score, cert)
            else:
                failures[cert.status] += 1
                if best_fail is None or score > best_fail[0]:
                    best_fail = (score, cert)
    if best_ok is not None:
        return SearchReport(best_ok[1], True, tried, failures)
    if tried == 0:
        failures["failed_gap"] = steps * steps
    return SearchReport(None if best_fail is None else best_fail[1], False, tried, failures)
