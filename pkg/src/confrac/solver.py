r"""Fixed-point solver for the conjugate problem
:math:`-D^\beta D^\alpha x = f(t, x)`, ``x(0) = x(1) = 0``.

Solutions are fixed points of the Hammerstein operator

.. math::

    (Ax)(t) = \int_0^1 G(t, s) f(s, x(s)) \, s^{\beta-1} ds .

The operator is discretised on the graded grid ``t_i = u_i**(1/beta)``
(uniform ``u_i``).  The nodes double as panel boundaries of the quadrature
in ``u = s**beta``, so no panel straddles the kink of ``G(t_i, .)`` at
``s = t_i``.  Between nodes ``x`` is read off a cubic spline in ``u``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DivergenceError, EvaluationError, PreconditionError
from .existence import ExistenceCertificate, Nonlinearity, _as_nonlinearity
from .frac_core import FracOrder, SampledFunction, apply_fractional_operator, beta_rule
from .greens import GreenKernel, cone_ratio_constant, graded_grid
from .scan import scan_extremum

PANEL_NODES = 8
ODE_WINDOW = (0.02, 0.98)
CONE_SLACK = 1e-9
POSITIVITY_SLACK = 1e-12


class HammersteinOperator:
    """Discrete ``A`` for a fixed node set and order.

    The quadrature matrix is built once; applying the operator costs one
    evaluation of ``f`` at the quadrature nodes and one matrix product.
    """

    def __init__(self, nodes, order: FracOrder, panel_nodes: int = PANEL_NODES):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.size < 2 or nodes[0] != 0.0 or nodes[-1] != 1.0:
            raise PreconditionError("operator nodes must run from 0 to 1")
        self.nodes = nodes
        self.order = order
        self.kernel = GreenKernel.build("conjugate", order.alpha)
        self.u_nodes = nodes ** order.beta
        s, w = beta_rule(order.beta, self.u_nodes, panel_nodes)
        self.quad_nodes = s
        self.quad_u = s ** order.beta
        self.matrix = self.kernel(nodes[:, None], s[None, :]) * w[None, :]

    def integrand(self, values, f: Nonlinearity) -> np.ndarray:
        """``f(s_j, x(s_j))`` at the quadrature nodes, ``x`` splined from ``values``."""
        x_q = CubicSpline(self.u_nodes, values)(self.quad_u)
        fx = f(self.quad_nodes, x_q)
        neg = fx < 0
        if neg.any():
            j = int(np.argmax(neg))
            point = (float(self.quad_nodes[j]), float(x_q[j]))
            raise EvaluationError(f"f is negative at (s, x) = {point}", point)
        return fx

    def __call__(self, values, f: Nonlinearity) -> np.ndarray:
        return self.matrix @ self.integrand(values, f)


def apply_A(x: SampledFunction, f, order: FracOrder) -> SampledFunction:
    """``(Ax)(t_i)`` at every node of ``x`` (nodes must span ``[0, 1]``)."""
    op = HammersteinOperator(x.nodes, order)
    return SampledFunction(x.nodes, op(x.values, _as_nonlinearity(f)), (0.0, 1.0))


@dataclass(frozen=True, eq=False)
class SolutionProfile:
    grid: np.ndarray
    values: np.ndarray
    residual_ode: float
    residual_bc: tuple
    cone_ok: bool
    psi: float
    phi: float
    iterations: int
    converged: bool
    fixed_point_residual: float = math.nan
    lower_band_ok: bool = False
    upper_band_ok: bool = False
    max_cone_excess: float = math.nan
    damping: float = 1.0

    def summary(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "psi": self.psi,
            "phi": self.phi,
            "cone_ok": self.cone_ok,
            "residual_ode": self.residual_ode,
            "residual_bc_left": self.residual_bc[0],
            "residual_bc_right": self.residual_bc[1],
            "fixed_point_residual": self.fixed_point_residual,
            "lower_band_ok": self.lower_band_ok,
            "upper_band_ok": self.upper_band_ok,
            "max_cone_excess": self.max_cone_excess,
            "damping": self.damping,
            "grid_points": int(self.grid.size),
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "x"])
        for t, x in zip(self.grid, self.values):
            writer.writerow([f"{t:.17g}", f"{x:.17g}"])
        return buf.getvalue()


def cone_functionals(nodes, values, beta: float) -> tuple[float, float]:
    """``(psi, phi)``: min of ``x`` on ``[1/4, 3/4]`` and max on ``[0, 1]``.

    Both are taken from the spline through the samples (scan plus
    golden-section refinement), so they do not depend on where the nodes
    happen to fall.
    """
    spline = CubicSpline(np.asarray(nodes) ** beta, values)

    def x_of_t(t):
        return spline(np.asarray(t) ** beta)

    psi = scan_extremum(x_of_t, 0.25, 0.75, 401)[1]
    phi = scan_extremum(x_of_t, 0.0, 1.0, 401, maximize=True)[1]
    return min(psi, float(np.min(values[(nodes >= 0.25) & (nodes <= 0.75)]))), \
        max(phi, float(np.max(values)))


def _check_inputs(order: FracOrder, cert: ExistenceCertificate, tol, max_iter, grid):
    if cert.status != "certified":
        raise PreconditionError(f"certificate status is {cert.status!r}, not certified")
    if (cert.order.alpha, cert.order.beta) != (order.alpha, order.beta):
        raise PreconditionError("certificate was issued for a different order")
    if not tol > 0:
        raise PreconditionError(f"tol must be positive, got {tol!r}")
    if max_iter < 1:
        raise PreconditionError("max_iter must be at least 1")
    if grid < 5:
        raise PreconditionError("grid needs at least 5 nodes")


def damped_iterate(f, order: FracOrder, cert: ExistenceCertificate, damping: float = 1.0,
                   tol: float = 1e-10, max_iter: int = 500, grid: int = 513) -> SolutionProfile:
    """Iterate ``x <- (1 - damping) x + damping A x`` from the mid-annulus constant.

    Stops when successive iterates differ by less than ``tol`` in the sup
    norm.  Raises :class:`DivergenceError` if an iterate's sup norm exceeds
    ``10 R``.
    """
    if not 0 < damping <= 1:
        raise PreconditionError(f"damping must lie in (0, 1], got {damping!r}")
    _check_inputs(order, cert, tol, max_iter, grid)
    f = _as_nonlinearity(f)
    nodes = graded_grid(order.beta, grid)
    op = HammersteinOperator(nodes, order)
    cone_const = cone_ratio_constant(order.alpha)
    x = np.full(nodes.size, 0.5 * (cert.r_inner + cone_const * cert.r_inner))
    strip = (nodes >= 0.25) & (nodes <= 0.75)
    converged = False
    worst_excess = -math.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        ax = op(x, f)
        new = (1.0 - damping) * x + damping * ax
        worst_excess = max(worst_excess, float(new.max() - cone_const * new[strip].min()))
        norm = float(np.max(np.abs(new)))
        if not math.isfinite(norm) or norm > 10 * cert.R_outer:
            raise DivergenceError(
                f"iterate {iterations} has sup norm {norm:.6g} > 10 R = {10 * cert.R_outer:.6g}; "
                "try damped_iterate with a smaller damping factor")
        step = float(np.max(np.abs(new - x)))
        x = new
        if step < tol:
            converged = True
            break
    fixed_point = float(np.max(np.abs(x - op(x, f))))
    sampled = SampledFunction(nodes, x, (0.0, 1.0))
    lhs = apply_fractional_operator(sampled, order).values
    window = (nodes >= ODE_WINDOW[0]) & (nodes <= ODE_WINDOW[1])
    residual_ode = float(np.max(np.abs(lhs[window] - f(nodes[window], x[window]))))
    psi, phi = cone_functionals(nodes, x, order.beta)
    cone_ok = bool(phi <= cone_const * psi + CONE_SLACK and x.min() >= -POSITIVITY_SLACK)
    return SolutionProfile(
        grid=nodes, values=x, residual_ode=residual_ode,
        residual_bc=(abs(float(x[0])), abs(float(x[-1]))), cone_ok=cone_ok, psi=psi, phi=phi,
        iterations=iterations, converged=converged, fixed_point_residual=fixed_point,
        lower_band_ok=bool(cert.r_inner <= psi), upper_band_ok=bool(phi <= cert.R_outer),
        max_cone_excess=worst_excess, damping=float(damping))


def solve_picard(f, order: FracOrder, cert: ExistenceCertificate, tol: float = 1e-10,
                 max_iter: int = 500, grid: int = 513) -> SolutionProfile:
    """Plain Picard iteration ``x <- A x``; see :func:`damped_iterate`."""
    return damped_iterate(f, order, cert, 1.0, tol, max_iter, grid)
