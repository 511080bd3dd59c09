"""Command-line front end: ``confrac {green,bounds,certify,solve}``.

Exit status is 0 on success, 2 when certification fails, 1 on usage or
evaluation errors.  CSV numbers are written with 17 significant digits;
JSON uses the shortest representation that round-trips.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import __version__
from .errors import ConfracError
from .existence import Nonlinearity, certify
from .frac_core import FracOrder
from .greens import (
    FAMILIES,
    GreenKernel,
    bound_margins,
    g1,
    g2,
    g3,
    green_eval,
    r_cross,
)
from .solver import solve_picard

THREADS_ENV = "CONFRAC_THREADS"
EXIT_OK, EXIT_ERROR, EXIT_UNCERTIFIED = 0, 1, 2
# green dumps a table, so it defaults to csv
DEFAULT_FORMAT = {"green": "csv", "bounds": "json", "certify": "json", "solve": "json"}


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    alpha: float
    beta: float = 1.0
    family: str = "conjugate"
    gamma: Optional[float] = None
    delta: Optional[float] = None
    eta: Optional[float] = None
    zeta: Optional[float] = None
    n: int = 4
    f: Optional[str] = None
    r: Optional[float] = None
    R: Optional[float] = None
    grid: int = 513
    tol: float = 1e-10
    output: Optional[str] = None
    format: Optional[str] = None

    @property
    def output_format(self) -> str:
        return self.format or DEFAULT_FORMAT[self.subcommand]

    def kernel(self) -> GreenKernel:
        coeffs = None
        if self.family == "sturm_liouville":
            coeffs = (self.gamma, self.delta, self.eta, self.zeta)
        return GreenKernel.build(self.family, self.alpha, coeffs)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="confrac", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(p, with_beta):
        p.add_argument("--alpha", type=float, required=True)
        if with_beta:
            p.add_argument("--beta", type=float, required=True)
        p.add_argument("--grid", type=int, default=513)
        p.add_argument("--output", "-o", default=None, help="file path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=None)

    def kernel_flags(p):
        p.add_argument("--family", choices=FAMILIES, default="conjugate")
        for name in ("gamma", "delta", "eta", "zeta"):
            p.add_argument(f"--{name}", type=float, default=None)

    p = sub.add_parser("green", help="tabulate G(t, s) on a grid")
    common(p, with_beta=False)
    kernel_flags(p)

    p = sub.add_parser("bounds", help="g1, g2, g3, r_cross and checked bound margins")
    common(p, with_beta=False)
    kernel_flags(p)
    p.add_argument("--n", type=int, default=4)

    for name, text in (("certify", "check the existence conditions"),
                       ("solve", "certify, then compute the positive solution")):
        p = sub.add_parser(name, help=text)
        common(p, with_beta=True)
        p.add_argument("--f", required=True, help='nonlinearity, e.g. "1+0.25*sin(s)+x^2"')
        p.add_argument("--r", type=float, required=True)
        p.add_argument("--R", type=float, required=True)
        if name == "solve":
            p.add_argument("--tol", type=float, default=1e-10)
    return parser


def _validate(cfg: RunConfig) -> None:
    for name in ("alpha", "beta"):
        v = getattr(cfg, name)
        if not 0 < v <= 1:
            raise ConfracError(f"--{name} must lie in (0, 1], got {v}")
    coeffs = (cfg.gamma, cfg.delta, cfg.eta, cfg.zeta)
    if cfg.family == "sturm_liouville" and any(c is None for c in coeffs):
        raise ConfracError("--family sturm_liouville needs --gamma --delta --eta --zeta")
    if cfg.family != "sturm_liouville" and any(c is not None for c in coeffs):
        raise ConfracError("--gamma/--delta/--eta/--zeta only apply to sturm_liouville")
    if cfg.n < 3:
        raise ConfracError(f"--n must be an integer >= 3, got {cfg.n}")
    if cfg.grid < 2 or (cfg.subcommand in ("certify", "solve") and cfg.grid < 101):
        raise ConfracError(f"--grid {cfg.grid} is too small")
    if cfg.subcommand in ("certify", "solve") and not (cfg.r > 0 and cfg.R > 0):
        raise ConfracError("--r and --R must be positive")
    if not cfg.tol > 0:
        raise ConfracError("--tol must be positive")


def thread_count() -> int:
    """Worker count from ``CONFRAC_THREADS`` (integer >= 1, default 1).

    The numerical pipelines are vectorised and deterministic, so this only
    validates the setting; results never depend on it.
    """
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        value = int(raw)
    except ValueError:
        value = 0
    if value < 1:
        raise ConfracError(f"{THREADS_ENV} must be an integer >= 1, got {raw!r}")
    return value


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else f"{v:.17g}" for v in row])
    return buf.getvalue()


def _json(data) -> str:
    return json.dumps(data, indent=2) + "\n"


def _green(cfg: RunConfig):
    k = cfg.kernel()
    grid = np.linspace(0.0, 1.0, cfg.grid)
    tt, ss = np.meshgrid(grid, grid, indexing="ij")
    G = green_eval(k, tt, ss)
    if cfg.output_format == "csv":
        rows = zip(tt.ravel(), ss.ravel(), G.ravel())
        return EXIT_OK, _csv(rows, ["t", "s", "G"])
    return EXIT_OK, _json({"family": k.family, "alpha": k.alpha, "grid": grid.tolist(),
                           "G": G.tolist()})


def _bounds(cfg: RunConfig):
    k = cfg.kernel()
    p = k.params
    grid = np.linspace(0.0, 1.0, cfg.grid)
    g1_vals = g1(p, grid)
    g2_vals = g2(p, cfg.n, grid)
    if cfg.output_format == "csv":
        return EXIT_OK, _csv(zip(grid, g1_vals, g2_vals), ["t", "g1", "g2"])
    data = {
        "family": k.family, "alpha": p.alpha, "gamma": p.gamma, "delta": p.delta,
        "eta": p.eta, "zeta": p.zeta, "d": p.d, "n": cfg.n,
        "g3": g3(p, cfg.n), "r_cross": r_cross(p, cfg.n),
        "margins": bound_margins(k, cfg.n, cfg.grid),
        "grid": grid.tolist(), "g1": g1_vals.tolist(), "g2": g2_vals.tolist(),
    }
    return EXIT_OK, _json(data)


def _key_value_csv(d: dict) -> str:
    return _csv(((k, v if isinstance(v, (int, float)) and not isinstance(v, bool) else str(v))
                 for k, v in d.items()), ["key", "value"])


def _certify(cfg: RunConfig):
    order = FracOrder(cfg.alpha, cfg.beta)
    cert = certify(Nonlinearity(cfg.f), order, cfg.r, cfg.R, cfg.grid)
    status = EXIT_OK if cert.certified else EXIT_UNCERTIFIED
    if cfg.output_format == "csv":
        return status, _key_value_csv(cert.to_dict())
    return status, _json(cert.to_dict())


def _solve(cfg: RunConfig):
    order = FracOrder(cfg.alpha, cfg.beta)
    f = Nonlinearity(cfg.f)
    cert = certify(f, order, cfg.r, cfg.R, cfg.grid)
    if not cert.certified:
        return EXIT_UNCERTIFIED, _json({"certificate": cert.to_dict(), "profile": None})
    profile = solve_picard(f, order, cert, tol=cfg.tol, grid=cfg.grid)
    if cfg.output_format == "csv":
        return EXIT_OK, profile.to_csv()
    return EXIT_OK, _json({"certificate": cert.to_dict(), "profile": profile.summary()})


HANDLERS = {"green": _green, "bounds": _bounds, "certify": _certify, "solve": _solve}


def run(cfg: RunConfig) -> tuple[int, str]:
    """Run one validated pipeline; returns ``(exit status, artifact text)``."""
    _validate(cfg)
    thread_count()
    return HANDLERS[cfg.subcommand](cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(**vars(args))
    try:
        status, text = run(cfg)
    except (ConfracError, ArithmeticError, ValueError) as exc:
        print(f"confrac: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if status == EXIT_UNCERTIFIED:
        print("confrac: certification failed; see report", file=sys.stderr)
    if cfg.output:
        with open(cfg.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
