"""Conformable fractional boundary value problems: kernels, bounds,
existence certificates and a fixed-point solver."""

__version__ = "0.1.0"
