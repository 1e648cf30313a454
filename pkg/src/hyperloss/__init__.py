"""Numerical laboratory for loss of regularity in singular hyperbolic Cauchy problems."""

__version__ = "0.1.0"
