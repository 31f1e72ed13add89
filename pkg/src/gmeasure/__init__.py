"""Numerical laboratory for g-functions, g-chains and g-measures."""

__version__ = "0.1.0"
