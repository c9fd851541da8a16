"""Layered Beltrami flows: dispersion matrices, bifurcation points and first-order waves."""

__version__ = "0.1.0"
