"""Steady Navier-Stokes solvers accelerated by (noisy) continuous data assimilation."""

__version__ = "0.1.0"
