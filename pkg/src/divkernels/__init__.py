"""Numerical toolkit for reproducing kernels with division properties."""

__version__ = "0.1.0"
