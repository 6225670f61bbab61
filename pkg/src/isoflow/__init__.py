"""Numerical laboratory for KdV isospectral flows of Schrodinger operators."""

__version__ = "0.1.0"
