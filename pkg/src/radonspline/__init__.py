"""Shallow-network function spaces through the Radon-spline parameterization."""

__version__ = "0.1.0"
