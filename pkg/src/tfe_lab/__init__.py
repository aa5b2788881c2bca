"""Numerical laboratory for thin film equations with critical absorption."""

__version__ = "0.1.0"
