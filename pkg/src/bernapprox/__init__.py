"""Bernstein-type approximation operators with non-asymptotic error bounds."""

__version__ = "0.1.0"
