"""Small grid constructors used by operators, moduli and the CLI config."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class GridSpec:
    """Declarative 1-d grid: resolved to points only once endpoints are known."""

    kind: str = "uniform"  # uniform | chebyshev | log
    size: int = 257

    def __post_init__(self):
        if self.kind not in ("uniform", "chebyshev", "log"):
            raise ParameterError(f"unknown grid kind {self.kind!r}")
        if self.size < 2:
            raise ParameterError("grid size must be at least 2")

    def points(self, lo: float, hi: float) -> np.ndarray:
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ParameterError(f"bad grid endpoints [{lo}, {hi}]")
        if self.kind == "uniform":
            return np.linspace(lo, hi, self.size)
        if self.kind == "chebyshev":
            # Chebyshev points of the second kind, endpoints included.
            k = np.arange(self.size)
            nodes = np.cos(np.pi * k / (self.size - 1))[::-1]
            return lo + (hi - lo) * (nodes + 1.0) / 2.0
        if lo <= 0:
            raise ParameterError("log grid needs a positive lower endpoint")
        return np.geomspace(lo, hi, self.size)


def resolve_grid(grid, lo: float, hi: float) -> np.ndarray:
    """Accept either a GridSpec or explicit points; return a sorted array."""
    if isinstance(grid, GridSpec):
        return grid.points(lo, hi)
    pts = np.asarray(grid, dtype=float)
    if pts.ndim != 1 or pts.size == 0:
        raise ParameterError("grid must be a nonempty 1-d array of points")
    if np.any(np.diff(pts) <= 0):
        raise ParameterError("grid points must be strictly increasing")
    return pts


def symmetric_grid(delta: float, size: int) -> np.ndarray:
    """Grid on [-delta, delta] containing both endpoints and 0 (size must be odd)."""
    if size < 3 or size % 2 == 0:
        raise ParameterError("symmetric grid size must be odd and >= 3")
    if delta < 0:
        raise ParameterError("delta must be nonnegative")
    return np.linspace(-delta, delta, size)
