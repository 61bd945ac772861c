"""Value types shared by the potential and equidistribution layers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .errors import GridMismatch

Rect = Tuple[float, float, float, float]


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Weighted finite point set; weights are positive and sum to one."""

    points: np.ndarray
    weights: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.complex128).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if p.shape != w.shape:
            raise ValueError("points and weights differ in length")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points, seed=None) -> "EmpiricalMeasure":
        p = np.asarray(points, dtype=np.complex128).ravel()
        return cls(p, np.full(p.size, 1.0 / p.size), seed)

    def __len__(self):
        return self.points.size


@dataclass(frozen=True, eq=False)
class GridField:
    """Scalar field sampled at the cell centers of a rectangular lattice.

    ``values`` has shape ``(ny, nx)``: row ``j`` holds the cells with
    ``y = y_min + (j + 1/2) * dy``.  ``mask`` marks cells excluded from norms.
    """

    rect: Rect
    nx: int
    ny: int
    values: np.ndarray
    mask: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        x0, x1, y0, y1 = (float(v) for v in self.rect)
        if not (x1 > x0 and y1 > y0):
            raise ValueError(f"degenerate rectangle {self.rect}")
        v = np.asarray(self.values, dtype=float).reshape(self.ny, self.nx)
        object.__setattr__(self, "rect", (x0, x1, y0, y1))
        object.__setattr__(self, "values", v)
        if self.mask is not None:
            object.__setattr__(self, "mask", np.asarray(self.mask, dtype=bool).reshape(self.ny, self.nx))

    @property
    def cell_area(self) -> float:
        x0, x1, y0, y1 = self.rect
        return (x1 - x0) / self.nx * (y1 - y0) / self.ny

    @property
    def cell_diagonal(self) -> float:
        x0, x1, y0, y1 = self.rect
        return float(np.hypot((x1 - x0) / self.nx, (y1 - y0) / self.ny))

    def full_mask(self) -> np.ndarray:
        if self.mask is None:
            return np.zeros((self.ny, self.nx), dtype=bool)
        return self.mask

    def same_lattice(self, other: "GridField") -> bool:
        return self.rect == other.rect and self.nx == other.nx and self.ny == other.ny


def cell_centers(rect: Rect, nx: int, ny: int) -> np.ndarray:
    """Complex cell centers, shape ``(ny, nx)``."""
    x0, x1, y0, y1 = rect
    xs = x0 + (np.arange(nx) + 0.5) * (x1 - x0) / nx
    ys = y0 + (np.arange(ny) + 0.5) * (y1 - y0) / ny
    return xs[None, :] + 1j * ys[:, None]


def require_same_lattice(u: GridField, v: GridField):
    if not u.same_lattice(v):
        raise GridMismatch(
            f"lattices differ: {u.rect} {u.nx}x{u.ny} vs {v.rect} {v.nx}x{v.ny}"
        )


def decreasing_with_jitter(values, jitter: float = 0.1) -> bool:
    """True when each entry is at most ``(1 + jitter)`` times its predecessor
    and the last entry is below the first."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return True
    return bool(np.all(v[1:] <= (1.0 + jitter) * v[:-1]) and v[-1] < v[0])
