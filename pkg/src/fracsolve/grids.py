"""Domains, Cartesian grids, and nodal fields.

Grids are uniform lattices over the domain's bounding box with an
interior-node mask; a field carries one value per lattice node and is
identically zero off the interior, which realizes the zero exterior
condition at the discrete level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Domain",
    "interval",
    "rectangle",
    "disk",
    "Grid",
    "build_grid",
    "ScalarField",
    "VectorField",
    "integrate",
    "lp_norm",
]


@dataclass(frozen=True)
class Domain:
    kind: str
    params: tuple

    @property
    def dim(self):
        return 1 if self.kind == "interval" else 2

    def bounding_box(self):
        if self.kind == "interval":
            a, b = self.params
            return np.array([a]), np.array([b])
        if self.kind == "rectangle":
            a1, b1, a2, b2 = self.params
            return np.array([a1, a2]), np.array([b1, b2])
        cx, cy, r = self.params
        return np.array([cx - r, cy - r]), np.array([cx + r, cy + r])

    def distance(self, points):
        """Distance to the boundary, clipped to 0 outside the closure."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "interval":
            a, b = self.params
            d = np.minimum(pts[:, 0] - a, b - pts[:, 0])
        elif self.kind == "rectangle":
            a1, b1, a2, b2 = self.params
            d = np.minimum.reduce(
                [pts[:, 0] - a1, b1 - pts[:, 0], pts[:, 1] - a2, b2 - pts[:, 1]]
            )
        else:
            cx, cy, r = self.params
            d = r - np.hypot(pts[:, 0] - cx, pts[:, 1] - cy)
        return np.maximum(d, 0.0)

    def contains(self, points):
        """Strict interior membership."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "interval":
            a, b = self.params
            return (pts[:, 0] > a) & (pts[:, 0] < b)
        if self.kind == "rectangle":
            a1, b1, a2, b2 = self.params
            return (
                (pts[:, 0] > a1) & (pts[:, 0] < b1) & (pts[:, 1] > a2) & (pts[:, 1] < b2)
            )
        cx, cy, r = self.params
        return np.hypot(pts[:, 0] - cx, pts[:, 1] - cy) < r

    def describe(self):
        if self.kind == "interval":
            return {"type": "interval", "bounds": list(self.params)}
        if self.kind == "rectangle":
            return {"type": "rectangle", "bounds": list(self.params)}
        cx, cy, r = self.params
        return {"type": "disk", "center": [cx, cy], "radius": r}


def interval(a, b):
    if not b > a:
        raise ValueError(f"interval needs a < b, got [{a}, {b}]")
    return Domain("interval", (float(a), float(b)))


def rectangle(a1, b1, a2, b2):
    if not (b1 > a1 and b2 > a2):
        raise ValueError("rectangle needs positive side lengths")
    return Domain("rectangle", (float(a1), float(b1), float(a2), float(b2)))


def disk(cx, cy, radius):
    if not radius > 0:
        raise ValueError("disk needs a positive radius")
    return Domain("disk", (float(cx), float(cy), float(radius)))


class Grid:
    """Uniform node lattice on the domain bounding box."""

    def __init__(self, domain, resolution):
        if resolution < 3:
            raise ValueError(f"resolution must be at least 3, got {resolution}")
        self.domain = domain
        self.resolution = int(resolution)
        lo, hi = domain.bounding_box()
        self.axes = tuple(np.linspace(lo[a], hi[a], resolution) for a in range(domain.dim))
        self.shape = tuple(len(ax) for ax in self.axes)
        self.h = tuple(float(ax[1] - ax[0]) for ax in self.axes)
        if domain.dim == 1:
            self.points = self.axes[0][:, None]
        else:
            xx, yy = np.meshgrid(self.axes[0], self.axes[1], indexing="ij")
            self.points = np.column_stack([xx.ravel(), yy.ravel()])
        self.interior_mask = domain.contains(self.points)
        self.interior_idx = np.flatnonzero(self.interior_mask)
        self.cell_volume = float(np.prod(self.h))
        # integer lattice coordinates of every node, for offset arithmetic
        self.lattice = np.stack(
            np.unravel_index(np.arange(self.points.shape[0]), self.shape), axis=1
        )

    @property
    def dim(self):
        return self.domain.dim

    @property
    def n_interior(self):
        return int(self.interior_idx.size)

    @property
    def interior_points(self):
        return self.points[self.interior_idx]

    def field(self, values=None):
        if values is None:
            values = np.zeros(self.points.shape[0])
        return ScalarField(self, values)

    def vector_field(self, values=None):
        if values is None:
            values = np.zeros((self.points.shape[0], self.dim))
        return VectorField(self, values)

    def pack(self, field):
        """Interior values as a flat solver vector."""
        return field.values[self.interior_idx].copy()

    def unpack(self, vec):
        """Rebuild a field from an interior vector (exterior zero)."""
        values = np.zeros(self.points.shape[0])
        values[self.interior_idx] = vec
        return ScalarField(self, values)

    def distance_field(self):
        return ScalarField(self, self.domain.distance(self.points))


def build_grid(domain, resolution):
    return Grid(domain, resolution)


class ScalarField:
    """One value per node, exterior extension identically zero."""

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.points.shape[0],):
            raise ValueError(
                f"values shape {values.shape} does not match grid ({grid.points.shape[0]},)"
            )
        self.grid = grid
        self.values = np.where(grid.interior_mask, values, 0.0)

    @property
    def interior(self):
        return self.values[self.grid.interior_idx]

    def copy(self):
        return ScalarField(self.grid, self.values)


class VectorField:
    """One dim-vector per node, zero off the interior."""

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.points.shape[0], grid.dim):
            raise ValueError(
                f"values shape {values.shape} does not match grid "
                f"({grid.points.shape[0]}, {grid.dim})"
            )
        self.grid = grid
        self.values = np.where(grid.interior_mask[:, None], values, 0.0)

    @property
    def interior(self):
        return self.values[self.grid.interior_idx]


def integrate(field):
    """Cell-volume weighted sum over interior nodes."""
    g = field.grid
    return float(g.cell_volume * np.sum(field.values[g.interior_idx]))


def lp_norm(field, p):
    """Discrete L^p norm over the domain; p = inf gives the sup of |u|."""
    g = field.grid
    vals = field.values[g.interior_idx]
    if np.isinf(p):
        return float(np.max(np.abs(vals))) if vals.size else 0.0
    if p <= 0:
        raise ValueError(f"p must be positive, got {p}")
    return float((g.cell_volume * np.sum(np.abs(vals) ** p)) ** (1.0 / p))
