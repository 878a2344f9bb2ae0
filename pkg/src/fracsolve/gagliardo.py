"""Pairwise-weight assembly and evaluation of the fractional p-Dirichlet form.

On a uniform grid the form is

    energy(u) = (1/p) [ sum_{i != j} W_ij |u_i - u_j|^p + 2 sum_i T_i |u_i|^p ]

where W_ij is the double integral of the kernel |x - y|^(-(N + s p)) over
the cell pair (C_i, C_j) and T_i integrates the same kernel over
C_i x (complement of the interior cells), accounting for the zero
extension of u outside the domain.

Weights depend only on the lattice offset between cells, so they are
tabulated once per offset and broadcast to the dense pair matrix.  For
touching cells (Chebyshev lattice distance <= 1) the raw double integral
diverges once s p >= 1; those pairs instead use the difference-quotient
model weight

    W_ij = |x_i - x_j|^(-p) * double integral of |x - y|^(p - (N + s p)),

finite for every 0 < s < 1 < p, which treats |u_i - u_j| / |x_i - x_j|
as a frozen local slope across the shared face.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.signal import fftconvolve

from .grids import Grid, ScalarField
from .quadrature import (
    halfplane_profile_constant,
    pair_integral,
    power_segment_integral,
    quadrant_integral,
)

_ROW_CHUNK = 512
_CACHE_ENV = "FRACSOLVE_CACHE"
_CACHE_VERSION = 1


class MemoryBudgetError(RuntimeError):
    """Dense pair-weight storage would exceed the configured node budget."""


@dataclass(frozen=True)
class OperatorParams:
    """Order s and integrability exponent p of the fractional p-form."""

    s: float
    p: float
    node_cap: int = 4096

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"order s must lie in (0, 1), got {self.s}")
        if self.p <= 1.0:
            raise ValueError(f"exponent p must exceed 1, got {self.p}")
        if self.node_cap < 1:
            raise ValueError(f"node_cap must be positive, got {self.node_cap}")

    @property
    def sp(self) -> float:
        return self.s * self.p


@dataclass
class PairWeightTable:
    """Assembled weights for one (grid, s, p) combination.

    ``pair`` is the symmetric n x n interior cell-pair weight matrix with a
    zero diagonal; ``tail`` holds, per interior node, the kernel mass
    integrated over the cell times everything outside the interior.
    """

    grid: Grid
    params: OperatorParams
    pair: np.ndarray
    tail: np.ndarray


def _offset_table(grid: Grid, params: OperatorParams) -> np.ndarray:
    """Weights indexed by nonnegative lattice offset, shape = grid.shape."""
    h = np.asarray(grid.h, dtype=float)
    beta = grid.dim + params.sp
    table = np.zeros(grid.shape)
    for idx in np.ndindex(*grid.shape):
        k = np.asarray(idx)
        if not k.any():
            continue  # self-pair never contributes to differences
        delta = k * h
        if k.max() <= 1:
            dist = float(np.linalg.norm(delta))
            table[idx] = dist ** -params.p * pair_integral(params.p - beta, delta, h)
        else:
            table[idx] = pair_integral(-beta, delta, h)
    return table


def _mirrored_kernel(woff: np.ndarray) -> np.ndarray:
    """Extend the nonnegative-offset table to all signed offsets."""
    idx = [np.abs(np.arange(-(m - 1), m)) for m in woff.shape]
    if woff.ndim == 1:
        return woff[idx[0]]
    return woff[np.ix_(idx[0], idx[1])]


def _outside_box_tail(grid: Grid, sp: float) -> np.ndarray:
    """Per interior node: integral over its cell of the kernel mass beyond
    the lattice bounding box, evaluated from closed forms."""
    h = np.asarray(grid.h, dtype=float)
    lo_box = np.array([ax[0] for ax in grid.axes]) - h / 2.0
    hi_box = np.array([ax[-1] for ax in grid.axes]) + h / 2.0
    pts = grid.interior_points
    if grid.dim == 1:
        lo = pts[:, 0] - h[0] / 2.0
        hi = pts[:, 0] + h[0] / 2.0
        left = power_segment_integral(-sp, lo - lo_box[0], hi - lo_box[0])
        right = power_segment_integral(-sp, hi_box[0] - hi, hi_box[0] - lo)
        return (left + right) / sp

    w1, w2 = h
    c1 = halfplane_profile_constant(sp)
    x1lo, x1hi = pts[:, 0] - w1 / 2.0, pts[:, 0] + w1 / 2.0
    x2lo, x2hi = pts[:, 1] - w2 / 2.0, pts[:, 1] + w2 / 2.0
    halves = (
        w2 * power_segment_integral(-sp, x1lo - lo_box[0], x1hi - lo_box[0])
        + w2 * power_segment_integral(-sp, hi_box[0] - x1hi, hi_box[0] - x1lo)
        + w1 * power_segment_integral(-sp, x2lo - lo_box[1], x2hi - lo_box[1])
        + w1 * power_segment_integral(-sp, hi_box[1] - x2hi, hi_box[1] - x2lo)
    )
    tail = halves * c1 / sp

    # half-planes double-count the four corner quadrants
    gx, gw = leggauss(10)
    n = pts.shape[0]
    for a0 in range(0, n, _ROW_CHUNK):
        blk = pts[a0 : a0 + _ROW_CHUNK]
        g1 = blk[:, 0, None] + 0.5 * w1 * gx[None, :]
        g2 = blk[:, 1, None] + 0.5 * w2 * gx[None, :]
        corner_sum = np.zeros(blk.shape[0])
        for adist in (g1 - lo_box[0], hi_box[0] - g1):
            for bdist in (g2 - lo_box[1], hi_box[1] - g2):
                q = quadrant_integral(sp, adist[:, :, None], bdist[:, None, :])
                corner_sum += gw @ q @ gw
        tail[a0 : a0 + _ROW_CHUNK] -= 0.25 * w1 * w2 * corner_sum
    return tail


def _inbox_exterior_tail(grid: Grid, woff: np.ndarray) -> np.ndarray:
    """Sum of offset weights from each interior cell to all non-interior
    cells of the lattice, via one linear convolution."""
    ext = (~grid.interior_mask).astype(float).reshape(grid.shape)
    kern = _mirrored_kernel(woff)
    same = fftconvolve(ext, kern, mode="same")
    return same.reshape(-1)[grid.interior_idx]


def _cache_descriptor(grid: Grid, params: OperatorParams) -> dict:
    return {
        "version": _CACHE_VERSION,
        "domain": grid.domain.describe(),
        "resolution": grid.resolution,
        "s": params.s,
        "p": params.p,
    }


def _cache_path(grid: Grid, params: OperatorParams) -> Path | None:
    root = os.environ.get(_CACHE_ENV)
    if not root:
        return None
    desc = json.dumps(_cache_descriptor(grid, params), sort_keys=True)
    digest = hashlib.sha256(desc.encode()).hexdigest()[:24]
    return Path(root) / f"weights-{digest}.fwt"


def _cache_load(path: Path, grid: Grid, params: OperatorParams):
    try:
        raw = path.read_bytes()
        head, _, body = raw.partition(b"\n")
        header = json.loads(head.decode())
        if header["descriptor"] != _cache_descriptor(grid, params):
            return None
        n = grid.n_interior
        want = (n * n + n) * 8
        if len(body) != want:
            return None
        pair = np.frombuffer(body[: n * n * 8], dtype="<f8").reshape(n, n).copy()
        tail = np.frombuffer(body[n * n * 8 :], dtype="<f8").copy()
        return pair, tail
    except (OSError, ValueError, KeyError, json.JSONDecodeError):
        return None


def _cache_store(path: Path, grid: Grid, params: OperatorParams, pair, tail) -> None:
    header = json.dumps(
        {"descriptor": _cache_descriptor(grid, params), "n": grid.n_interior},
        sort_keys=True,
    ).encode()
    payload = (
        header
        + b"\n"
        + np.ascontiguousarray(pair, dtype="<f8").tobytes()
        + np.ascontiguousarray(tail, dtype="<f8").tobytes()
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_bytes(payload)
    tmp.replace(path)


def assemble_weights(grid: Grid, params: OperatorParams) -> PairWeightTable:
    """Build (or load from the FRACSOLVE_CACHE directory) the dense pair
    weight matrix and exterior tail vector for the given grid and order."""
    n = grid.n_interior
    if n > params.node_cap:
        raise MemoryBudgetError(
            f"grid has {n} interior nodes but the dense pair table is capped "
            f"at {params.node_cap}; raise node_cap or coarsen the grid"
        )
    path = _cache_path(grid, params)
    if path is not None and path.exists():
        cached = _cache_load(path, grid, params)
        if cached is not None:
            return PairWeightTable(grid, params, cached[0], cached[1])

    woff = _offset_table(grid, params)
    li = grid.lattice[grid.interior_idx]
    pair = np.empty((n, n))
    for a0 in range(0, n, _ROW_CHUNK):
        blk = np.abs(li[a0 : a0 + _ROW_CHUNK, None, :] - li[None, :, :])
        if grid.dim == 1:
            pair[a0 : a0 + _ROW_CHUNK] = woff[blk[..., 0]]
        else:
            pair[a0 : a0 + _ROW_CHUNK] = woff[blk[..., 0], blk[..., 1]]
    tail = _inbox_exterior_tail(grid, woff) + _outside_box_tail(grid, params.sp)

    if path is not None:
        _cache_store(path, grid, params, pair, tail)
    return PairWeightTable(grid, params, pair, tail)


def _interior_vector(table: PairWeightTable, u) -> np.ndarray:
    if isinstance(u, ScalarField):
        return table.grid.pack(u)
    arr = np.asarray(u, dtype=float).reshape(-1)
    if arr.size != table.grid.n_interior:
        raise ValueError(
            f"expected {table.grid.n_interior} interior values, got {arr.size}"
        )
    return arr


def _signed_power(t: np.ndarray, p: float) -> np.ndarray:
    """|t|^(p-1) sign(t), the derivative of |t|^p / p."""
    return np.sign(t) * np.abs(t) ** (p - 1.0)


def _form_power(table: PairWeightTable, u) -> np.longdouble:
    """sum_{i != j} W_ij |u_i - u_j|^p + 2 sum_i T_i |u_i|^p.

    Accumulated in extended precision: line searches compare energies whose
    genuine per-step decrease can sit below one float64 ulp of the total, so
    the sum is only rounded to double by the caller-facing wrappers.
    """
    uv = _interior_vector(table, u)
    p = table.params.p
    total = np.longdouble(0.0)
    for a0 in range(0, uv.size, _ROW_CHUNK):
        du = uv[a0 : a0 + _ROW_CHUNK, None] - uv[None, :]
        total += np.sum(
            table.pair[a0 : a0 + _ROW_CHUNK] * np.abs(du) ** p, dtype=np.longdouble
        )
    total += 2.0 * np.sum(table.tail * np.abs(uv) ** p, dtype=np.longdouble)
    return total


def seminorm(table: PairWeightTable, u) -> float:
    """Gagliardo-type seminorm of order (s, p), including the exterior tail."""
    return float(_form_power(table, u)) ** (1.0 / table.params.p)


def energy(table: PairWeightTable, u) -> float:
    """Dirichlet energy (1/p) * seminorm^p."""
    return float(energy_accumulator(table, u))


def energy_accumulator(table: PairWeightTable, u) -> np.longdouble:
    """Dirichlet energy in extended precision, for composing full objectives
    whose float64 rounding would mask genuine line-search descent."""
    return _form_power(table, u) / np.longdouble(table.params.p)


def apply_form(table: PairWeightTable, u, phi) -> float:
    """Weak pairing of the monotone operator at u with a test field phi."""
    uv = _interior_vector(table, u)
    pv = _interior_vector(table, phi)
    p = table.params.p
    parts = []
    for a0 in range(0, uv.size, _ROW_CHUNK):
        du = uv[a0 : a0 + _ROW_CHUNK, None] - uv[None, :]
        dphi = pv[a0 : a0 + _ROW_CHUNK, None] - pv[None, :]
        parts.append(
            float(np.sum(table.pair[a0 : a0 + _ROW_CHUNK] * _signed_power(du, p) * dphi))
        )
    parts.append(2.0 * float(np.sum(table.tail * _signed_power(uv, p) * pv)))
    return math.fsum(parts)


def operator_gradient(table: PairWeightTable, u) -> np.ndarray:
    """Gradient of the energy over interior nodes; pairing it with any test
    vector reproduces apply_form."""
    uv = _interior_vector(table, u)
    p = table.params.p
    grad = np.empty_like(uv)
    for a0 in range(0, uv.size, _ROW_CHUNK):
        du = uv[a0 : a0 + _ROW_CHUNK, None] - uv[None, :]
        grad[a0 : a0 + _ROW_CHUNK] = 2.0 * np.sum(
            table.pair[a0 : a0 + _ROW_CHUNK] * _signed_power(du, p), axis=1
        )
    grad += 2.0 * table.tail * _signed_power(uv, p)
    return grad
