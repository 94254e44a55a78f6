"""Uniform Cartesian grids with cell-centered values.

This module holds the spatial plumbing shared by every other module: the
grid description (cell counts, spacing, origin, domain mask), scalar fields
living on grid cells, discrete ball index sets, the five-point Laplacian,
the edge-based gradient energy, multilinear sampling, and a plain-text
serialization format for grids, masks, and fields.

Conventions
-----------
* The cell with index ``(0, ..., 0)`` has its center at ``origin``; cell
  ``(i_0, ..., i_{d-1})`` is centered at ``origin + i * spacing``.
* Cells whose center lies outside the domain (``mask`` false) carry the
  value 0 in every field.
* Edges leaving the grid box, and edges from a masked cell to an unmasked
  cell, are "wall" edges: the zero is imposed on the shared cell face at
  distance ``h/2``, so a wall edge contributes ``2 * u**2 * h**(n-2)`` to
  the gradient energy and ``-2 * u / h**2`` to the Laplacian.  This
  face-centered convention makes the discrete energy of smooth profiles
  second-order accurate and keeps summation by parts exact.  "Masked
  neighbor" below always means in-box and mask-true.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray


__all__ = [
    "Grid",
    "ScalarField",
    "BallIndex",
    "make_grid",
    "make_field",
    "cell_centers",
    "axis_centers",
    "bounding_box",
    "ball_cells",
    "sample",
    "laplacian_apply",
    "gradient_energy",
    "wall_slot_count",
    "save_field",
    "load_field",
    "save_mask",
    "load_mask",
    "format_float",
]


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform cell-centered grid over a rectangular index box.

    Attributes:
        dim: spatial dimension, 1 or 2.
        shape: number of cells along each axis.
        spacing: cell width ``h`` (identical along every axis).
        origin: physical coordinates of the center of cell ``(0, ..., 0)``.
        mask: boolean array of shape ``shape``; True marks cells whose
            center belongs to the computational domain.
    """

    dim: int
    shape: tuple[int, ...]
    spacing: float
    origin: tuple[float, ...]
    mask: NDArray[np.bool_]

    @property
    def num_cells(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return float(self.spacing**self.dim)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A 64-bit float value per grid cell; zero on unmasked cells."""

    grid: Grid
    values: NDArray[np.float64]


@dataclass(frozen=True)
class BallIndex:
    """Cells whose centers lie strictly inside a ball.

    Attributes:
        center: ball center in physical coordinates.
        radius: ball radius.
        cells: sorted, duplicate-free flat (row-major) cell indices with
            ``|cell_center - center| < radius``.
    """

    center: tuple[float, ...]
    radius: float
    cells: NDArray[np.intp]


def _as_point(grid_or_dim: Grid | int, x: float | Sequence[float]) -> NDArray[np.float64]:
    dim = grid_or_dim.dim if isinstance(grid_or_dim, Grid) else grid_or_dim
    pt = np.atleast_1d(np.asarray(x, dtype=float))
    if pt.shape != (dim,):
        raise ValueError(f"point {x!r} does not have dimension {dim}")
    return pt


def make_grid(
    dim: int,
    shape: Sequence[int],
    spacing: float,
    origin: Sequence[float] | float | None = None,
    mask: NDArray | None = None,
) -> Grid:
    """Build and validate a Grid.

    Args:
        dim: 1 or 2.
        shape: cells per axis; every entry must be at least 3.
        spacing: positive cell width.
        origin: center of the first cell; defaults to ``spacing/2`` per
            axis, which places the grid box on ``(0, L)`` per axis.
        mask: optional boolean domain mask (default: all cells inside).

    Raises:
        ValueError: on any violated invariant.
    """
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    shape_t = tuple(int(s) for s in shape)
    if len(shape_t) != dim:
        raise ValueError(f"shape {shape_t} does not match dim {dim}")
    if any(s < 3 for s in shape_t):
        raise ValueError(f"every shape entry must be >= 3, got {shape_t}")
    spacing = float(spacing)
    if not np.isfinite(spacing) or spacing <= 0.0:
        raise ValueError(f"spacing must be positive and finite, got {spacing}")
    if origin is None:
        origin_t = (spacing / 2.0,) * dim
    else:
        origin_arr = np.atleast_1d(np.asarray(origin, dtype=float))
        if origin_arr.shape != (dim,):
            raise ValueError(f"origin {origin!r} does not match dim {dim}")
        origin_t = tuple(float(v) for v in origin_arr)
    if mask is None:
        mask_arr = np.ones(shape_t, dtype=bool)
    else:
        mask_arr = np.asarray(mask, dtype=bool)
        if mask_arr.shape != shape_t:
            raise ValueError(
                f"mask shape {mask_arr.shape} does not match grid shape {shape_t}"
            )
        mask_arr = mask_arr.copy()
    mask_arr.setflags(write=False)
    return Grid(dim=dim, shape=shape_t, spacing=spacing, origin=origin_t, mask=mask_arr)


def make_field(grid: Grid, values: NDArray | float) -> ScalarField:
    """Build a ScalarField, zeroing unmasked cells and validating finiteness.

    Args:
        grid: the carrier grid.
        values: array of shape ``grid.shape`` or a scalar to broadcast.

    Raises:
        ValueError: if the shape mismatches or any masked value is not finite.
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(grid.shape, float(arr))
    if arr.shape != grid.shape:
        raise ValueError(f"values shape {arr.shape} does not match grid {grid.shape}")
    arr = arr.copy()
    arr[~grid.mask] = 0.0
    if not np.all(np.isfinite(arr)):
        raise ValueError("field values must be finite")
    arr.setflags(write=False)
    return ScalarField(grid=grid, values=arr)


def axis_centers(grid: Grid, axis: int) -> NDArray[np.float64]:
    """Physical center coordinates of cells along one axis."""
    return grid.origin[axis] + grid.spacing * np.arange(grid.shape[axis])


def cell_centers(grid: Grid) -> NDArray[np.float64]:
    """Array of shape ``(*grid.shape, dim)`` with every cell-center coordinate."""
    axes = [axis_centers(grid, a) for a in range(grid.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1)


def bounding_box(grid: Grid) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Physical bounding box ``(lo, hi)`` of the union of all cells."""
    lo = np.asarray(grid.origin) - grid.spacing / 2.0
    hi = np.asarray(grid.origin) + grid.spacing * (np.asarray(grid.shape) - 1) + grid.spacing / 2.0
    return lo, hi


def ball_cells(grid: Grid, x0: float | Sequence[float], r: float) -> BallIndex:
    """Cells with center strictly inside the ball ``B(x0, r)``.

    Membership ignores the mask: callers that need masked balls filter the
    result themselves.

    Args:
        grid: the grid.
        x0: ball center (scalar accepted in 1D).
        r: positive radius.

    Raises:
        ValueError: if ``r <= 0`` or the ball contains no cell center.
    """
    if not (r > 0.0):
        raise ValueError(f"radius must be positive, got {r}")
    pt = _as_point(grid, x0)
    dist2 = np.zeros(grid.shape)
    for a in range(grid.dim):
        coord = axis_centers(grid, a) - pt[a]
        shape = [1] * grid.dim
        shape[a] = grid.shape[a]
        dist2 = dist2 + (coord**2).reshape(shape)
    inside = dist2 < r * r
    cells = np.flatnonzero(inside.ravel(order="C"))
    if cells.size == 0:
        raise ValueError(f"ball B({tuple(pt)}, {r}) contains no cell center")
    return BallIndex(center=tuple(float(v) for v in pt), radius=float(r), cells=cells)


def sample(f: ScalarField, x: float | Sequence[float]) -> float:
    """Multilinear interpolation of a field at a physical point.

    Between the outermost cell centers and the bounding-box face the stencil
    clamps to the edge cell (constant extrapolation over the half-cell rim).

    Args:
        f: the field.
        x: point inside the grid's physical bounding box.

    Raises:
        ValueError: if ``x`` lies outside the bounding box.
    """
    grid = f.grid
    pt = _as_point(grid, x)
    lo, hi = bounding_box(grid)
    eps = 1e-12 * (1.0 + np.abs(pt))
    if np.any(pt < lo - eps) or np.any(pt > hi + eps):
        raise ValueError(f"sample point {tuple(pt)} outside bounding box")
    t = (pt - np.asarray(grid.origin)) / grid.spacing
    i0 = np.floor(t).astype(int)
    i0 = np.clip(i0, 0, np.asarray(grid.shape) - 2)
    w = np.clip(t - i0, 0.0, 1.0)
    total = 0.0
    for corner in range(1 << grid.dim):
        idx = []
        weight = 1.0
        for a in range(grid.dim):
            bit = (corner >> a) & 1
            idx.append(i0[a] + bit)
            weight *= w[a] if bit else (1.0 - w[a])
        if weight != 0.0:
            total += weight * float(f.values[tuple(idx)])
    return float(total)


def _axis_slices(dim: int, axis: int) -> tuple[tuple[slice, ...], tuple[slice, ...]]:
    """Index tuples selecting the left/right cells of every edge along an axis."""
    left = [slice(None)] * dim
    right = [slice(None)] * dim
    left[axis] = slice(None, -1)
    right[axis] = slice(1, None)
    return tuple(left), tuple(right)


def _face_slice(dim: int, axis: int, last: bool) -> tuple[slice, ...]:
    sl = [slice(None)] * dim
    sl[axis] = slice(-1, None) if last else slice(0, 1)
    return tuple(sl)


def wall_slot_count(grid: Grid) -> NDArray[np.int64]:
    """Per-cell count of wall edges (box faces plus unmasked neighbors)."""
    count = np.zeros(grid.shape, dtype=np.int64)
    m = grid.mask
    for a in range(grid.dim):
        left, right = _axis_slices(grid.dim, a)
        count[left] += (~m[right]).astype(np.int64)
        count[right] += (~m[left]).astype(np.int64)
        count[_face_slice(grid.dim, a, last=False)] += 1
        count[_face_slice(grid.dim, a, last=True)] += 1
    count[~m] = 0
    return count


def laplacian_apply(f: ScalarField) -> ScalarField:
    """Apply the discrete Laplacian with Dirichlet-zero data outside the mask.

    At a masked cell the value is
    ``(sum over masked neighbors of (f_nbr - f_c) - 2 * walls(c) * f_c) / h**2``
    where ``walls(c)`` counts box faces and unmasked neighbors.  Unmasked
    cells map to 0.
    """
    grid = f.grid
    v = f.values
    m = grid.mask
    acc = np.zeros(grid.shape)
    for a in range(grid.dim):
        left, right = _axis_slices(grid.dim, a)
        ml, mr = m[left], m[right]
        both = ml & mr
        d = v[right] - v[left]
        # masked-masked edges: +d to the left cell, -d to the right cell
        contrib_left = np.where(both, d, 0.0)
        contrib_right = np.where(both, -d, 0.0)
        # masked cell with unmasked neighbor: wall at the face
        contrib_left = contrib_left + np.where(ml & ~mr, -2.0 * v[left], 0.0)
        contrib_right = contrib_right + np.where(~ml & mr, -2.0 * v[right], 0.0)
        acc[left] += contrib_left
        acc[right] += contrib_right
        first = _face_slice(grid.dim, a, last=False)
        last = _face_slice(grid.dim, a, last=True)
        acc[first] += -2.0 * v[first]
        acc[last] += -2.0 * v[last]
    acc /= grid.spacing**2
    acc[~m] = 0.0
    return make_field(grid, acc)


def _normalize_region(grid: Grid, region) -> NDArray[np.bool_] | None:
    if region is None:
        return None
    arr = np.asarray(region)
    if arr.dtype == bool and arr.shape == grid.shape:
        return arr
    flat = np.zeros(grid.num_cells, dtype=bool)
    flat[np.asarray(arr, dtype=np.intp)] = True
    return flat.reshape(grid.shape)


def gradient_energy(f: ScalarField, region=None) -> float:
    """Edge-sum gradient energy ``sum (difference)**2 * h**(n-2)``.

    Edges between masked cells contribute ``(f_b - f_a)**2``; wall edges
    (box face or unmasked neighbor) contribute ``2 * f**2`` for the masked
    endpoint, the factor 2 reflecting the half-spacing distance to the wall.

    Args:
        f: the field.
        region: optional cell set (boolean mask over cells or flat indices);
            only edges with at least one endpoint in the region are summed.

    Returns:
        Nonnegative energy value.
    """
    grid = f.grid
    v = f.values
    m = grid.mask
    reg = _normalize_region(grid, region)
    total = 0.0
    for a in range(grid.dim):
        left, right = _axis_slices(grid.dim, a)
        ml, mr = m[left], m[right]
        if reg is None:
            sel_full = ml & mr
            sel_wall_l = ml & ~mr
            sel_wall_r = ~ml & mr
        else:
            rl, rr = reg[left], reg[right]
            either = rl | rr
            sel_full = ml & mr & either
            sel_wall_l = ml & ~mr & rl
            sel_wall_r = ~ml & mr & rr
        d = v[right] - v[left]
        total += float(np.sum(np.where(sel_full, d * d, 0.0)))
        total += 2.0 * float(np.sum(np.where(sel_wall_l, v[left] ** 2, 0.0)))
        total += 2.0 * float(np.sum(np.where(sel_wall_r, v[right] ** 2, 0.0)))
        for last in (False, True):
            face = _face_slice(grid.dim, a, last)
            if reg is None:
                sel_face = m[face]
            else:
                sel_face = m[face] & reg[face]
            total += 2.0 * float(np.sum(np.where(sel_face, v[face] ** 2, 0.0)))
    return total * grid.spacing ** (grid.dim - 2)


# ---------------------------------------------------------------------------
# plain-text serialization
# ---------------------------------------------------------------------------


def format_float(v: float) -> str:
    """Shortest decimal string that round-trips to the same 64-bit float."""
    return repr(float(v))


def _write_header(fh, grid: Grid) -> None:
    fh.write(f"dim {grid.dim}\n")
    fh.write("shape " + " ".join(str(s) for s in grid.shape) + "\n")
    fh.write("spacing " + format_float(grid.spacing) + "\n")
    fh.write("origin " + " ".join(format_float(v) for v in grid.origin) + "\n")


def _write_values(fh, grid: Grid, values: NDArray, fmt) -> None:
    flat = values.reshape(grid.shape[0], -1)
    for row in flat:
        fh.write(" ".join(fmt(v) for v in row) + "\n")


def _read_header(lines: list[str]) -> tuple[int, tuple[int, ...], float, tuple[float, ...], int]:
    def tokens(i: int, key: str) -> list[str]:
        parts = lines[i].split()
        if not parts or parts[0] != key:
            raise ValueError(f"expected '{key}' on line {i + 1} of field file")
        return parts[1:]

    dim = int(tokens(0, "dim")[0])
    shape = tuple(int(t) for t in tokens(1, "shape"))
    spacing = float(tokens(2, "spacing")[0])
    origin = tuple(float(t) for t in tokens(3, "origin"))
    return dim, shape, spacing, origin, 4


def _read_body(lines: list[str], start: int, shape: tuple[int, ...]) -> NDArray[np.float64]:
    toks: list[str] = []
    for line in lines[start:]:
        toks.extend(line.split())
    n = int(np.prod(shape))
    if len(toks) != n:
        raise ValueError(f"field file has {len(toks)} values, expected {n}")
    return np.asarray([float(t) for t in toks]).reshape(shape)


def save_field(f: ScalarField, path) -> None:
    """Write a field as a plain-text header plus row-major values."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        _write_header(fh, f.grid)
        _write_values(fh, f.grid, f.values, format_float)


def load_field(path, grid: Grid | None = None) -> ScalarField:
    """Read a field written by :func:`save_field`.

    Args:
        path: file path.
        grid: optional grid to attach (its mask is applied); the header must
            agree with it.  Without a grid, an all-true-mask grid is built
            from the header.

    Raises:
        ValueError: on malformed files or header/grid mismatch.
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    dim, shape, spacing, origin, start = _read_header(lines)
    values = _read_body(lines, start, shape)
    if grid is None:
        grid = make_grid(dim, shape, spacing, origin)
    else:
        if (
            grid.dim != dim
            or grid.shape != shape
            or grid.spacing != spacing
            or tuple(grid.origin) != origin
        ):
            raise ValueError(f"field file header does not match the provided grid")
    return make_field(grid, values)


def save_mask(grid: Grid, path) -> None:
    """Write the domain mask as a 0/1 field in the standard text format."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        _write_header(fh, grid)
        _write_values(fh, grid, grid.mask.astype(int), lambda v: str(int(v)))


def load_mask(path) -> Grid:
    """Read a mask file written by :func:`save_mask` into a Grid."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    dim, shape, spacing, origin, start = _read_header(lines)
    values = _read_body(lines, start, shape)
    return make_grid(dim, shape, spacing, origin, mask=values != 0)
