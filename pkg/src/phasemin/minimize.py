"""Alternating minimization of the partition functional.

The outer loop alternates two exact block minimizations:

* ``update_fields`` — with the partition fixed, each phase field solves its
  linear equation on its own region (a strict minimization over fields).
* ``update_partition`` — with the fields fixed, each cell picks the label
  with the smallest marginal cost.  Keeping the current label costs the
  cell's bulk term plus the frozen volume marginal; switching away costs
  the energy released by zeroing the current phase at the cell plus the
  destination's volume marginal (zero for trash).  For a support-boundary
  cell the released energy is, to leading order, slope^2 * cell volume, so
  erosion stops exactly where the interface slope reaches sqrt(marginal):
  the cellwise rule enforces the slope law of the free boundary.

Each relabel decision uses an upper bound on its true objective change
(the neglected cross terms are nonpositive for same-signed fields), so the
sweep never increases J for nonnegative phases; a revert safeguard in
``minimize`` protects the remaining cases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .elliptic import solve_phase
from .functional import (
    FunctionalSpec,
    Partition,
    PerRegion,
    PhaseField,
    PowerLaw,
    make_partition,
    make_phase_field,
    region_volumes,
    restrict_support,
    total,
    truncate_to_sign,
)
from .grid import Grid, cell_centers

__all__ = [
    "SolveReport",
    "initial_partition",
    "update_fields",
    "update_partition",
    "minimize",
]


@dataclass(frozen=True)
class SolveReport:
    """Descent record of one minimize run.

    Attributes:
        iterations: number of completed outer cycles.
        j_history: objective after the initial pair and each half-step.
        converged: True when the relative objective change dropped below
            the requested threshold (or the partition reached a fixed
            point) before the iteration cap.
        final_volumes: per-phase region volumes of the returned partition.
        zero_set_fraction: fraction of in-mask cells where every phase
            field is exactly zero.
        outer_j: objective after each completed outer cycle (index 0 is
            the initial pair), one entry per ``outer_volumes`` row.
        outer_volumes: per-phase volumes after each outer cycle.
    """

    iterations: int
    j_history: tuple[float, ...]
    converged: bool
    final_volumes: tuple[float, ...]
    zero_set_fraction: float
    outer_j: tuple[float, ...]
    outer_volumes: tuple[tuple[float, ...], ...]


def zero_set_fraction(u: PhaseField) -> float:
    """Fraction of in-mask cells where all phase fields vanish."""
    grid = u.grid
    nonzero = np.zeros(grid.shape, dtype=bool)
    for field in u.fields:
        nonzero |= field.values != 0.0
    m = int(np.count_nonzero(grid.mask))
    return float(np.count_nonzero(grid.mask & ~nonzero)) / m


def initial_partition(
    grid: Grid, num_phases: int, seeds: list[tuple[float, ...]] | None = None
) -> Partition:
    """Full starting partition: Voronoi cells of seeds, or index stripes.

    Args:
        grid: carrier grid; every in-mask cell receives a phase label.
        num_phases: number of phases N >= 1.
        seeds: optional N points; each cell takes the label of the nearest
            seed (ties to the lowest index).  Without seeds, cells are
            split into N equal index bands along axis 0.

    Raises:
        ValueError: if the seed count does not match ``num_phases``.
    """
    if seeds is not None:
        if len(seeds) != num_phases:
            raise ValueError(
                f"got {len(seeds)} seeds for {num_phases} phases; counts must match"
            )
        pts = np.asarray(seeds, dtype=float)
        if pts.shape != (num_phases, grid.dim):
            raise ValueError(f"seed array shape {pts.shape} does not fit dim {grid.dim}")
        centers = cell_centers(grid)
        d2 = np.sum(
            (centers[..., None, :] - pts[(None,) * grid.dim]) ** 2, axis=-1
        )
        labels = 1 + np.argmin(d2, axis=-1)
    else:
        idx0 = np.arange(grid.shape[0])
        band = np.minimum((idx0 * num_phases) // grid.shape[0], num_phases - 1)
        band = band.reshape((-1,) + (1,) * (grid.dim - 1))
        labels = 1 + band * np.ones(grid.shape, dtype=np.int64)
    labels = np.where(grid.mask, labels, 0)
    return make_partition(grid, num_phases, labels)


def update_fields(
    spec: FunctionalSpec, w: Partition, u: PhaseField, tol: float = 1e-8
) -> PhaseField:
    """Re-solve every phase field on its current region.

    Args:
        spec: functional description.
        w: fixed partition supplying the per-phase regions.
        u: previous fields, used only as solver warm starts.
        tol: relative residual target for each solve.

    Returns:
        Fields minimizing the energy-plus-bulk part of the objective over
        the fixed partition; the objective never increases.
    """
    fields = [
        solve_phase(spec, w, i, tol, initial=u.fields[i - 1])
        for i in range(1, spec.num_phases + 1)
    ]
    return make_phase_field(spec.grid, [f.values for f in fields])


def _release_energy(grid: Grid, values: NDArray) -> NDArray:
    """Energy change from zeroing the field at each cell, full-shape.

    Per full edge to a masked neighbor n the edge term goes from
    (v_c - v_n)^2 to v_n^2; per wall slot 2 v_c^2 goes to 0.  The result
    is meaningful on cells of the phase that owns ``values``.
    """
    m = grid.mask
    v = values
    out = np.zeros(grid.shape)
    for a in range(grid.dim):
        left = [slice(None)] * grid.dim
        right = [slice(None)] * grid.dim
        left[a] = slice(None, -1)
        right[a] = slice(1, None)
        lt, rt = tuple(left), tuple(right)
        # contribution at the left cell of each edge, then at the right cell
        nbr_masked = m[rt]
        out[lt] += np.where(nbr_masked, v[rt] ** 2 - (v[lt] - v[rt]) ** 2, -2 * v[lt] ** 2)
        nbr_masked = m[lt]
        out[rt] += np.where(nbr_masked, v[lt] ** 2 - (v[rt] - v[lt]) ** 2, -2 * v[rt] ** 2)
        first = [slice(None)] * grid.dim
        first[a] = slice(0, 1)
        last = [slice(None)] * grid.dim
        last[a] = slice(-1, None)
        out[tuple(first)] += -2 * v[tuple(first)] ** 2
        out[tuple(last)] += -2 * v[tuple(last)] ** 2
    return out * grid.spacing ** (grid.dim - 2)


def _marginal_arrays(spec: FunctionalSpec, w: Partition) -> list[NDArray]:
    """Per-phase cellwise volume marginals, frozen at the sweep volumes."""
    grid = spec.grid
    term = spec.volume_term
    out = []
    if isinstance(term, PowerLaw):
        vols = region_volumes(w)
        for i in range(spec.num_phases):
            lam = term.a + term.b * (1.0 + term.alpha) * vols[i] ** term.alpha
            out.append(np.full(grid.shape, lam))
    elif isinstance(term, PerRegion):
        for i in range(spec.num_phases):
            out.append(term.weights[i].values.copy())
    else:  # pragma: no cover - constructor forbids other types
        raise TypeError(f"unknown volume term {term!r}")
    return out


def update_partition(spec: FunctionalSpec, u: PhaseField, w: Partition) -> Partition:
    """One cellwise label sweep with frozen volume marginals.

    For each in-mask cell the candidates are: keep the current label
    (cost: the cell's bulk term plus its volume marginal), or switch to
    any other label including trash (cost: the energy released by zeroing
    the current phase there, plus the destination's volume marginal —
    zero for trash).  The smallest cost wins; ties go to the lowest label.
    Cells whose current field is zero under a positive marginal always
    leave their phase.

    Args:
        spec: functional description.
        u: current fields (read only).
        w: current partition.

    Returns:
        The relabeled partition.  Fields are not modified here; zeroing a
        relabeled cell's old field is the next ``update_fields``'s job
        (callers comparing objectives should first restrict supports).
    """
    grid = spec.grid
    n = spec.num_phases
    hn = grid.spacing**grid.dim
    labels = w.labels
    lam = _marginal_arrays(spec, w)

    release = np.zeros(grid.shape)
    bulk = np.zeros(grid.shape)
    keep_lam = np.zeros(grid.shape)
    for i in range(1, n + 1):
        on_i = labels == i
        if not np.any(on_i):
            continue
        vals = u.fields[i - 1].values
        trunc = truncate_to_sign(vals, spec.sign_constraints[i - 1])
        mass = (vals * vals * spec.f[i - 1].values - trunc * spec.g[i - 1].values) * hn
        release[on_i] = _release_energy(grid, vals)[on_i]
        bulk[on_i] = mass[on_i]
        keep_lam[on_i] = lam[i - 1][on_i] * hn

    costs = np.empty((n + 1,) + grid.shape)
    costs[0] = release  # move to trash
    for ell in range(1, n + 1):
        costs[ell] = release + lam[ell - 1] * hn
    keep_cost = bulk + keep_lam
    idx = np.indices(grid.shape)
    costs[(labels,) + tuple(idx)] = keep_cost
    new_labels = np.argmin(costs, axis=0)
    new_labels[~grid.mask] = 0
    return make_partition(grid, n, new_labels)


def minimize(
    spec: FunctionalSpec,
    init: tuple[PhaseField, Partition] | None = None,
    max_outer: int = 100,
    tol_j: float = 1e-8,
    tol_solve: float = 1e-8,
) -> tuple[PhaseField, Partition, SolveReport]:
    """Alternate field solves and label sweeps until the objective settles.

    Args:
        spec: functional description.
        init: optional starting pair; defaults to zero fields on an
            axis-0 stripe partition (see :func:`initial_partition`).
        max_outer: cap on outer cycles, > 0.
        tol_j: relative objective-change threshold for convergence, > 0.
        tol_solve: residual target passed to the field solves, > 0.

    Returns:
        ``(u, w, report)`` with the objective history in the report; the
        final objective never exceeds the initial one.

    Raises:
        ValueError: nonpositive options or an init pair off this grid.
        SolverError: propagated from a failed field solve.
    """
    if max_outer <= 0:
        raise ValueError(f"max_outer must be positive, got {max_outer}")
    if not (tol_j > 0.0 and tol_solve > 0.0):
        raise ValueError(f"tolerances must be positive, got {tol_j}, {tol_solve}")
    grid = spec.grid
    if init is None:
        w = initial_partition(grid, spec.num_phases)
        u = make_phase_field(grid, [np.zeros(grid.shape)] * spec.num_phases)
    else:
        u, w = init
        if u.grid is not grid or w.grid is not grid:
            raise ValueError("init pair grid does not match the functional's grid")
        u = restrict_support(u, w)

    j = total(u, w, spec)
    slack = 1e-10 * (1.0 + abs(j))
    j_history = [j]
    outer_j = [j]
    outer_volumes = [region_volumes(w)]
    converged = False
    iterations = 0
    for _ in range(max_outer):
        u = update_fields(spec, w, u, tol_solve)
        j_fields = total(u, w, spec)
        j_history.append(j_fields)

        w_new = update_partition(spec, u, w)
        u_new = restrict_support(u, w_new)
        j_new = total(u_new, w_new, spec)
        if j_new > j_fields + slack:
            # the sweep's estimate was optimistic (possible with mixed-sign
            # fields); discard the sweep and stop at the solved pair
            j_history.append(j_fields)
            outer_j.append(j_fields)
            outer_volumes.append(region_volumes(w))
            iterations += 1
            converged = True
            break
        same_partition = bool(np.array_equal(w_new.labels, w.labels))
        u, w = u_new, w_new
        j_history.append(j_new)
        outer_j.append(j_new)
        outer_volumes.append(region_volumes(w))
        iterations += 1
        if same_partition or abs(j - j_new) <= tol_j * (1.0 + abs(j_new)):
            j = j_new
            converged = True
            break
        j = j_new

    report = SolveReport(
        iterations=iterations,
        j_history=tuple(j_history),
        converged=converged,
        final_volumes=region_volumes(w),
        zero_set_fraction=zero_set_fraction(u),
        outer_j=tuple(outer_j),
        outer_volumes=tuple(outer_volumes),
    )
    return u, w, report
