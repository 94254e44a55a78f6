"""Objective evaluation for multi-phase fields on partitioned grids.

The objective is a sum of three parts:

* ``energy``: the gradient energies of all phase fields,
* ``mass_term``: the zeroth-order coupling ``sum (u_i**2 f_i - u_i g_i)``,
* ``volume_value``: a cost on the labeled-region volumes, either a
  power law ``sum_i a|W_i| + b|W_i|**(1+alpha)`` or a per-region weight
  integral ``sum_i integral_{W_i} q_i``.

A configuration is a pair of a :class:`PhaseField` (one scalar field per
phase) and a :class:`Partition` (one label per cell, label 0 being the
unassigned "trash" zone with no volume cost).  Admissibility means each
field vanishes off its own labeled region and respects its sign
constraint; :func:`total` enforces support admissibility.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from numpy.typing import NDArray

from .grid import Grid, ScalarField, gradient_energy, make_field, sample

__all__ = [
    "PowerLaw",
    "PerRegion",
    "VolumeTerm",
    "FunctionalSpec",
    "PhaseField",
    "Partition",
    "MarginalCosts",
    "NONNEGATIVE",
    "FREE",
    "make_functional_spec",
    "make_phase_field",
    "make_partition",
    "partition_from_supports",
    "region_volumes",
    "energy",
    "mass_term",
    "volume_value",
    "total",
    "volume_marginal",
    "truncate_to_sign",
    "restrict_support",
    "support_mask",
]

NONNEGATIVE = "nonnegative"
FREE = "free"


@dataclass(frozen=True)
class PowerLaw:
    """Volume cost ``sum_i a*|W_i| + b*|W_i|**(1+alpha)`` with a, b >= 0."""

    a: float
    b: float
    alpha: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.a) and self.a >= 0.0):
            raise ValueError(f"power-law coefficient a must be >= 0, got {self.a}")
        if not (np.isfinite(self.b) and self.b >= 0.0):
            raise ValueError(f"power-law coefficient b must be >= 0, got {self.b}")
        if not (np.isfinite(self.alpha) and self.alpha > 0.0):
            raise ValueError(f"power-law exponent alpha must be > 0, got {self.alpha}")


@dataclass(frozen=True)
class PerRegion:
    """Volume cost ``sum_i integral_{W_i} q_i``; weights may be negative."""

    weights: tuple[ScalarField, ...]


VolumeTerm = Union[PowerLaw, PerRegion]


@dataclass(frozen=True)
class FunctionalSpec:
    """Problem data: coefficients, sign constraints, and the volume term.

    Attributes:
        grid: the carrier grid.
        num_phases: number of phases N >= 1 (labels run 1..N).
        f: per-phase nonnegative coefficient fields (quadratic term).
        g: per-phase source fields (linear term).
        sign_constraints: per phase, ``"nonnegative"`` or ``"free"``.
        volume_term: PowerLaw or PerRegion.
    """

    grid: Grid
    num_phases: int
    f: tuple[ScalarField, ...]
    g: tuple[ScalarField, ...]
    sign_constraints: tuple[str, ...]
    volume_term: VolumeTerm


@dataclass(frozen=True)
class PhaseField:
    """One scalar field per phase on a shared grid."""

    grid: Grid
    fields: tuple[ScalarField, ...]

    @property
    def num_phases(self) -> int:
        return len(self.fields)


@dataclass(frozen=True)
class Partition:
    """Per-cell labels in {0..N}; 0 marks the costless unassigned zone."""

    grid: Grid
    num_phases: int
    labels: NDArray[np.int64]


@dataclass(frozen=True)
class MarginalCosts:
    """Per-phase marginal volume costs and the volumes they were taken at."""

    lam: tuple[float, ...]
    valid_at: tuple[float, ...]


def make_functional_spec(
    grid: Grid,
    f: Sequence[ScalarField | float],
    g: Sequence[ScalarField | float],
    sign_constraints: Sequence[str] | str,
    volume_term: VolumeTerm,
) -> FunctionalSpec:
    """Validate and assemble a FunctionalSpec.

    Args:
        grid: carrier grid.
        f: per-phase nonnegative coefficients (scalars broadcast to fields).
        g: per-phase sources, same length as ``f``.
        sign_constraints: one constraint per phase, or a single string for all.
        volume_term: the volume cost; a PerRegion term must carry one weight
            field per phase.

    Raises:
        ValueError: on any violated invariant.
    """
    if len(f) != len(g) or len(f) == 0:
        raise ValueError("f and g must be nonempty and of equal length")
    num_phases = len(f)

    def as_field(v) -> ScalarField:
        if isinstance(v, ScalarField):
            if v.grid.shape != grid.shape:
                raise ValueError("coefficient field grid does not match spec grid")
            return v
        return make_field(grid, float(v))

    f_t = tuple(as_field(v) for v in f)
    g_t = tuple(as_field(v) for v in g)
    for i, fi in enumerate(f_t):
        if np.any(fi.values < 0.0):
            raise ValueError(f"f[{i}] must be nonnegative everywhere")
    if isinstance(sign_constraints, str):
        signs = (sign_constraints,) * num_phases
    else:
        signs = tuple(sign_constraints)
    if len(signs) != num_phases:
        raise ValueError("one sign constraint per phase required")
    for s in signs:
        if s not in (NONNEGATIVE, FREE):
            raise ValueError(f"unknown sign constraint {s!r}")
    if isinstance(volume_term, PerRegion):
        if len(volume_term.weights) != num_phases:
            raise ValueError("PerRegion needs one weight field per phase")
        for q in volume_term.weights:
            if q.grid.shape != grid.shape:
                raise ValueError("PerRegion weight grid does not match spec grid")
    elif not isinstance(volume_term, PowerLaw):
        raise ValueError(f"unknown volume term {volume_term!r}")
    return FunctionalSpec(
        grid=grid,
        num_phases=num_phases,
        f=f_t,
        g=g_t,
        sign_constraints=signs,
        volume_term=volume_term,
    )


def make_phase_field(grid: Grid, fields: Sequence[ScalarField | NDArray]) -> PhaseField:
    """Bundle per-phase values into a PhaseField on one grid."""
    out = []
    for v in fields:
        fld = v if isinstance(v, ScalarField) else make_field(grid, v)
        if fld.grid.shape != grid.shape:
            raise ValueError("phase field grid mismatch")
        out.append(fld)
    if not out:
        raise ValueError("at least one phase required")
    return PhaseField(grid=grid, fields=tuple(out))


def make_partition(grid: Grid, num_phases: int, labels: NDArray) -> Partition:
    """Validate labels in {0..N}, forcing label 0 off the mask."""
    arr = np.asarray(labels, dtype=np.int64)
    if arr.shape != grid.shape:
        raise ValueError(f"labels shape {arr.shape} does not match grid {grid.shape}")
    if arr.min() < 0 or arr.max() > num_phases:
        raise ValueError(f"labels must lie in 0..{num_phases}")
    arr = arr.copy()
    arr[~grid.mask] = 0
    arr.setflags(write=False)
    return Partition(grid=grid, num_phases=num_phases, labels=arr)


def support_mask(u: PhaseField, i: int) -> NDArray[np.bool_]:
    """Boolean mask of cells where phase ``i`` (1-based) is nonzero."""
    return u.fields[i - 1].values != 0.0


def partition_from_supports(u: PhaseField) -> Partition:
    """Label each cell by the unique phase supported there (0 if none).

    Raises:
        ValueError: if two phases overlap on some cell.
    """
    labels = np.zeros(u.grid.shape, dtype=np.int64)
    for i in range(1, u.num_phases + 1):
        sup = support_mask(u, i)
        if np.any(labels[sup] != 0):
            raise ValueError("phase supports overlap; no valid partition")
        labels[sup] = i
    return make_partition(u.grid, u.num_phases, labels)


def region_volumes(w: Partition) -> tuple[float, ...]:
    """Per-phase volumes ``count(label == i) * h**n`` for i = 1..N."""
    vol = w.grid.cell_volume
    return tuple(
        float(np.count_nonzero(w.labels == i)) * vol for i in range(1, w.num_phases + 1)
    )


def energy(u: PhaseField) -> float:
    """Total gradient energy over all phases; nonnegative."""
    return float(sum(gradient_energy(f) for f in u.fields))


def mass_term(u: PhaseField, spec: FunctionalSpec) -> float:
    """Zeroth-order coupling ``sum_i sum_cells (u_i**2 f_i - u_i g_i) * h**n``."""
    vol = u.grid.cell_volume
    out = 0.0
    for fld, fi, gi in zip(u.fields, spec.f, spec.g):
        v = fld.values
        out += float(np.sum(v * v * fi.values - v * gi.values)) * vol
    return out


def volume_value(w: Partition, vt: VolumeTerm) -> float:
    """Volume cost of the labeled regions (trash label 0 costs nothing)."""
    if isinstance(vt, PowerLaw):
        vols = region_volumes(w)
        return float(sum(vt.a * v + vt.b * v ** (1.0 + vt.alpha) for v in vols))
    if isinstance(vt, PerRegion):
        vol = w.grid.cell_volume
        out = 0.0
        for i, q in enumerate(vt.weights, start=1):
            out += float(np.sum(q.values[w.labels == i])) * vol
        return out
    raise ValueError(f"unknown volume term {vt!r}")


def total(u: PhaseField, w: Partition, spec: FunctionalSpec) -> float:
    """Full objective value ``energy + mass_term + volume_value``.

    Raises:
        ValueError: if some phase is nonzero outside its labeled region or a
            nonnegative-constrained phase has a negative value.
    """
    if u.num_phases != w.num_phases or u.num_phases != spec.num_phases:
        raise ValueError("phase counts of field, partition, and spec disagree")
    for i in range(1, u.num_phases + 1):
        vals = u.fields[i - 1].values
        if np.any(vals[w.labels != i] != 0.0):
            raise ValueError(f"phase {i} has support outside its labeled region")
        if spec.sign_constraints[i - 1] == NONNEGATIVE and np.any(vals < 0.0):
            raise ValueError(f"phase {i} violates its nonnegative constraint")
    return energy(u) + mass_term(u, spec) + volume_value(w, spec.volume_term)


def volume_marginal(w: Partition, vt: VolumeTerm, at=None) -> MarginalCosts:
    """Per-phase marginal cost of volume at the current region volumes.

    PowerLaw: ``lam_i = a + b*(1+alpha)*|W_i|**alpha``.  PerRegion:
    ``lam_i = q_i(at)``, the weight value at the given point.

    Args:
        w: the partition (supplies current volumes).
        vt: the volume term.
        at: evaluation point, required for PerRegion terms.

    Raises:
        ValueError: PerRegion without ``at``.
    """
    vols = region_volumes(w)
    if isinstance(vt, PowerLaw):
        lam = tuple(float(vt.a + vt.b * (1.0 + vt.alpha) * v**vt.alpha) for v in vols)
        return MarginalCosts(lam=lam, valid_at=vols)
    if isinstance(vt, PerRegion):
        if at is None:
            raise ValueError("PerRegion marginal requires an evaluation point `at`")
        lam = tuple(float(sample(q, at)) for q in vt.weights)
        return MarginalCosts(lam=lam, valid_at=vols)
    raise ValueError(f"unknown volume term {vt!r}")


def truncate_to_sign(values: NDArray, constraint: str) -> NDArray:
    """Apply a sign constraint pointwise (positive part for nonnegative)."""
    if constraint == NONNEGATIVE:
        return np.maximum(values, 0.0)
    return values


def restrict_support(u: PhaseField, w: Partition) -> PhaseField:
    """Zero each phase field outside its region, making the pair admissible."""
    fields = [
        np.where(w.labels == i, u.fields[i - 1].values, 0.0)
        for i in range(1, u.num_phases + 1)
    ]
    return make_phase_field(u.grid, fields)
