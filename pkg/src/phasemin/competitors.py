"""Explicit competitor constructions and the local-minimality audit.

Both competitors modify a pair only inside a ball ``B(x0, r)`` and return a
fully admissible pair together with the exact objective change, measured by
evaluating the objective on both pairs (never by a shortcut formula):

* cut-off — selected phases are multiplied by a radial ramp that vanishes
  on ``B(x0, a r)``; fully vacated cells there may be trashed when that
  strictly lowers the volume term.
* harmonic — one distinguished phase absorbs ``B(x0, a r)``, its values
  there replaced by the discrete harmonic extension of the surrounding
  data, while the other phases are radially cut off; annulus labels are
  copied along rays from just outside the ball.

On a converged pair every competitor should (near-)fail to improve the
objective; the audit aggregates many such attempts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .elliptic import _pcg
from .functional import (
    NONNEGATIVE,
    FunctionalSpec,
    Partition,
    PerRegion,
    PhaseField,
    PowerLaw,
    make_partition,
    make_phase_field,
    total,
)
from .grid import Grid, bounding_box, cell_centers, format_float

__all__ = [
    "AuditEntry",
    "AuditSkip",
    "AuditReport",
    "cutoff_competitor",
    "harmonic_competitor",
    "audit",
    "audit_report_csv",
    "seeded_probes",
]


@dataclass(frozen=True)
class AuditEntry:
    """One competitor evaluation: where, which construction, and ΔJ."""

    x0: tuple[float, ...]
    r: float
    kind: str  # "cutoff" | "harmonic"
    a: float
    main: int | None  # harmonic only
    delta_j: float


@dataclass(frozen=True)
class AuditSkip:
    """A probe/competitor combination whose preconditions failed."""

    x0: tuple[float, ...]
    r: float
    kind: str
    note: str


@dataclass(frozen=True)
class AuditReport:
    """Aggregate of all competitor evaluations over the probe list.

    Attributes:
        entries: successful evaluations in deterministic order.
        skipped: precondition failures with their reasons.
        min_delta_j: smallest objective change seen (0.0 with no entries).
        worst: the entry attaining ``min_delta_j`` (None with no entries).
    """

    entries: tuple[AuditEntry, ...]
    skipped: tuple[AuditSkip, ...]
    min_delta_j: float
    worst: AuditEntry | None


def _probe_point(grid: Grid, x0) -> NDArray:
    pt = np.atleast_1d(np.asarray(x0, dtype=float))
    if pt.shape != (grid.dim,):
        raise ValueError(f"probe point {x0!r} does not match grid dimension {grid.dim}")
    return pt


def _distances(grid: Grid, pt: NDArray) -> NDArray:
    return np.sqrt(np.sum((cell_centers(grid) - pt) ** 2, axis=-1))


def _trash_benefit(spec: FunctionalSpec, labels: NDArray) -> NDArray[np.bool_]:
    """Cells whose removal from their region strictly lowers the volume term."""
    term = spec.volume_term
    if isinstance(term, PowerLaw):
        gain = term.a > 0.0 or term.b > 0.0
        return (labels > 0) & gain
    out = np.zeros(labels.shape, dtype=bool)
    if isinstance(term, PerRegion):
        for i in range(1, spec.num_phases + 1):
            out |= (labels == i) & (term.weights[i - 1].values > 0.0)
    return out


def cutoff_competitor(
    u: PhaseField,
    w: Partition,
    spec: FunctionalSpec,
    x0,
    r: float,
    a: float,
    phases,
) -> tuple[PhaseField, Partition, float]:
    """Damp selected phases to zero on ``B(x0, a r)`` with a radial ramp.

    The ramp is 0 up to radius ``a r`` and rises linearly to 1 at ``r``.
    Cells of the inner ball on which every phase now vanishes are trashed
    when that strictly lowers the volume term.

    Args:
        u, w: the pair under audit (unchanged).
        spec: functional description.
        x0: ball center; r: ball radius; a: inner-hole fraction in (0,1).
        phases: iterable of phase indices to damp (may be empty).

    Returns:
        ``(u*, w*, delta_j)`` with ``delta_j = J(u*,w*) - J(u,w)``.

    Raises:
        ValueError: bad ``a``, bad phase index, or a ball missing the mask.
    """
    if not 0.0 < a < 1.0:
        raise ValueError(f"cutoff fraction a must lie in (0,1), got {a}")
    grid = spec.grid
    pt = _probe_point(grid, x0)
    d = _distances(grid, pt)
    if not np.any(grid.mask & (d < r)):
        raise ValueError(f"ball at {tuple(pt)} radius {r} misses every masked cell")
    chosen = sorted(set(int(i) for i in phases))
    for i in chosen:
        if not 1 <= i <= spec.num_phases:
            raise ValueError(f"phase index {i} out of range 1..{spec.num_phases}")
    ramp = np.clip((d - a * r) / ((1.0 - a) * r), 0.0, 1.0)
    fields = []
    for i in range(1, spec.num_phases + 1):
        vals = u.fields[i - 1].values
        fields.append(ramp * vals if i in chosen else vals.copy())
    vacated = np.ones(grid.shape, dtype=bool)
    for vals in fields:
        vacated &= vals == 0.0
    labels = w.labels.copy()
    trash = (d < a * r) & vacated & _trash_benefit(spec, labels) & grid.mask
    labels[trash] = 0
    u_star = make_phase_field(grid, fields)
    w_star = make_partition(grid, spec.num_phases, labels)
    delta = total(u_star, w_star, spec) - total(u, w, spec)
    return u_star, w_star, delta


def _ray_sources(grid: Grid, pt: NDArray, r: float, annulus: NDArray[np.bool_]) -> NDArray:
    """Flat indices of the just-outside-the-ball cell hit by each ray.

    For each annulus cell the ray from x0 through its center is followed to
    radius r + h/2 (nudged outward until the landing cell sits at distance
    >= r), and the nearest cell is taken.  Returns an array shaped like the
    grid, valid on the annulus.
    """
    centers = cell_centers(grid)
    h = grid.spacing
    lo, hi = bounding_box(grid)
    delta = centers - pt
    dist = np.sqrt(np.sum(delta**2, axis=-1))
    safe = np.where(dist > 0, dist, 1.0)
    direction = delta / safe[..., None]
    src = np.zeros(grid.shape, dtype=np.int64)
    d_flat = dist.reshape(-1)
    todo = annulus.copy()
    rho = r + 0.5 * h
    for _ in range(4):
        if not np.any(todo):
            break
        target = pt + rho * direction[todo]
        target = np.clip(target, lo + 0.4 * h, hi - 0.4 * h)
        idx = np.round((target - np.asarray(grid.origin)) / h).astype(np.int64)
        idx = np.clip(idx, 0, np.asarray(grid.shape) - 1)
        flat = np.ravel_multi_index(tuple(idx.T), grid.shape)
        src[todo] = flat
        still = d_flat[flat] < r
        nxt = np.zeros(grid.shape, dtype=bool)
        nxt[todo] = still
        todo = nxt
        rho += 0.5 * h
    return src


def harmonic_competitor(
    u: PhaseField,
    w: Partition,
    spec: FunctionalSpec,
    x0,
    r: float,
    a: float,
    main: int,
) -> tuple[PhaseField, Partition, float]:
    """Let one phase absorb the inner ball via harmonic replacement.

    Inside ``B(x0, a r)`` every cell is labeled ``main`` and the main field
    takes the discrete harmonic extension of the neighboring data; other
    phases are radially damped as in the cut-off.  Annulus cells keep their
    label where the main field is nonzero, and otherwise copy the label of
    the cell their ray from x0 first meets beyond radius r.

    Args:
        u, w: the pair under audit (unchanged).
        spec: functional description.
        x0: ball center; r: ball radius, with B(x0, r+h) inside the mask.
        a: inner-ball fraction, in [1/2, 1).
        main: index of the absorbing phase.

    Returns:
        ``(u*, w*, delta_j)`` with ``delta_j = J(u*,w*) - J(u,w)``.

    Raises:
        ValueError: ``a`` out of range, bad ``main``, or the ball (with a
            one-cell safety margin) leaving the mask or bounding box.
    """
    if not 0.5 <= a < 1.0:
        raise ValueError(f"harmonic fraction a must lie in [1/2, 1), got {a}")
    if not 1 <= main <= spec.num_phases:
        raise ValueError(f"main phase {main} out of range 1..{spec.num_phases}")
    grid = spec.grid
    h = grid.spacing
    pt = _probe_point(grid, x0)
    lo, hi = bounding_box(grid)
    if np.any(pt - (r + h) < lo) or np.any(pt + (r + h) > hi):
        raise ValueError(
            f"ball at {tuple(pt)} radius {r} (+margin h) leaves the bounding box"
        )
    d = _distances(grid, pt)
    near = d < r + h
    if not np.all(grid.mask[near]):
        raise ValueError(f"ball at {tuple(pt)} radius {r} (+margin h) leaves the mask")

    inner = d < a * r
    annulus = (d >= a * r) & (d < r)
    ramp = np.clip((d - a * r) / ((1.0 - a) * r), 0.0, 1.0)
    old_labels = w.labels
    main_vals = u.fields[main - 1].values

    labels = old_labels.copy()
    src = _ray_sources(grid, pt, r, annulus)
    ray_labels = old_labels.reshape(-1)[src.reshape(-1)].reshape(grid.shape)
    relabel = annulus & (main_vals == 0.0)
    labels[relabel] = ray_labels[relabel]
    labels[inner] = main

    fields = []
    for i in range(1, spec.num_phases + 1):
        if i == main:
            fields.append(main_vals.copy())
            continue
        vals = np.where(labels == i, ramp * u.fields[i - 1].values, 0.0)
        fields.append(vals)

    if np.any(inner):
        data = np.where(inner, 0.0, fields[main - 1])
        nbr = np.zeros(grid.shape)
        for ax in range(grid.dim):
            left = [slice(None)] * grid.dim
            right = [slice(None)] * grid.dim
            left[ax] = slice(None, -1)
            right[ax] = slice(1, None)
            nbr[tuple(left)] += data[tuple(right)]
            nbr[tuple(right)] += data[tuple(left)]
        extension, _, _ = _pcg(grid, inner, np.zeros(grid.shape), nbr / h**2, 1e-10)
        vals = fields[main - 1]
        vals[inner] = extension[inner]
        if spec.sign_constraints[main - 1] == NONNEGATIVE:
            np.maximum(vals, 0.0, out=vals)

    u_star = make_phase_field(grid, fields)
    w_star = make_partition(grid, spec.num_phases, labels)
    delta = total(u_star, w_star, spec) - total(u, w, spec)
    return u_star, w_star, delta


def audit(
    u: PhaseField,
    w: Partition,
    spec: FunctionalSpec,
    probes,
) -> AuditReport:
    """Run both competitors over every probe and aggregate the results.

    At each probe ``(x0, r)`` the cut-off competitor is evaluated with all
    phases damped and the harmonic competitor with every phase as ``main``,
    each at inner fractions a = 1/2 and a = 3/4.  Probes violating a
    competitor's preconditions are recorded as skips, not errors.

    Args:
        u, w: the pair under audit.
        spec: functional description.
        probes: iterable of ``(x0, r)`` pairs.

    Returns:
        An :class:`AuditReport`; ``min_delta_j`` is 0.0 when nothing ran.
    """
    entries: list[AuditEntry] = []
    skipped: list[AuditSkip] = []
    all_phases = tuple(range(1, spec.num_phases + 1))
    for x0, r in probes:
        key = tuple(float(v) for v in np.atleast_1d(np.asarray(x0, dtype=float)))
        for a in (0.5, 0.75):
            try:
                _, _, dj = cutoff_competitor(u, w, spec, x0, r, a, all_phases)
                entries.append(AuditEntry(key, float(r), "cutoff", a, None, dj))
            except ValueError as err:
                skipped.append(AuditSkip(key, float(r), "cutoff", str(err)))
        for main in all_phases:
            for a in (0.5, 0.75):
                try:
                    _, _, dj = harmonic_competitor(u, w, spec, x0, r, a, main)
                    entries.append(AuditEntry(key, float(r), "harmonic", a, main, dj))
                except ValueError as err:
                    skipped.append(
                        AuditSkip(key, float(r), f"harmonic:{main}", str(err))
                    )
    if entries:
        worst = min(entries, key=lambda e: e.delta_j)
        min_dj = worst.delta_j
    else:
        worst = None
        min_dj = 0.0
    return AuditReport(tuple(entries), tuple(skipped), min_dj, worst)


def audit_report_csv(report: AuditReport, dim: int | None = None) -> str:
    """Render an audit report as deterministic CSV text.

    Columns: kind, a, main (empty for cut-off), r, the probe coordinates,
    and the objective change.  Skipped probes follow as comment lines.
    ``dim`` (number of coordinate columns) is inferred from the report
    when omitted.
    """
    if dim is None:
        if report.entries:
            dim = len(report.entries[0].x0)
        elif report.skipped:
            dim = len(report.skipped[0].x0)
        else:
            dim = 1
    coord_cols = ",".join(f"x0_{k}" for k in range(dim))
    lines = [f"kind,a,main,r,{coord_cols},delta_j"]
    for e in report.entries:
        coords = ",".join(format_float(c) for c in e.x0)
        main = "" if e.main is None else str(e.main)
        lines.append(
            f"{e.kind},{format_float(e.a)},{main},{format_float(e.r)},"
            f"{coords},{format_float(e.delta_j)}"
        )
    for s in report.skipped:
        coords = ";".join(format_float(c) for c in s.x0)
        lines.append(f"# skipped,{s.kind},{format_float(s.r)},{coords},{s.note}")
    return "\n".join(lines) + "\n"


def seeded_probes(grid: Grid, count: int, r: float, seed: int) -> list[tuple]:
    """Deterministic probe centers away from the boundary by ``r + 2h``.

    Args:
        grid: carrier grid.
        count: number of probes.
        r: ball radius attached to every probe.
        seed: RNG seed for reproducibility.

    Raises:
        ValueError: if the safety margin exhausts the bounding box.
    """
    lo, hi = bounding_box(grid)
    margin = r + 2 * grid.spacing
    low = lo + margin
    high = hi - margin
    if np.any(low >= high):
        raise ValueError(f"radius {r} leaves no interior room for probes")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(low, high, size=(count, grid.dim))
    return [(tuple(float(v) for v in p), float(r)) for p in pts]
