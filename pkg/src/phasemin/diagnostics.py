"""Quantitative structure checks for computed and synthetic phase fields.

Every routine here is a read-only measurement on fields: localized energy,
weighted monotone quantities, interface densities, one-sided slope balances,
flatness of level-set boundaries, rescaled zooms, phase counts, and discrete
Lipschitz constants.  None of them mutates inputs, and none hard-codes a
theoretical constant: each returns the measured number for the caller (or a
test) to compare against its own reference.

Conventions shared by all routines:

* a "part" is a signed slice of one phase, ``(sign * u_i)_+``, so a
  free-sign phase contributes up to two parts and a nonnegative phase one;
* the discrete boundary of a part is the set of its support cells that
  touch an in-mask non-support face neighbor (walls do not count);
* singular radial weights are evaluated at cell centers, with cells closer
  than ``h/2`` to the probe point excluded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .functional import (
    FunctionalSpec,
    Partition,
    PhaseField,
    make_phase_field,
    volume_marginal,
)
from .grid import (
    Grid,
    ScalarField,
    bounding_box,
    cell_centers,
    format_float,
    gradient_energy,
    laplacian_apply,
    make_field,
    make_grid,
)

__all__ = [
    "Phase",
    "RadialProfile",
    "InterfaceReport",
    "radial_energy",
    "acf_profile",
    "acf_product",
    "weiss_profile",
    "density_report",
    "interface_measure",
    "el_interface_check",
    "flatness",
    "blowup_rescale",
    "phase_count_at",
    "phase_count_map",
    "lipschitz_estimate",
    "free_boundary_cells",
    "profile_csv",
    "report_text",
]

PROFILE_KINDS = ("energy", "acf", "acf_product", "weiss", "flatness", "density")


@dataclass(frozen=True)
class Phase:
    """A signed slice of one phase: the part ``(sign * u_index)_+``.

    ``sign`` must be +1 for phases constrained nonnegative (their negative
    part is empty by construction).
    """

    index: int
    sign: int = 1

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"phase index must be >= 1, got {self.index}")
        if self.sign not in (1, -1):
            raise ValueError(f"phase sign must be +1 or -1, got {self.sign}")


@dataclass(frozen=True)
class RadialProfile:
    """A scalar quantity measured on a growing family of balls."""

    radii: tuple[float, ...]
    values: tuple[float, ...]
    kind: str

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if len(self.radii) != len(self.values):
            raise ValueError("radii and values must have equal length")
        r = np.asarray(self.radii)
        if len(r) and not np.all(np.diff(r) > 0.0):
            raise ValueError("radii must be strictly increasing")


@dataclass(frozen=True)
class InterfaceReport:
    """Bundle of interface measurements; unused entries stay None.

    Attributes:
        mu_density: per radius, boundary-measure mass over ``r**(n-1)``.
        h_density: interface density estimate at the smallest reliable radius.
        slopes: per side, the one-sided normal-derivative magnitude.
        el_residuals: deviation of the slopes from the volume-cost balance.
        phase_count: number of parts whose boundary passes near the probe.
        density_ratios: named nondegeneracy ratios of one part near a
            boundary point.
    """

    mu_density: tuple[float, ...] | None = None
    h_density: float | None = None
    slopes: tuple[float, ...] | None = None
    el_residuals: tuple[float, ...] | None = None
    phase_count: int | None = None
    density_ratios: dict[str, float] | None = None

    def __post_init__(self):
        if self.mu_density is not None and any(v < 0.0 for v in self.mu_density):
            raise ValueError("mu_density entries must be nonnegative")
        if self.phase_count is not None and self.phase_count < 0:
            raise ValueError("phase_count must be nonnegative")


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------


def _probe_point(grid: Grid, x0) -> NDArray:
    pt = np.atleast_1d(np.asarray(x0, dtype=float))
    if pt.shape != (grid.dim,):
        raise ValueError(f"probe point {x0!r} does not match grid dimension {grid.dim}")
    return pt


def _distances(grid: Grid, pt: NDArray) -> NDArray:
    return np.sqrt(np.sum((cell_centers(grid) - pt) ** 2, axis=-1))


def _check_radii(grid: Grid, radii) -> NDArray:
    r = np.atleast_1d(np.asarray(radii, dtype=float))
    if r.ndim != 1 or len(r) == 0:
        raise ValueError("radii must be a nonempty 1-d sequence")
    if not np.all(np.diff(r) > 0.0):
        raise ValueError("radii must be strictly increasing")
    if not np.all(r > 2.0 * grid.spacing):
        raise ValueError(f"all radii must exceed 2h = {2 * grid.spacing}")
    return r


def _as_fields(u) -> tuple[Grid, tuple[ScalarField, ...]]:
    if isinstance(u, ScalarField):
        return u.grid, (u,)
    return u.grid, tuple(u.fields)


def _part_values(u, phase: Phase) -> tuple[Grid, NDArray]:
    grid, fields = _as_fields(u)
    if not 1 <= phase.index <= len(fields):
        raise ValueError(f"phase index {phase.index} out of range 1..{len(fields)}")
    vals = fields[phase.index - 1].values
    return grid, np.maximum(phase.sign * vals, 0.0)


def _grad_sq_cells(grid: Grid, vals: NDArray) -> NDArray:
    """Cellwise squared-gradient estimate consistent with the edge energy.

    Each cell averages the two slot differences per axis: a masked neighbor
    contributes ``((v_n - v_c)/h)**2``, a wall (box face or unmasked
    neighbor) contributes ``(v_c/(h/2))**2``.  Summing this over cells times
    ``h**n`` reproduces the edge-sum energy with every interior edge split
    evenly between its endpoints.
    """
    m = grid.mask
    h = grid.spacing
    out = np.zeros(grid.shape)
    for a in range(grid.dim):
        left = [slice(None)] * grid.dim
        right = [slice(None)] * grid.dim
        left[a] = slice(None, -1)
        right[a] = slice(1, None)
        lt, rt = tuple(left), tuple(right)
        ml, mr = m[lt], m[rt]
        d2 = ((vals[rt] - vals[lt]) / h) ** 2
        out[lt] += np.where(ml & mr, 0.5 * d2, 0.0) + np.where(
            ml & ~mr, 0.5 * (2.0 * vals[lt] / h) ** 2, 0.0
        )
        out[rt] += np.where(ml & mr, 0.5 * d2, 0.0) + np.where(
            ~ml & mr, 0.5 * (2.0 * vals[rt] / h) ** 2, 0.0
        )
        for last in (False, True):
            face = [slice(None)] * grid.dim
            face[a] = slice(-1, None) if last else slice(0, 1)
            fc = tuple(face)
            out[fc] += 0.5 * (2.0 * vals[fc] / h) ** 2
    out[~m] = 0.0
    return out


def _sample_many(f: ScalarField, pts: NDArray) -> NDArray:
    """Vectorized multilinear interpolation (same stencil as grid.sample)."""
    grid = f.grid
    t = (pts - np.asarray(grid.origin)) / grid.spacing
    i0 = np.clip(np.floor(t).astype(np.int64), 0, np.asarray(grid.shape) - 2)
    w = np.clip(t - i0, 0.0, 1.0)
    out = np.zeros(len(pts))
    for corner in range(1 << grid.dim):
        weight = np.ones(len(pts))
        idx = []
        for a in range(grid.dim):
            bit = (corner >> a) & 1
            idx.append(i0[:, a] + bit)
            weight = weight * (w[:, a] if bit else 1.0 - w[:, a])
        out += weight * f.values[tuple(idx)]
    return out


def free_boundary_cells(u, phase: Phase) -> NDArray[np.bool_]:
    """Support cells of a part with an in-mask face neighbor off the support.

    Cells whose support ends at a domain wall are not boundary cells: the
    zero there is imposed, not free.
    """
    grid, vals = _part_values(u, phase)
    support = vals > 0.0
    m = grid.mask
    out = np.zeros(grid.shape, dtype=bool)
    for a in range(grid.dim):
        left = [slice(None)] * grid.dim
        right = [slice(None)] * grid.dim
        left[a] = slice(None, -1)
        right[a] = slice(1, None)
        lt, rt = tuple(left), tuple(right)
        out[lt] |= support[lt] & m[rt] & ~support[rt]
        out[rt] |= support[rt] & m[lt] & ~support[lt]
    return out & m


def _phase_parts(u) -> list[Phase]:
    """All parts with nonempty support, positive parts first per index."""
    _, fields = _as_fields(u)
    parts = []
    for i, f in enumerate(fields, start=1):
        if np.any(f.values > 0.0):
            parts.append(Phase(i, 1))
        if np.any(f.values < 0.0):
            parts.append(Phase(i, -1))
    return parts


def _ball_volume(dim: int, r: float) -> float:
    return 2.0 * r if dim == 1 else float(np.pi) * r * r


# ---------------------------------------------------------------------------
# radial profiles
# ---------------------------------------------------------------------------


def radial_energy(u, x0, radii) -> RadialProfile:
    """Edge-sum gradient energy of all fields inside growing balls.

    An edge counts as soon as one endpoint's center lies in the ball, so
    the profile is exactly nondecreasing in r.

    Args:
        u: PhaseField or single ScalarField.
        x0: ball center; radii: strictly increasing, all > 2h.
    """
    grid, fields = _as_fields(u)
    pt = _probe_point(grid, x0)
    r_arr = _check_radii(grid, radii)
    d = _distances(grid, pt)
    values = []
    for r in r_arr:
        region = d < r
        values.append(sum(gradient_energy(f, region=region) for f in fields))
    return RadialProfile(tuple(float(r) for r in r_arr), tuple(values), "energy")


def acf_profile(u, phase: Phase, x0, radii) -> RadialProfile:
    """Normalized, radially weighted local energy of one part.

    For each r the value is ``r**-2`` times the sum over in-ball cells
    (excluding those within h/2 of x0) of the cellwise squared gradient
    weighted by ``|c - x0|**(2-n)``, times the cell volume.  Scaling the
    part by ``a`` multiplies the profile by ``a**2`` exactly.
    """
    grid, vals = _part_values(u, phase)
    pt = _probe_point(grid, x0)
    r_arr = _check_radii(grid, radii)
    d = _distances(grid, pt)
    gsq = _grad_sq_cells(grid, vals)
    keep = d >= 0.5 * grid.spacing
    weight = np.where(keep, np.where(d > 0, d, 1.0) ** (2 - grid.dim), 0.0)
    dens = gsq * weight * grid.cell_volume
    values = [float(np.sum(dens[keep & (d < r)])) / (r * r) for r in r_arr]
    return RadialProfile(tuple(float(r) for r in r_arr), tuple(values), "acf")


def acf_product(u, phi1: Phase, phi2: Phase, x0, radii) -> tuple[RadialProfile, float]:
    """Product of two parts' weighted energies and its monotonicity defect.

    Returns the per-radius product profile and the violation score
    ``max over r1 < r2 of (P(r1) - P(r2))_+ / (1 + P(r1))`` — zero when the
    product is nondecreasing.

    Raises:
        ValueError: if the two parts are identical.
    """
    if phi1 == phi2:
        raise ValueError("the two parts must differ")
    p1 = acf_profile(u, phi1, x0, radii)
    p2 = acf_profile(u, phi2, x0, radii)
    prod = tuple(a * b for a, b in zip(p1.values, p2.values))
    violation = 0.0
    for k1 in range(len(prod)):
        for k2 in range(k1 + 1, len(prod)):
            drop = max(prod[k1] - prod[k2], 0.0) / (1.0 + prod[k1])
            violation = max(violation, drop)
    return RadialProfile(p1.radii, prod, "acf_product"), float(violation)


def weiss_profile(u, i: int, lambda_i: float, x0, radii) -> RadialProfile:
    """Scale-adjusted energy plus volume cost minus the radial-derivative term.

    For each r:
    ``r**-n * sum_B |grad v|^2 h^n + r**-n * lambda_i |{v>0} ∩ B|
    - r**-1 * sum_B |c-x0|**(1-n) (dv/drho)^2 h^n``
    with v the nonnegative part of phase i, the radial derivative taken by
    interpolated central differencing along the ray through each cell, and
    cells within h/2 of x0 excluded throughout.  Constant on exact cones.
    """
    grid, vals = _part_values(u, Phase(i, 1))
    pt = _probe_point(grid, x0)
    r_arr = _check_radii(grid, radii)
    h = grid.spacing
    d = _distances(grid, pt)
    keep = d >= 0.5 * h
    gsq = _grad_sq_cells(grid, vals)
    support = (vals > 0.0) & grid.mask

    centers = cell_centers(grid).reshape(-1, grid.dim)
    d_flat = d.reshape(-1)
    keep_flat = keep.reshape(-1) & grid.mask.reshape(-1)
    sel = np.flatnonzero(keep_flat & (d_flat < float(r_arr[-1])))
    rho_hat = (centers[sel] - pt) / d_flat[sel][:, None]
    lo, hi = bounding_box(grid)
    field = make_field(grid, vals)
    up = _sample_many(field, np.clip(centers[sel] + h * rho_hat, lo, hi))
    dn = _sample_many(field, np.clip(centers[sel] - h * rho_hat, lo, hi))
    dr_sq = np.zeros(grid.num_cells)
    dr_sq[sel] = ((up - dn) / (2.0 * h)) ** 2
    dr_sq = dr_sq.reshape(grid.shape)

    radial_dens = np.where(keep, np.where(d > 0, d, 1.0) ** (1 - grid.dim), 0.0) * dr_sq
    hn = grid.cell_volume
    values = []
    for r in r_arr:
        inside = keep & (d < r)
        e_term = float(np.sum(gsq[inside])) * hn / r**grid.dim
        v_term = lambda_i * float(np.count_nonzero(support & inside)) * hn / r**grid.dim
        r_term = float(np.sum(radial_dens[inside])) * hn / r
        values.append(e_term + v_term - r_term)
    return RadialProfile(tuple(float(r) for r in r_arr), tuple(values), "weiss")


# ---------------------------------------------------------------------------
# interface reports
# ---------------------------------------------------------------------------


def density_report(u, w: Partition, i: int, x0, r: float) -> InterfaceReport:
    """Nondegeneracy ratios of one part on a ball at a boundary point.

    Ratios reported (keys of ``density_ratios``):
      * ``mean_square``: average of v**2 over the ball, divided by r**2;
      * ``positive_volume``: |{v>0} ∩ B| / r**n;
      * ``growth_floor``: min over in-ball support cells (at least 2h from
        the zero set) of v(c) / dist(c, zero set);
      * ``complement_volume``: |{v<=0} ∩ B ∩ mask| / r**n.

    Raises:
        ValueError: if x0 is farther than h from the part's boundary cells.
    """
    del w  # labels do not enter: the ratios are support-based
    grid, vals = _part_values(u, Phase(i, 1))
    pt = _probe_point(grid, x0)
    if not r > 2.0 * grid.spacing:
        raise ValueError(f"radius must exceed 2h = {2 * grid.spacing}")
    h = grid.spacing
    boundary = free_boundary_cells(u, Phase(i, 1))
    if not np.any(boundary):
        raise ValueError(f"part {i}+ has no boundary cells on this grid")
    centers = cell_centers(grid).reshape(-1, grid.dim)
    b_pts = centers[boundary.reshape(-1)]
    gap = float(np.min(np.sqrt(np.sum((b_pts - pt) ** 2, axis=-1))))
    if gap > h * (1.0 + 1e-9):
        raise ValueError(
            f"probe {tuple(pt)} is {format_float(gap)} from the nearest boundary "
            f"cell of part {i}+; within h = {format_float(h)} required"
        )

    d = _distances(grid, pt)
    ball = (d < r) & grid.mask
    hn = grid.cell_volume
    mean_sq = float(np.sum(vals[ball] ** 2)) * hn / _ball_volume(grid.dim, r) / r**2
    support = vals > 0.0
    pos_vol = float(np.count_nonzero(ball & support)) * hn / r**grid.dim
    comp_vol = float(np.count_nonzero(ball & ~support)) * hn / r**grid.dim

    # distance of each in-ball support cell to the nearest non-support cell
    window = (d < r + 2.0 * h) & grid.mask
    zero_pts = centers[(window & ~support).reshape(-1)]
    sup_idx = np.flatnonzero((ball & support).reshape(-1))
    floor = np.inf
    if len(zero_pts) and len(sup_idx):
        chunk = 256
        delta = np.empty(len(sup_idx))
        for start in range(0, len(sup_idx), chunk):
            block = centers[sup_idx[start : start + chunk]]
            d2 = np.sum((block[:, None, :] - zero_pts[None, :, :]) ** 2, axis=-1)
            delta[start : start + chunk] = np.sqrt(np.min(d2, axis=1))
        v_flat = vals.reshape(-1)[sup_idx]
        ok = delta >= 2.0 * h
        if np.any(ok):
            floor = float(np.min(v_flat[ok] / delta[ok]))
    ratios = {
        "mean_square": mean_sq,
        "positive_volume": pos_vol,
        "growth_floor": floor if np.isfinite(floor) else 0.0,
        "complement_volume": comp_vol,
    }
    return InterfaceReport(density_ratios=ratios)


def interface_measure(
    u, i: int, x0, radii, spec: FunctionalSpec | None = None
) -> InterfaceReport:
    """Boundary-concentrated mass of one part over growing balls.

    The measure of a ball is the sum of the discrete Laplacian of the part
    minus the bulk source ``f*v - g/2`` over the part's support, times the
    cell volume, floored at zero.  ``mu_density`` lists the mass over
    ``r**(n-1)``; ``h_density`` divides by the unit-ball factor (2 in 2D, 1
    in 1D) at the smallest radius >= 4h.  With ``spec=None`` the bulk
    source is zero (synthetic fields).
    """
    grid, vals = _part_values(u, Phase(i, 1))
    pt = _probe_point(grid, x0)
    r_arr = _check_radii(grid, radii)
    h = grid.spacing
    lap = laplacian_apply(make_field(grid, vals)).values
    bulk = np.zeros(grid.shape)
    if spec is not None:
        fv = spec.f[i - 1].values
        gv = spec.g[i - 1].values
        bulk = np.where(vals > 0.0, fv * vals - 0.5 * gv, 0.0)
    dens = np.where(grid.mask, lap - bulk, 0.0) * grid.cell_volume
    d = _distances(grid, pt)
    omega = 2.0 if grid.dim == 2 else 1.0
    mu_density = []
    h_density = None
    for r in r_arr:
        mu = max(float(np.sum(dens[d < r])), 0.0)
        mu_density.append(mu / r ** (grid.dim - 1))
        if h_density is None and r >= 4.0 * h:
            h_density = mu / (omega * r ** (grid.dim - 1))
    if h_density is None:
        raise ValueError(f"no radius reaches 4h = {4 * h}; cannot report a density")
    return InterfaceReport(mu_density=tuple(mu_density), h_density=float(h_density))


def _fit_normal(pts: NDArray, dim: int) -> NDArray:
    """Total-least-squares unit normal of a cloud of boundary points."""
    if dim == 1:
        return np.array([1.0])
    if len(pts) < 2:
        raise ValueError("normal fit needs at least 2 boundary cells")
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered
    evals, evecs = np.linalg.eigh(cov)
    if evals[-1] <= 0.0:
        raise ValueError("normal fit is rank-deficient (coincident boundary cells)")
    return evecs[:, 0]


def _one_sided_slope(s: NDArray, v: NDArray) -> float:
    """Least-squares slope of v against s, requiring spread in s."""
    if len(s) < 2 or float(np.ptp(s)) <= 0.0:
        raise ValueError("too few cells in the one-sided regression window")
    sc = s - s.mean()
    return float(abs(np.dot(sc, v - v.mean()) / np.dot(sc, sc)))


def el_interface_check(
    u, w: Partition, spec: FunctionalSpec, x0, r_fit: float
) -> InterfaceReport:
    """One-sided slopes at an interface and their volume-cost balance.

    Fits the interface normal by total least squares on the boundary cells
    inside ``B(x0, r_fit)``, regresses each present part against its signed
    distance over ``[2h, r_fit/2]``, and reports the residual of the slope
    balance: ``|a1^2 - a2^2 - (lam1 - lam2)|`` between two parts, or
    ``|a1^2 - (lam1 - min(0, other lams))|`` against the unassigned zone.

    Raises:
        ValueError: no part present in the ball, more than two present,
            a degenerate normal fit, or an empty regression window.
    """
    grid, fields = _as_fields(u)
    pt = _probe_point(grid, x0)
    if not r_fit > 2.0 * grid.spacing:
        raise ValueError(f"r_fit must exceed 2h = {2 * grid.spacing}")
    h = grid.spacing
    d = _distances(grid, pt)
    ball = (d < r_fit) & grid.mask

    present = []
    for part in _phase_parts(u):
        _, vals = _part_values(u, part)
        if np.any(vals[ball] > 0.0):
            present.append((part, vals))
    if not present:
        raise ValueError("no part has support in the fitting ball")
    if len(present) > 2:
        raise ValueError(f"{len(present)} parts meet the ball; at most 2 supported")

    boundary = np.zeros(grid.shape, dtype=bool)
    for part, _ in present:
        boundary |= free_boundary_cells(u, part)
    boundary &= ball
    if not np.any(boundary):
        raise ValueError("no boundary cells inside the fitting ball")
    centers = cell_centers(grid).reshape(-1, grid.dim)
    b_pts = centers[boundary.reshape(-1)]
    normal = _fit_normal(b_pts, grid.dim)
    origin = b_pts.mean(axis=0)

    s_all = (centers - origin) @ normal
    # orient the normal toward the first part's support
    _, vals1 = present[0]
    sel1 = (ball & (vals1 > 0.0)).reshape(-1)
    if float(np.mean(s_all[sel1])) < 0.0:
        normal = -normal
        s_all = -s_all

    lam = volume_marginal(w, spec.volume_term, at=pt).lam
    slopes = []
    for side, (part, vals) in enumerate(present):
        sgn = 1.0 if side == 0 else -1.0
        s_side = sgn * s_all
        sel = (
            (ball & (vals > 0.0)).reshape(-1)
            & (s_side >= 2.0 * h)
            & (s_side <= 0.5 * r_fit)
        )
        slopes.append(_one_sided_slope(s_side[sel], vals.reshape(-1)[sel]))

    if len(present) == 2:
        l1 = lam[present[0][0].index - 1]
        l2 = lam[present[1][0].index - 1]
        residual = abs(slopes[0] ** 2 - slopes[1] ** 2 - (l1 - l2))
    else:
        i1 = present[0][0].index
        others = [lam[j] for j in range(spec.num_phases) if j != i1 - 1]
        target = lam[i1 - 1] - min([0.0] + others)
        residual = abs(slopes[0] ** 2 - target)
    return InterfaceReport(slopes=tuple(slopes), el_residuals=(float(residual),))


def flatness(
    u, phi1: Phase, phi2: Phase | None, x0, radii
) -> tuple[RadialProfile, tuple[NDArray, ...]]:
    """How far an interface strays from a plane, per radius.

    For each r a normal e(r) is fitted on the boundary cells in the ball;
    beta(r) is the smallest band half-width (relative to r) such that all
    boundary cells lie within the band, the first part fills the ball above
    it, and the second part (or the zero set, when ``phi2`` is None) fills
    it below.  Returns the beta profile and the fitted normals.

    Raises:
        ValueError: as in el_interface_check, per radius.
    """
    grid, vals1 = _part_values(u, phi1)
    pt = _probe_point(grid, x0)
    r_arr = _check_radii(grid, radii)
    vals2 = None
    if phi2 is not None:
        _, vals2 = _part_values(u, phi2)
    boundary = free_boundary_cells(u, phi1)
    if phi2 is not None:
        boundary = boundary | free_boundary_cells(u, phi2)
    centers = cell_centers(grid).reshape(-1, grid.dim)
    d = _distances(grid, pt)
    betas = []
    normals = []
    for r in r_arr:
        ball = (d < r) & grid.mask
        b_sel = (boundary & ball).reshape(-1)
        if not np.any(b_sel):
            raise ValueError(f"no boundary cells inside B({tuple(pt)}, {r})")
        normal = _fit_normal(centers[b_sel], grid.dim)
        s = (centers - pt) @ normal
        sel1 = (ball & (vals1 > 0.0)).reshape(-1)
        if np.any(sel1) and float(np.mean(s[sel1])) < 0.0:
            normal = -normal
            s = -s
        beta = float(np.max(np.abs(s[b_sel]))) / r
        flat_ball = ball.reshape(-1)
        not1 = flat_ball & ~(vals1 > 0.0).reshape(-1) & (s > 0.0)
        if np.any(not1):
            beta = max(beta, float(np.max(s[not1])) / r)
        if vals2 is not None:
            not2 = flat_ball & ~(vals2 > 0.0).reshape(-1) & (s < 0.0)
            if np.any(not2):
                beta = max(beta, float(np.max(-s[not2])) / r)
        else:
            below = flat_ball & (vals1 > 0.0).reshape(-1) & (s < 0.0)
            if np.any(below):
                beta = max(beta, float(np.max(-s[below])) / r)
        betas.append(min(beta, 1.0))
        normals.append(normal)
    profile = RadialProfile(tuple(float(r) for r in r_arr), tuple(betas), "flatness")
    return profile, tuple(normals)


# ---------------------------------------------------------------------------
# rescaling, phase counts, Lipschitz
# ---------------------------------------------------------------------------


def blowup_rescale(u: PhaseField, x0, rk: float) -> PhaseField:
    """Zoomed view ``x -> u(x0 + rk*x)/rk`` on a window anchored at x0.

    The output lives on a grid of the same shape and spacing with origin 0,
    so output cell k samples the input at ``x0 + rk * k * h``; difference
    quotients are preserved up to interpolation error.

    Raises:
        ValueError: if rk < 4h or the sampling window exits the bounding box.
    """
    grid = u.grid
    pt = _probe_point(grid, x0)
    h = grid.spacing
    if rk < 4.0 * h:
        raise ValueError(f"rescale radius {rk} must be at least 4h = {4 * h}")
    out_grid = make_grid(grid.dim, grid.shape, grid.spacing, origin=(0.0,) * grid.dim)
    out_centers = cell_centers(out_grid).reshape(-1, grid.dim)
    pts = pt + rk * out_centers
    lo, hi = bounding_box(grid)
    eps = 1e-9 * h
    if np.any(pts < lo - eps) or np.any(pts > hi + eps):
        raise ValueError(
            f"rescaled window from {tuple(pt)} at scale {rk} exits the bounding box"
        )
    pts = np.clip(pts, lo, hi)
    fields = [
        (_sample_many(f, pts) / rk).reshape(grid.shape) for f in u.fields
    ]
    return make_phase_field(out_grid, fields)


def phase_count_at(u, x0, r: float) -> int:
    """Number of parts meeting the ball whose boundary passes near x0.

    A part counts when its support intersects ``B(x0, r)`` and some of its
    boundary cells lie within 2h of x0.

    Raises:
        ValueError: if r < 4h.
    """
    grid, _ = _as_fields(u)
    pt = _probe_point(grid, x0)
    if r < 4.0 * grid.spacing:
        raise ValueError(f"radius {r} must be at least 4h = {4 * grid.spacing}")
    d = _distances(grid, pt)
    ball = (d < r) & grid.mask
    near = d <= 2.0 * grid.spacing * (1.0 + 1e-9)
    count = 0
    for part in _phase_parts(u):
        _, vals = _part_values(u, part)
        if np.any(vals[ball] > 0.0) and np.any(free_boundary_cells(u, part) & near):
            count += 1
    return count


def _dilate(mask: NDArray[np.bool_], grid: Grid, radius: float) -> NDArray[np.bool_]:
    """Cells within the given center distance of any set cell."""
    steps = int(np.floor(radius / grid.spacing + 1e-9))
    out = np.zeros(grid.shape, dtype=bool)
    ranges = [range(-steps, steps + 1)] * grid.dim
    for offset in np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(
        -1, grid.dim
    ):
        if float(np.sum(offset.astype(float) ** 2)) * grid.spacing**2 > radius**2 + 1e-12:
            continue
        src = [slice(None)] * grid.dim
        dst = [slice(None)] * grid.dim
        for a in range(grid.dim):
            o = int(offset[a])
            n = grid.shape[a]
            if o >= 0:
                src[a] = slice(0, n - o)
                dst[a] = slice(o, n)
            else:
                src[a] = slice(-o, n)
                dst[a] = slice(0, n + o)
        out[tuple(dst)] |= mask[tuple(src)]
    return out


def phase_count_map(u, r: float) -> NDArray[np.int64]:
    """Per-cell phase_count_at evaluated at every cell center at once."""
    grid, _ = _as_fields(u)
    if r < 4.0 * grid.spacing:
        raise ValueError(f"radius {r} must be at least 4h = {4 * grid.spacing}")
    counts = np.zeros(grid.shape, dtype=np.int64)
    for part in _phase_parts(u):
        _, vals = _part_values(u, part)
        support = (vals > 0.0) & grid.mask
        near_support = _dilate(support, grid, r * (1.0 - 1e-12))
        near_boundary = _dilate(
            free_boundary_cells(u, part), grid, 2.0 * grid.spacing * (1.0 + 1e-9)
        )
        counts += (near_support & near_boundary).astype(np.int64)
    counts[~grid.mask] = 0
    return counts


def lipschitz_estimate(u, region=None) -> float:
    """Largest absolute difference quotient over in-mask face edges.

    Only edges between two masked cells count (imposed wall zeros are not
    difference quotients of the function).  ``region`` optionally restricts
    to edges with both endpoints inside a boolean cell set.
    """
    grid, fields = _as_fields(u)
    reg = np.ones(grid.shape, dtype=bool) if region is None else np.asarray(region)
    if reg.shape != grid.shape:
        raise ValueError(f"region shape {reg.shape} does not match grid {grid.shape}")
    m = grid.mask & reg
    best = 0.0
    for f in fields:
        v = f.values
        for a in range(grid.dim):
            left = [slice(None)] * grid.dim
            right = [slice(None)] * grid.dim
            left[a] = slice(None, -1)
            right[a] = slice(1, None)
            lt, rt = tuple(left), tuple(right)
            sel = m[lt] & m[rt]
            if np.any(sel):
                q = float(np.max(np.abs(v[rt][sel] - v[lt][sel]))) / grid.spacing
                best = max(best, q)
    return best


# ---------------------------------------------------------------------------
# export helpers
# ---------------------------------------------------------------------------


def profile_csv(profile: RadialProfile) -> str:
    """CSV text of a radial profile: header then one ``r,value`` row each."""
    lines = [f"r,{profile.kind}"]
    for r, v in zip(profile.radii, profile.values):
        lines.append(f"{format_float(r)},{format_float(v)}")
    return "\n".join(lines) + "\n"


def report_text(report: InterfaceReport) -> str:
    """Structured text with one named entry per populated report field."""
    lines = []
    if report.h_density is not None:
        lines.append(f"h_density {format_float(report.h_density)}")
    if report.mu_density is not None:
        joined = " ".join(format_float(v) for v in report.mu_density)
        lines.append(f"mu_density {joined}")
    if report.slopes is not None:
        lines.append("slopes " + " ".join(format_float(v) for v in report.slopes))
    if report.el_residuals is not None:
        joined = " ".join(format_float(v) for v in report.el_residuals)
        lines.append(f"el_residuals {joined}")
    if report.phase_count is not None:
        lines.append(f"phase_count {report.phase_count}")
    if report.density_ratios is not None:
        for key in sorted(report.density_ratios):
            lines.append(f"density_{key} {format_float(report.density_ratios[key])}")
    return "\n".join(lines) + "\n"
