"""Batch front door: config in, solver/diagnostic artifacts out.

A run configuration is flat ``key = value`` text with ``#`` comments and
dotted section keys.  Recognized keys:

    grid.dim             1 or 2
    grid.shape           one int per axis (space- or comma-separated)
    grid.spacing         cell width h > 0
    spec.num_phases      number of phases N >= 1
    spec.f.<i>           reaction coefficient: constant or file:<path>  (0)
    spec.g.<i>           source: constant or file:<path>               (0)
    spec.signs           'nonnegative' | 'free', all phases   (nonnegative)
    spec.sign.<i>        per-phase override
    volume_term.kind     'power_law' | 'per_region'
    volume_term.a        power_law linear weight, >= 0
    volume_term.b        power_law superlinear weight, >= 0            (0)
    volume_term.alpha    power_law exponent, > 0                       (1)
    volume_term.q.<i>    per_region weight: constant or file:<path>
    pipeline.stages      subset of: landscape minimize diagnose audit
    pipeline.max_outer   outer iteration cap                           (100)
    pipeline.tol_j       relative objective tolerance                  (1e-8)
    pipeline.tol_solve   field-solve residual tolerance                (1e-8)
    init.seeds           region seed points 'x y ; x y ; ...'  (index stripes)
    landscape.potential  potential V: constant or file:<path>          (0)
    diagnose.point       probe point (nearest free-boundary cell to center)
    diagnose.radii       profile radii                       (0.05 0.1 0.2)
    probes.count         audit probe count                             (20)
    probes.radius        audit ball radius                             (0.1)
    probes.seed          audit probe RNG seed                          (0)

File paths are relative to the config file.  Every artifact is plain text
(field dumps, CSVs, a summary report) or a P2 graymap; nothing carries a
timestamp, so a rerun with the same config and one worker reproduces every
byte.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .competitors import AuditReport, audit, audit_report_csv, seeded_probes
from .diagnostics import (
    InterfaceReport,
    Phase,
    acf_product,
    acf_profile,
    density_report,
    el_interface_check,
    free_boundary_cells,
    interface_measure,
    phase_count_at,
    profile_csv,
    radial_energy,
    report_text,
    weiss_profile,
)
from .elliptic import SolverError, solve_landscape
from .functional import (
    FREE,
    NONNEGATIVE,
    FunctionalSpec,
    Partition,
    PerRegion,
    PhaseField,
    PowerLaw,
    make_functional_spec,
    make_phase_field,
    total,
    volume_marginal,
)
from .grid import (
    Grid,
    ScalarField,
    axis_centers,
    bounding_box,
    cell_centers,
    format_float,
    load_field,
    make_field,
    make_grid,
    save_field,
)
from .minimize import SolveReport, initial_partition, minimize
from .oracle import oracle_two_phase_1d

__all__ = [
    "ConfigError",
    "RunPlan",
    "parse_config",
    "build_plan",
    "export_raster",
    "solve_report_csv",
    "run",
    "main",
]

STAGES = ("landscape", "minimize", "diagnose", "audit")


class ConfigError(ValueError):
    """A configuration problem; the message names the offending key."""


def parse_config(path) -> dict[str, str]:
    """Read flat ``key = value`` text; '#' starts a comment.

    Raises:
        ConfigError: on unreadable files, lines without '=', or duplicates.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"config file: {err}") from err
    table: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"config line {lineno}: empty key")
        if key in table:
            raise ConfigError(f"{key}: duplicate key")
        table[key] = value
    return table


class _Reader:
    """Typed accessors over the flat table; every error names its key."""

    _REQUIRED = object()

    def __init__(self, table: dict[str, str], base_dir: Path):
        self.table = table
        self.base_dir = base_dir
        self.consumed: set[str] = set()

    def _raw(self, key: str, default):
        self.consumed.add(key)
        if key in self.table:
            return self.table[key]
        if default is self._REQUIRED:
            raise ConfigError(f"{key}: required key is missing")
        return default

    def get_str(self, key: str, default=_REQUIRED) -> str:
        return self._raw(key, default)

    def get_int(self, key: str, default=_REQUIRED) -> int:
        raw = self._raw(key, default)
        if isinstance(raw, int):
            return raw
        try:
            return int(raw)
        except ValueError as err:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from err

    def get_float(self, key: str, default=_REQUIRED) -> float:
        raw = self._raw(key, default)
        if isinstance(raw, float):
            return raw
        try:
            return float(raw)
        except ValueError as err:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from err

    def get_floats(self, key: str, default=_REQUIRED) -> tuple[float, ...]:
        raw = self._raw(key, default)
        if not isinstance(raw, str):
            return tuple(raw)
        toks = raw.replace(",", " ").split()
        if not toks:
            raise ConfigError(f"{key}: expected at least one number")
        try:
            return tuple(float(t) for t in toks)
        except ValueError as err:
            raise ConfigError(f"{key}: expected numbers, got {raw!r}") from err

    def get_ints(self, key: str, default=_REQUIRED) -> tuple[int, ...]:
        vals = self.get_floats(key, default)
        out = tuple(int(v) for v in vals)
        if any(float(i) != v for i, v in zip(out, vals)):
            raise ConfigError(f"{key}: expected integers")
        return out

    def get_coeff(self, key: str, grid: Grid, default=_REQUIRED):
        """A scalar constant, or ``file:<path>`` loading a ScalarField."""
        raw = self._raw(key, default)
        if not isinstance(raw, str):
            return raw
        if raw.startswith("file:"):
            path = self.base_dir / raw[len("file:") :].strip()
            try:
                return load_field(path, grid)
            except (OSError, ValueError) as err:
                raise ConfigError(f"{key}: {err}") from err
        try:
            return float(raw)
        except ValueError as err:
            raise ConfigError(
                f"{key}: expected a number or 'file:<path>', got {raw!r}"
            ) from err

    def get_points(self, key: str, dim: int, default=_REQUIRED):
        """A ';'-separated list of points, each with ``dim`` coordinates."""
        raw = self._raw(key, default)
        if not isinstance(raw, str):
            return raw
        points = []
        for part in raw.split(";"):
            coords = self.get_floats_text(key, part)
            if len(coords) != dim:
                raise ConfigError(
                    f"{key}: point {part.strip()!r} needs {dim} coordinates"
                )
            points.append(coords)
        return points

    def get_floats_text(self, key: str, text: str) -> tuple[float, ...]:
        toks = text.replace(",", " ").split()
        try:
            return tuple(float(t) for t in toks)
        except ValueError as err:
            raise ConfigError(f"{key}: expected numbers, got {text!r}") from err

    def reject_unknown(self) -> None:
        unknown = sorted(set(self.table) - self.consumed)
        if unknown:
            raise ConfigError(f"{unknown[0]}: unknown key")


class RunPlan:
    """Everything a run needs, assembled and validated from one config."""

    def __init__(
        self,
        grid: Grid,
        spec: FunctionalSpec,
        stages: tuple[str, ...],
        max_outer: int,
        tol_j: float,
        tol_solve: float,
        seeds,
        potential,
        diag_point,
        diag_radii: tuple[float, ...],
        probe_count: int,
        probe_radius: float,
        probe_seed: int,
        config_name: str,
    ):
        self.grid = grid
        self.spec = spec
        self.stages = stages
        self.max_outer = max_outer
        self.tol_j = tol_j
        self.tol_solve = tol_solve
        self.seeds = seeds
        self.potential = potential
        self.diag_point = diag_point
        self.diag_radii = diag_radii
        self.probe_count = probe_count
        self.probe_radius = probe_radius
        self.probe_seed = probe_seed
        self.config_name = config_name


def build_plan(config_path) -> RunPlan:
    """Parse and validate a config file into a RunPlan.

    Raises:
        ConfigError: naming the offending key on any validation failure.
    """
    path = Path(config_path)
    reader = _Reader(parse_config(path), path.parent)

    dim = reader.get_int("grid.dim")
    if dim not in (1, 2):
        raise ConfigError(f"grid.dim: must be 1 or 2, got {dim}")
    shape = reader.get_ints("grid.shape")
    if len(shape) != dim or any(s < 2 for s in shape):
        raise ConfigError(f"grid.shape: need {dim} sizes >= 2, got {shape}")
    spacing = reader.get_float("grid.spacing")
    if spacing <= 0:
        raise ConfigError(f"grid.spacing: must be > 0, got {spacing}")
    grid = make_grid(dim, shape, spacing)

    num_phases = reader.get_int("spec.num_phases")
    if num_phases < 1:
        raise ConfigError(f"spec.num_phases: must be >= 1, got {num_phases}")

    f_list, g_list, signs = [], [], []
    default_sign = reader.get_str("spec.signs", NONNEGATIVE)
    for i in range(1, num_phases + 1):
        fi = reader.get_coeff(f"spec.f.{i}", grid, 0.0)
        vals = fi.values if isinstance(fi, ScalarField) else fi
        if np.any(np.asarray(vals) < 0.0):
            raise ConfigError(f"spec.f.{i}: must be nonnegative")
        f_list.append(fi)
        g_list.append(reader.get_coeff(f"spec.g.{i}", grid, 0.0))
        sign = reader.get_str(f"spec.sign.{i}", default_sign)
        if sign not in (NONNEGATIVE, FREE):
            raise ConfigError(
                f"spec.sign.{i}: must be '{NONNEGATIVE}' or '{FREE}', got {sign!r}"
            )
        signs.append(sign)

    kind = reader.get_str("volume_term.kind")
    if kind == "power_law":
        a = reader.get_float("volume_term.a")
        b = reader.get_float("volume_term.b", 0.0)
        alpha = reader.get_float("volume_term.alpha", 1.0)
        if a < 0:
            raise ConfigError(f"volume_term.a: must be >= 0, got {a}")
        if b < 0:
            raise ConfigError(f"volume_term.b: must be >= 0, got {b}")
        if alpha <= 0:
            raise ConfigError(f"volume_term.alpha: must be > 0, got {alpha}")
        volume_term = PowerLaw(a, b, alpha)
    elif kind == "per_region":
        weights = []
        for i in range(1, num_phases + 1):
            qi = reader.get_coeff(f"volume_term.q.{i}", grid)
            if not isinstance(qi, ScalarField):
                qi = make_field(grid, float(qi))
            weights.append(qi)
        volume_term = PerRegion(tuple(weights))
    else:
        raise ConfigError(
            f"volume_term.kind: must be 'power_law' or 'per_region', got {kind!r}"
        )

    spec = make_functional_spec(grid, f_list, g_list, signs, volume_term)

    stage_text = reader.get_str("pipeline.stages").split()
    if not stage_text:
        raise ConfigError("pipeline.stages: at least one stage required")
    for s in stage_text:
        if s not in STAGES:
            raise ConfigError(f"pipeline.stages: unknown stage {s!r}")
    stages = tuple(s for s in STAGES if s in stage_text)
    if ("diagnose" in stages or "audit" in stages) and "minimize" not in stages:
        raise ConfigError("pipeline.stages: diagnose/audit require minimize")

    max_outer = reader.get_int("pipeline.max_outer", 100)
    if max_outer < 1:
        raise ConfigError(f"pipeline.max_outer: must be >= 1, got {max_outer}")
    tol_j = reader.get_float("pipeline.tol_j", 1e-8)
    tol_solve = reader.get_float("pipeline.tol_solve", 1e-8)
    if tol_j <= 0 or tol_solve <= 0:
        key = "pipeline.tol_j" if tol_j <= 0 else "pipeline.tol_solve"
        raise ConfigError(f"{key}: must be > 0")

    seeds = reader.get_points("init.seeds", dim, None)
    if seeds is not None and len(seeds) != num_phases:
        raise ConfigError(
            f"init.seeds: need {num_phases} points, got {len(seeds)}"
        )

    potential = reader.get_coeff("landscape.potential", grid, 0.0)
    pvals = potential.values if isinstance(potential, ScalarField) else potential
    if np.any(np.asarray(pvals) < 0.0):
        raise ConfigError("landscape.potential: must be nonnegative")

    diag_point = reader.get_points("diagnose.point", dim, None)
    if diag_point is not None:
        if len(diag_point) != 1:
            raise ConfigError("diagnose.point: exactly one point expected")
        diag_point = diag_point[0]
    diag_radii = reader.get_floats("diagnose.radii", (0.05, 0.1, 0.2))
    if any(r <= 0 for r in diag_radii) or any(
        r2 <= r1 for r1, r2 in zip(diag_radii, diag_radii[1:])
    ):
        raise ConfigError("diagnose.radii: must be positive and increasing")

    probe_count = reader.get_int("probes.count", 20)
    if probe_count < 1:
        raise ConfigError(f"probes.count: must be >= 1, got {probe_count}")
    probe_radius = reader.get_float("probes.radius", 0.1)
    if probe_radius <= 0:
        raise ConfigError(f"probes.radius: must be > 0, got {probe_radius}")
    probe_seed = reader.get_int("probes.seed", 0)

    reader.reject_unknown()
    return RunPlan(
        grid=grid,
        spec=spec,
        stages=stages,
        max_outer=max_outer,
        tol_j=tol_j,
        tol_solve=tol_solve,
        seeds=seeds,
        potential=potential,
        diag_point=diag_point,
        diag_radii=diag_radii,
        probe_count=probe_count,
        probe_radius=probe_radius,
        probe_seed=probe_seed,
        config_name=path.name,
    )


def _pgm_lines(pixels: np.ndarray) -> str:
    """P2 text for an 8-bit pixel array (1D arrays become one raster row)."""
    if pixels.ndim == 1:
        pixels = pixels[np.newaxis, :]
    height, width = pixels.shape
    lines = [f"P2\n{width} {height}\n255"]
    for row in pixels:
        lines.append(" ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def export_raster(obj: ScalarField | Partition, path) -> None:
    """Write a P2 graymap; ScalarFields get a min/max sidecar.

    A ScalarField maps [min, max] linearly onto 0..255 (constant fields
    render as gray 0) with the range recorded in ``<path>.meta.txt``; a
    Partition maps label L of N phases to floor(255 * L / N).
    """
    if isinstance(obj, Partition):
        pixels = (255 * obj.labels) // obj.num_phases
        Path(path).write_text(_pgm_lines(pixels), encoding="ascii")
        return
    vals = obj.values
    vmin = float(vals.min())
    vmax = float(vals.max())
    if vmax > vmin:
        pixels = np.rint(255.0 * (vals - vmin) / (vmax - vmin)).astype(int)
    else:
        pixels = np.zeros(vals.shape, dtype=int)
    Path(path).write_text(_pgm_lines(pixels), encoding="ascii")
    meta = f"min {format_float(vmin)}\nmax {format_float(vmax)}\n"
    Path(str(path) + ".meta.txt").write_text(meta, encoding="ascii")


def solve_report_csv(report: SolveReport) -> str:
    """CSV of the outer-iteration trace: iteration, J, per-phase volumes."""
    n = len(report.outer_volumes[0]) if report.outer_volumes else 0
    header = "iteration,J" + "".join(f",vol_{i}" for i in range(1, n + 1))
    lines = [header]
    for it, (j, vols) in enumerate(zip(report.outer_j, report.outer_volumes)):
        row = f"{it},{format_float(j)}"
        row += "".join("," + format_float(v) for v in vols)
        lines.append(row)
    return "\n".join(lines) + "\n"


def _interface_1d(w: Partition) -> float | None:
    """First face coordinate where adjacent cells carry different regions."""
    labels = w.labels
    xs = axis_centers(w.grid, 0)
    change = np.nonzero(labels[:-1] != labels[1:])[0]
    both = [k for k in change if labels[k] != 0 and labels[k + 1] != 0]
    pick = both[0] if both else (change[0] if len(change) else None)
    if pick is None:
        return None
    return float(0.5 * (xs[pick] + xs[pick + 1]))


def _default_probe(u: PhaseField, grid: Grid) -> np.ndarray | None:
    """Free-boundary cell (any phase, positive part) nearest the box center."""
    lo, hi = bounding_box(grid)
    center = 0.5 * (lo + hi)
    centers = cell_centers(grid).reshape(-1, grid.dim)
    best = None
    best_d = np.inf
    for i in range(1, len(u.fields) + 1):
        fb = free_boundary_cells(u, Phase(i)).reshape(-1)
        if not fb.any():
            continue
        pts = centers[fb]
        d = np.linalg.norm(pts - center, axis=1)
        k = int(np.argmin(d))
        if d[k] < best_d:
            best_d = float(d[k])
            best = pts[k]
    return best


def _parallel_audit(
    u: PhaseField,
    w: Partition,
    spec: FunctionalSpec,
    probes: list,
    workers: int,
) -> AuditReport:
    """Audit probes concurrently, merging per-probe reports in probe order."""
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda p: audit(u, w, spec, [p]), probes))
    entries = tuple(e for part in parts for e in part.entries)
    skipped = tuple(s for part in parts for s in part.skipped)
    worst = min(entries, key=lambda e: e.delta_j) if entries else None
    min_dj = worst.delta_j if worst is not None else 0.0
    return AuditReport(entries, skipped, min_dj, worst)


class _Run:
    """One pipeline execution: stage methods append artifacts and summary."""

    def __init__(self, plan: RunPlan, out_dir: Path, workers: int, seed: int | None):
        self.plan = plan
        self.out = out_dir
        self.workers = workers
        self.seed = plan.probe_seed if seed is None else seed
        self.lines: list[str] = []
        self.u: PhaseField | None = None
        self.w: Partition | None = None

    def say(self, line: str) -> None:
        self.lines.append(line)

    def write(self, name: str, text: str) -> None:
        (self.out / name).write_text(text, encoding="ascii")

    def stage_landscape(self) -> None:
        plan = self.plan
        w0 = solve_landscape(plan.grid, plan.potential, tol=plan.tol_solve)
        save_field(w0, self.out / "w0.txt")
        export_raster(w0, self.out / "w0.pgm")
        self.say(f"landscape max_w0 {format_float(float(w0.values.max()))}")

    def stage_minimize(self) -> None:
        plan = self.plan
        init = None
        if plan.seeds is not None:
            w0 = initial_partition(plan.grid, plan.spec.num_phases, list(plan.seeds))
            zeros = [np.zeros(plan.grid.shape) for _ in range(plan.spec.num_phases)]
            init = (make_phase_field(plan.grid, zeros), w0)
        self.u, self.w, report = minimize(
            plan.spec,
            init=init,
            max_outer=plan.max_outer,
            tol_j=plan.tol_j,
            tol_solve=plan.tol_solve,
        )
        for i, field in enumerate(self.u.fields, start=1):
            save_field(field, self.out / f"u{i}.txt")
            export_raster(field, self.out / f"u{i}.pgm")
        export_raster(self.w, self.out / "partition.pgm")
        self.write("solve_report.csv", solve_report_csv(report))
        j_final = total(self.u, self.w, plan.spec)
        self.say(f"minimize J {format_float(j_final)}")
        self.say(f"minimize iterations {report.iterations}")
        self.say(f"minimize converged {report.converged}")
        self.say(
            "minimize volumes "
            + " ".join(format_float(v) for v in report.final_volumes)
        )
        self.say(
            f"minimize zero_set_fraction {format_float(report.zero_set_fraction)}"
        )
        self._oracle_summary(j_final)

    def _oracle_summary(self, j_final: float) -> None:
        """1D two-phase runs report the scan oracle's split and the gap."""
        plan = self.plan
        vt = plan.spec.volume_term
        if not (
            plan.grid.dim == 1
            and plan.spec.num_phases == 2
            and isinstance(vt, PowerLaw)
            and vt.b == 0.0
        ):
            return
        xs = axis_centers(plan.grid, 0)
        g1 = plan.spec.g[0].values
        g2 = plan.spec.g[1].values
        result = oracle_two_phase_1d(
            lambda t: np.interp(t, xs, g1),
            lambda t: np.interp(t, xs, g2),
            vt.a,
            vt.a,
        )
        loc = _interface_1d(self.w)
        if loc is not None:
            self.say(f"interface location {format_float(loc)}")
        self.say(f"oracle s_split {format_float(result.s_split)}")
        self.say(f"oracle j_split {format_float(result.j_split)}")
        self.say(f"oracle gap {format_float(abs(j_final - result.j_split))}")

    def stage_diagnose(self) -> None:
        plan = self.plan
        pt = plan.diag_point
        if pt is None:
            found = _default_probe(self.u, plan.grid)
            if found is None:
                self.say("diagnose skipped: no free boundary found")
                return
            pt = tuple(float(v) for v in found)
        self.say("diagnose probe " + " ".join(format_float(v) for v in pt))
        radii = plan.diag_radii
        r_max = radii[-1]

        prof = radial_energy(self.u, pt, radii)
        self.write("profile_energy.csv", profile_csv(prof))
        for i in range(1, plan.spec.num_phases + 1):
            prof = acf_profile(self.u, Phase(i), pt, radii)
            self.write(f"profile_acf_{i}.csv", profile_csv(prof))
            lam = volume_marginal(self.w, plan.spec.volume_term, at=pt).lam[i - 1]
            prof = weiss_profile(self.u, i, lam, pt, radii)
            self.write(f"profile_weiss_{i}.csv", profile_csv(prof))
        if plan.spec.num_phases >= 2:
            prof, violation = acf_product(self.u, Phase(1), Phase(2), pt, radii)
            self.write("profile_acf_product.csv", profile_csv(prof))
            self.say(f"diagnose acf_violation {format_float(violation)}")

        fields: dict = {}
        notes: list[str] = []
        try:
            rep = interface_measure(self.u, 1, pt, radii, spec=plan.spec)
            fields["mu_density"] = rep.mu_density
            fields["h_density"] = rep.h_density
        except ValueError as err:
            notes.append(f"interface_measure: {err}")
        try:
            rep = el_interface_check(self.u, self.w, plan.spec, pt, r_max)
            fields["slopes"] = rep.slopes
            fields["el_residuals"] = rep.el_residuals
        except ValueError as err:
            notes.append(f"el_interface_check: {err}")
        try:
            rep = density_report(self.u, self.w, 1, pt, r_max)
            fields["density_ratios"] = rep.density_ratios
        except ValueError as err:
            notes.append(f"density_report: {err}")
        try:
            fields["phase_count"] = phase_count_at(self.u, pt, r_max)
        except ValueError as err:
            notes.append(f"phase_count_at: {err}")
        self.write("interface_report.txt", report_text(InterfaceReport(**fields)))
        for note in notes:
            self.say(f"diagnose skipped {note}")

    def stage_audit(self) -> None:
        plan = self.plan
        probes = seeded_probes(
            plan.grid, plan.probe_count, plan.probe_radius, self.seed
        )
        if self.workers > 1:
            report = _parallel_audit(self.u, self.w, plan.spec, probes, self.workers)
        else:
            report = audit(self.u, self.w, plan.spec, probes)
        self.write("audit_report.csv", audit_report_csv(report, dim=plan.grid.dim))
        self.say(f"audit entries {len(report.entries)}")
        self.say(f"audit skipped {len(report.skipped)}")
        self.say(f"audit min_delta_j {format_float(report.min_delta_j)}")

    def execute(self) -> int:
        plan = self.plan
        shape = "x".join(str(s) for s in plan.grid.shape)
        self.say(f"config {plan.config_name}")
        self.say(
            f"grid dim {plan.grid.dim} shape {shape} "
            f"spacing {format_float(plan.grid.spacing)}"
        )
        self.say(f"phases {plan.spec.num_phases}")
        self.say("stages " + " ".join(plan.stages))
        methods = {
            "landscape": self.stage_landscape,
            "minimize": self.stage_minimize,
            "diagnose": self.stage_diagnose,
            "audit": self.stage_audit,
        }
        for stage in plan.stages:
            try:
                methods[stage]()
            except SolverError as err:
                note = f"stage {stage} aborted: {err}"
                self.say(note)
                self.write("partial_artifacts.txt", note + "\n")
                self.write("summary.txt", "\n".join(self.lines) + "\n")
                print(f"phasemin: {note}; artifacts are partial", file=sys.stderr)
                return 1
        self.write("summary.txt", "\n".join(self.lines) + "\n")
        return 0


def run(config_path, out_dir, workers: int = 1, seed: int | None = None) -> int:
    """Execute the configured pipeline; returns the process exit status.

    Artifacts land in ``out_dir`` (created if needed).  Status 0 means all
    stages ran; 2 flags a config problem (reported with the offending key);
    1 flags a solver failure after a partial-artifact note is written.
    """
    try:
        plan = build_plan(config_path)
    except ConfigError as err:
        print(f"phasemin: config error: {err}", file=sys.stderr)
        return 2
    if workers < 1:
        print("phasemin: config error: --workers must be >= 1", file=sys.stderr)
        return 2
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return _Run(plan, out, workers, seed).execute()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="phasemin",
        description="Minimize multi-phase free-boundary energies on grids "
        "and export solver, profile, and audit artifacts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="execute a run configuration")
    runp.add_argument("config", help="path to the run configuration file")
    runp.add_argument("--out", required=True, help="artifact output directory")
    runp.add_argument("--workers", type=int, default=1, help="audit parallelism")
    runp.add_argument("--seed", type=int, default=None, help="probe RNG seed")
    args = parser.parse_args(argv)
    return run(args.config, args.out, workers=args.workers, seed=args.seed)


if __name__ == "__main__":
    sys.exit(main())
