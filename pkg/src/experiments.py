#!/usr/bin/env python3
"""
Experiment harness.

Runs the benchmark studies on generated or ingested meshes and writes the
results as CSV (plus JSON/YAML side files):

- halfspace: exact planar data, per-cell final error, normal deviation,
  iteration count and outlier classification
- convergence: <dn> and <dV> over a series of meshes per scheme, with
  fitted convergence orders
- error map: the error functional of one stencil sampled on an equidistant
  2M x M grid over the unit sphere, with the reconstruction trace
- init: the initialized volume fraction field

Every CSV starts with '#' comment lines carrying the spec hash and the
units, so that reruns of an identical spec produce identical files.
"""

import csv
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import yaml

from .config import (
    CONVERGENCE_CSV_COLUMNS,
    DEFAULT_DOMAIN,
    DEFAULT_OUTLIER_THRESHOLD,
    DEFAULT_SEED,
    DEFAULT_SUBDIVISION_DEPTH,
    ERROR_MAP_CSV_COLUMNS,
    ERROR_MAP_RESOLUTION,
    HALFSPACE_CSV_COLUMNS,
    OUTPUTS_DIR,
    SCHEMES,
    STENCIL_KINDS,
    VERSION,
)
from .errors import DegenerateGeometryError, ExperimentError, MeshError, PositioningError
from .mesh import Mesh, build_neighborhood, generate_cuboid_mesh, generate_tetrahedral_mesh, load_vtk
from .metrics import convergence_order, normal_alignment, symmetric_volume_error
from .reconstruct import (
    ReconConfig,
    ReconstructionResult,
    StencilProblem,
    assign_weights,
    extend_stencil,
    gauss_newton_step,
    reconstruct_cell,
    reconstruct_field,
    results_to_csv,
)
from .surfaces import Halfspace, Hypersurface, VolumeFractionField, init_volume_fractions, surface_from_mapping

logger = logging.getLogger(__name__)

MESH_KINDS = ("cube", "tet", "vtk")


def load_mesh(source: str, domain=DEFAULT_DOMAIN) -> Mesh:
    """
    Build a mesh from a source string.

    ``cube:N`` and ``tet:N`` generate structured hexahedral and Kuhn-split
    tetrahedral meshes with N cells per direction on ``domain``;
    ``vtk:path`` reads a legacy VTK file (boundary elements are skipped).

    Raises:
        ExperimentError: If the source string is malformed
    """
    kind, _, value = source.partition(":")
    if kind not in MESH_KINDS or not value:
        raise ExperimentError(f"Invalid mesh source '{source}'. Use cube:N, tet:N or vtk:path")
    if kind == "vtk":
        return load_vtk(value, skip_lower_dimensional=True)
    try:
        n = int(value)
    except ValueError as e:
        raise ExperimentError(f"Invalid mesh resolution in '{source}'") from e
    if kind == "cube":
        return generate_cuboid_mesh(n, domain)
    return generate_tetrahedral_mesh(n, domain)


@dataclass(frozen=True)
class ExperimentSpec:
    """
    Description of one experiment run.

    Attributes:
        meshes: Mesh sources (cube:N, tet:N or vtk:path), one per resolution
        surface: Surface mapping (see :func:`src.surfaces.surface_from_mapping`)
        stencil: Stencil kind
        schemes: Reconstruction schemes to compare
        recon: ReconConfig overrides
        out: Output directory
        seed: Seed for randomly perturbed surfaces without an explicit seed
        depth: Subdivision depth of the volume fraction initialization
        outlier_threshold: Normal deviation above which a cell is an outlier
        cell: Center cell of an error map (default: first interface cell)
        map_resolution: Error map half-resolution M
    """

    meshes: Tuple[str, ...]
    surface: Dict[str, Any] = field(default_factory=lambda: {"type": "sphere"})
    stencil: str = "vertex"
    schemes: Tuple[str, ...] = ("fbnr",)
    recon: Dict[str, Any] = field(default_factory=dict)
    out: str = str(OUTPUTS_DIR)
    seed: int = DEFAULT_SEED
    depth: int = DEFAULT_SUBDIVISION_DEPTH
    outlier_threshold: float = DEFAULT_OUTLIER_THRESHOLD
    cell: Optional[int] = None
    map_resolution: int = ERROR_MAP_RESOLUTION

    def __post_init__(self):
        object.__setattr__(self, "meshes", tuple(self.meshes))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        if not self.meshes:
            raise ExperimentError("At least one mesh (resolution) is required")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown or not self.schemes:
            raise ExperimentError(f"Unknown schemes {unknown}. Supported schemes: {', '.join(SCHEMES)}")
        if self.stencil not in STENCIL_KINDS:
            raise ExperimentError(
                f"Unknown stencil kind '{self.stencil}'. Supported kinds: {', '.join(STENCIL_KINDS)}"
            )
        if self.depth < 0:
            raise ExperimentError(f"Subdivision depth must be non-negative, got {self.depth}")
        if self.map_resolution < 1:
            raise ExperimentError(f"Error map resolution must be positive, got {self.map_resolution}")
        if "type" not in self.surface:
            raise ExperimentError("Surface specification needs a 'type'")
        for key in ("stencil_kind", "scheme"):
            if key in self.recon:
                raise ExperimentError(f"Set '{key}' through the experiment, not the reconstruction settings")

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any]) -> "ExperimentSpec":
        """
        Build a spec from a JSON/YAML mapping.

        Raises:
            ExperimentError: If the mapping holds unknown keys
        """
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(mapping) - known)
        if unknown:
            raise ExperimentError(f"Unknown experiment settings: {', '.join(unknown)}")
        return cls(**dict(mapping))

    def to_mapping(self) -> Dict[str, Any]:
        data = asdict(self)
        data["meshes"] = list(self.meshes)
        data["schemes"] = list(self.schemes)
        return data

    def spec_hash(self) -> str:
        """First 12 hex digits of the SHA-256 of the canonical JSON spec."""
        data = self.to_mapping()
        data.pop("out")
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]

    def recon_config(self, scheme: str) -> ReconConfig:
        try:
            return ReconConfig.from_mapping({**self.recon, "stencil_kind": self.stencil, "scheme": scheme})
        except ValueError as e:
            raise ExperimentError(str(e)) from e

    def build_surface(self) -> Hypersurface:
        mapping = dict(self.surface)
        if mapping.get("type") == "perturbed_sphere" and "coefficients" not in mapping:
            mapping.setdefault("seed", self.seed)
        try:
            return surface_from_mapping(mapping)
        except ValueError as e:
            raise ExperimentError(str(e)) from e

    def output_dir(self) -> Path:
        path = Path(self.out)
        path.mkdir(parents=True, exist_ok=True)
        return path


def mesh_label(source: str) -> str:
    """File-name friendly label of a mesh source."""
    kind, _, value = source.partition(":")
    if kind == "vtk":
        value = Path(value).stem
    return f"{kind}{value}"


def csv_header(spec: ExperimentSpec, units: str) -> List[str]:
    return [f"fbnr {VERSION}", f"spec_hash: {spec.spec_hash()}", f"units: {units}"]


def _write_rows(path: Path, header: List[str], columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        for line in header:
            f.write(f"# {line}\n")
        writer = csv.writer(f)
        writer.writerow(columns)
        writer.writerows(rows)


def _fmt(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def initialize(spec: ExperimentSpec, mesh: Mesh, surface: Hypersurface) -> VolumeFractionField:
    eps = spec.recon.get("eps_alpha")
    if eps is None:
        return init_volume_fractions(mesh, surface, spec.depth)
    return init_volume_fractions(mesh, surface, spec.depth, eps_alpha=eps)


def run_init(spec: ExperimentSpec) -> List[Path]:
    """Initialize and write the volume fraction field of every mesh."""
    surface = spec.build_surface()
    out = spec.output_dir()
    paths = []
    for source in spec.meshes:
        mesh = load_mesh(source)
        vof = initialize(spec, mesh, surface)
        path = out / f"field_{mesh_label(source)}.csv"
        vof.to_csv(path, header=csv_header(spec, "alpha: 1, normal: 1"))
        paths.append(path)
    return paths


def classify_outlier(result: ReconstructionResult, dn: float, threshold: float) -> Tuple[bool, str]:
    """
    Outlier flag and cause of a halfspace reconstruction.

    Causes: the terminal status for cells that did not converge, otherwise
    "non-compliant minimum" for a converged plane deviating from the reference.
    """
    if result.status in ("max_iters", "degenerate", "failed"):
        return True, result.status
    if not dn <= threshold:
        return True, "non-compliant minimum"
    return False, ""


@dataclass(frozen=True)
class HalfspaceReport:
    """Summary of one halfspace benchmark run."""

    mesh: str
    scheme: str
    cells: int
    outliers: int
    max_error: float
    max_dn: float
    csv_path: Path
    trace_path: Path


def run_halfspace(spec: ExperimentSpec) -> List[HalfspaceReport]:
    """
    Reconstruct exact halfspace data on every mesh with every scheme.

    Raises:
        ExperimentError: If the surface is not a halfspace
    """
    surface = spec.build_surface()
    if not isinstance(surface, Halfspace):
        raise ExperimentError("The halfspace benchmark needs a halfspace surface")
    out = spec.output_dir()
    reports = []
    for source in spec.meshes:
        mesh = load_mesh(source)
        vof = initialize(spec, mesh, surface)
        for scheme in spec.schemes:
            config = spec.recon_config(scheme)
            results = reconstruct_field(mesh, vof, config)
            rows, traces = [], {}
            max_error = max_dn = 0.0
            outliers = 0
            for k, result in results.items():
                dn = abs(1.0 - float(result.normal @ surface.normal))
                outlier, cause = classify_outlier(result, dn, spec.outlier_threshold)
                if outlier:
                    outliers += 1
                    traces[str(k)] = [asdict(entry) for entry in result.trace]
                if not result.failed:
                    max_error = max(max_error, result.error)
                    max_dn = max(max_dn, dn)
                rows.append([k, result.status, _fmt(result.error), _fmt(dn), result.iterations,
                             int(outlier), cause])
            stem = f"halfspace_{mesh_label(source)}_{scheme}"
            csv_path = out / f"{stem}.csv"
            _write_rows(csv_path, csv_header(spec, "error: 1, dn: 1"), HALFSPACE_CSV_COLUMNS, rows)
            trace_path = out / f"{stem}_traces.json"
            with open(trace_path, "w", encoding="utf-8") as f:
                json.dump({"spec_hash": spec.spec_hash(), "traces": traces}, f, indent=2, sort_keys=True)
            results_to_csv(results, out / f"{stem}_planes.csv", header=csv_header(spec, "angles: rad"))
            logger.info("Halfspace %s/%s: %d cells, %d outliers", source, scheme, len(results), outliers)
            reports.append(HalfspaceReport(source, scheme, len(results), outliers, max_error, max_dn,
                                           csv_path, trace_path))
    return reports


@dataclass(frozen=True)
class ConvergenceReport:
    """Rows of a convergence study and the fitted orders per scheme."""

    rows: List[Dict[str, Any]]
    orders: Dict[str, Tuple[float, float]]
    csv_path: Path
    summary_path: Path


def _fitted_orders(rows: List[Dict[str, Any]]) -> Tuple[float, float]:
    usable = [r for r in rows if not r["error"]]
    if len(usable) < 2:
        return float("nan"), float("nan")
    resolution = [np.sqrt(r["n_interface_cells"]) for r in usable]
    try:
        return (convergence_order(resolution, [r["mean_dn"] for r in usable]),
                convergence_order(resolution, [r["mean_dV"] for r in usable]))
    except ValueError as e:
        logger.warning("Cannot fit convergence order: %s", e)
        return float("nan"), float("nan")


def run_convergence(spec: ExperimentSpec) -> ConvergenceReport:
    """
    Mesh convergence study of <dn> and <dV> for every scheme.

    Each mesh is initialized once and reconstructed with every scheme.
    Failures of a resolution are recorded in the ``error`` column and the
    study continues.

    Raises:
        ExperimentError: If the surface is not closed
    """
    surface = spec.build_surface()
    if not surface.closed:
        raise ExperimentError("The convergence study needs a closed surface")
    out = spec.output_dir()
    per_scheme: Dict[str, List[Dict[str, Any]]] = {scheme: [] for scheme in spec.schemes}
    for source in spec.meshes:
        try:
            mesh = load_mesh(source)
            vof = initialize(spec, mesh, surface)
        except (MeshError, ExperimentError, ValueError, FileNotFoundError) as e:
            logger.error("Resolution %s failed: %s", source, e)
            for scheme in spec.schemes:
                per_scheme[scheme].append(_failed_row(scheme, source, e))
            continue
        for scheme in spec.schemes:
            try:
                results = reconstruct_field(mesh, vof, spec.recon_config(scheme))
                dn = normal_alignment(mesh, results, vof)
                dv = symmetric_volume_error(mesh, results, vof, surface)
                row = {"scheme": scheme, "resolution": source, "n_interface_cells": dn.cells + dn.missing,
                       "mean_dn": dn.value, "mean_dV": dv.value, "error": ""}
                logger.info("%s %s: <dn>=%.3e <dV>=%.3e", scheme, source, dn.value, dv.value)
            except (ExperimentError, PositioningError, ValueError) as e:
                logger.error("Resolution %s with scheme %s failed: %s", source, scheme, e)
                row = _failed_row(scheme, source, e)
            per_scheme[scheme].append(row)

    rows, orders = [], {}
    for scheme, scheme_rows in per_scheme.items():
        orders[scheme] = _fitted_orders(scheme_rows)
        for row in scheme_rows:
            row["fitted_order_dn"], row["fitted_order_dV"] = orders[scheme]
            rows.append(row)

    csv_path = out / "convergence.csv"
    _write_rows(
        csv_path,
        csv_header(spec, "mean_dn: 1, mean_dV: 1 (relative to the enclosed volume)"),
        CONVERGENCE_CSV_COLUMNS,
        [[_fmt(row[c]) for c in CONVERGENCE_CSV_COLUMNS] for row in rows],
    )
    summary = {
        "spec_hash": spec.spec_hash(),
        "surface": dict(spec.surface),
        "stencil": spec.stencil,
        "orders": {s: {"dn": float(o[0]), "dV": float(o[1])} for s, o in orders.items()},
    }
    summary_path = out / "convergence_summary.yaml"
    with open(summary_path, "w", encoding="utf-8") as f:
        yaml.safe_dump(summary, f, default_flow_style=False, sort_keys=True)
    return ConvergenceReport(rows, orders, csv_path, summary_path)


def _failed_row(scheme: str, source: str, error: Exception) -> Dict[str, Any]:
    nan = float("nan")
    return {"scheme": scheme, "resolution": source, "n_interface_cells": 0,
            "mean_dn": nan, "mean_dV": nan, "error": str(error) or type(error).__name__}


@dataclass(frozen=True, eq=False)
class ErrorMap:
    """
    The error functional of one stencil on an equidistant angular grid.

    Arrays have shape (2M, M), indexed by (phi, theta).
    """

    cell: int
    phi: np.ndarray
    theta: np.ndarray
    error: np.ndarray
    grad_direction: np.ndarray
    step_direction: np.ndarray
    result: Optional[ReconstructionResult]
    stencil_alpha: Dict[int, float]

    @property
    def log_error(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log10(self.error)


def error_map_grid(m: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Cell-centered grid phi_i = pi (2i-1)/(2M), i <= 2M and theta_j = pi (2j-1)/(2M), j <= M.

    The phi spacing is pi/M rather than the 2 pi/M of the form p_ij = (pi (2i-1)/M, ...),
    so the 2M longitudes cover [0, 2 pi) once instead of wrapping around twice.
    """
    phi = np.pi * (2.0 * np.arange(1, 2 * m + 1) - 1.0) / (2.0 * m)
    theta = np.pi * (2.0 * np.arange(1, m + 1) - 1.0) / (2.0 * m)
    return phi, theta


def _unit(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v)
    return v / norm if norm > 0.0 else np.zeros_like(v)


def emit_error_map(mesh: Mesh, vof: VolumeFractionField, cell: int, m: int = ERROR_MAP_RESOLUTION,
                   config: Optional[ReconConfig] = None) -> ErrorMap:
    """
    Sample the error functional of a stencil over the unit sphere.

    Every grid point stores E, the direction of grad E and the direction of
    the Gauss-Newton step (steepest descent where the Hessian is singular).
    The map also carries the reconstruction started from the LSE* guess and
    the volume fractions of the stencil.

    Raises:
        ValueError: If the cell is not intersected
    """
    config = config or ReconConfig()
    if not config.eps_alpha <= vof.alpha[cell] <= 1.0 - config.eps_alpha:
        raise ValueError(f"Cell {cell} is not intersected (alpha={vof.alpha[cell]!r})")
    stencil = build_neighborhood(mesh, cell, config.stencil_kind)
    if config.extend_stencils:
        stencil = extend_stencil(mesh, stencil, vof)
    problem = StencilProblem(mesh, stencil, vof, assign_weights(stencil, vof, config))

    phi, theta = error_map_grid(m)
    error = np.full((2 * m, m), np.nan)
    grad_direction = np.full((2 * m, m, 2), np.nan)
    step_direction = np.full((2 * m, m, 2), np.nan)
    for i, p in enumerate(phi):
        for j, t in enumerate(theta):
            try:
                evaluation = problem.gradient(p, t)
            except (PositioningError, DegenerateGeometryError) as e:
                logger.debug("Error map point (%.3f, %.3f) skipped: %s", p, t, e)
                continue
            error[i, j] = evaluation.error
            grad_direction[i, j] = _unit(evaluation.grad)
            step = gauss_newton_step(evaluation)
            if step is None:
                step = -evaluation.grad
            step_direction[i, j] = _unit(step)

    try:
        result = reconstruct_cell(mesh, cell, vof, config, stencil=stencil)
    except ValueError as e:
        logger.warning("No reconstruction trace for cell %d: %s", cell, e)
        result = None
    stencil_alpha = {k: float(vof.alpha[k]) for k in stencil.member_indices}
    return ErrorMap(cell, phi, theta, error, grad_direction, step_direction, result, stencil_alpha)


def local_minima(error_map: ErrorMap) -> List[Tuple[float, float, float]]:
    """
    Grid points whose error is below all of their (up to eight) neighbours.

    The grid is periodic in phi; theta neighbours end at the poles.

    Returns:
        (phi, theta, error) triples sorted by increasing error
    """
    values = np.where(np.isnan(error_map.error), np.inf, error_map.error)
    n_phi, n_theta = values.shape
    minima = []
    for i in range(n_phi):
        for j in range(n_theta):
            v = values[i, j]
            if not np.isfinite(v):
                continue
            neighbours = [
                values[(i + di) % n_phi, j + dj]
                for di in (-1, 0, 1) for dj in (-1, 0, 1)
                if (di or dj) and 0 <= j + dj < n_theta
            ]
            if all(v < w for w in neighbours):
                minima.append((float(error_map.phi[i]), float(error_map.theta[j]), float(v)))
    return sorted(minima, key=lambda x: x[2])


def write_error_map(error_map: ErrorMap, path: Union[str, Path], header: Optional[List[str]] = None) -> Path:
    """
    Write the grid as CSV and the trace and stencil data as a JSON side file.

    Returns:
        Path of the JSON side file
    """
    path = Path(path)
    log_error = error_map.log_error
    rows = []
    for i, p in enumerate(error_map.phi):
        for j, t in enumerate(error_map.theta):
            rows.append([_fmt(p), _fmt(t), _fmt(log_error[i, j]),
                         *(_fmt(v) for v in error_map.grad_direction[i, j]),
                         *(_fmt(v) for v in error_map.step_direction[i, j])])
    _write_rows(path, header or [], ERROR_MAP_CSV_COLUMNS, rows)

    result = error_map.result
    side = {
        "cell": error_map.cell,
        "stencil_alpha": {str(k): v for k, v in error_map.stencil_alpha.items()},
        "local_minima": [list(m) for m in local_minima(error_map)],
        "trace": [asdict(entry) for entry in result.trace] if result else [],
        "status": result.status if result else None,
    }
    side_path = path.with_suffix(".json")
    with open(side_path, "w", encoding="utf-8") as f:
        json.dump(side, f, indent=2, sort_keys=True)
    return side_path


def run_errormap(spec: ExperimentSpec) -> Tuple[Path, Path]:
    """Error map of ``spec.cell`` (or the first interface cell) on the first mesh."""
    surface = spec.build_surface()
    mesh = load_mesh(spec.meshes[0])
    vof = initialize(spec, mesh, surface)
    config = spec.recon_config("fbnr")
    cell = spec.cell
    if cell is None:
        band = np.flatnonzero((vof.alpha >= config.eps_alpha) & (vof.alpha <= 1.0 - config.eps_alpha))
        if not len(band):
            raise ExperimentError("The surface does not intersect the mesh")
        cell = int(band[0])
    if not 0 <= cell < mesh.n_cells:
        raise ExperimentError(f"Cell {cell} does not exist (mesh has {mesh.n_cells} cells)")
    try:
        error_map = emit_error_map(mesh, vof, cell, spec.map_resolution, config)
    except ValueError as e:
        raise ExperimentError(str(e)) from e
    path = spec.output_dir() / f"errormap_{mesh_label(spec.meshes[0])}_cell{cell}.csv"
    side_path = write_error_map(error_map, path, csv_header(spec, "angles: rad, log10_error: log10(1)"))
    return path, side_path
