#!/usr/bin/env python3
"""
Face-based normal reconstruction (FBNR).

For every intersected cell the plane orientation p = (phi, theta) minimizing

    E(p) = 1/2 sum_k mu_k (alpha_k(p, s*(p)) - alpha_hat_k)^2

over the non-center stencil members is sought. The signed distance s*(p)
positions the plane in the center cell so that it truncates exactly the
prescribed volume fraction, which enforces volume conservation implicitly.
The minimization is a Gauss-Newton iteration (H = sum mu_k g_k g_k^T) with

- a step box of edge lengths (dphi(theta), dtheta) around the iterate,
- a halving line search demanding strict descent,
- a steepest-descent retry when the Gauss-Newton step fails,
- angle wrapping across the poles after every accepted step.

The same driver runs the baseline estimators (LSE, LSE*, GG) without
iterating, so that all schemes produce comparable results.
"""

import csv
import logging
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import solve

from .config import (
    BOX_EXPONENT,
    BOX_THETA,
    DEFAULT_BULK_WEIGHT,
    FACE_BULK_WEIGHT,
    GRADIENT_TOLERANCE,
    HESSIAN_SINGULAR_TOLERANCE,
    LINE_SEARCH_MAX,
    MAX_ITERATIONS,
    RESULT_CSV_COLUMNS,
    SCHEMES,
    STENCIL_KINDS,
    VOF_TOLERANCE,
    ZERO_TOLERANCE,
)
from .errors import DegenerateGeometryError, PositioningError, UnreconstructableStencilError
from .mesh import Mesh, Polyhedron, Stencil, build_neighborhood
from .positioning import position_gradient, position_plane
from .surfaces import VolumeFractionField, interface_cells
from .initguess import initial_orientation
from .truncation import Plane, angles_to_normal, truncate, truncate_with_gradient

logger = logging.getLogger(__name__)

STATUSES = ("converged", "max_iters", "degenerate", "baseline", "failed")


@dataclass(frozen=True)
class ReconConfig:
    """
    Settings of the reconstruction.

    Attributes:
        grad_tol: Absolute tolerance on ||grad E||_2
        max_iters: Maximum number of accepted steps
        line_search_max: Maximum number of step halvings
        box_theta: Polar edge length of the step box
        box_exponent: Even exponent shaping the azimuthal edge length
        bulk_weight: Weight of data-wise bulk members (default: 1e9 for face
            stencils, 1 otherwise)
        eps_alpha: Interface band tolerance
        stencil_kind: "face", "edge" or "vertex"
        scheme: "fbnr", "lse", "lse-star" or "gg"
        extend_stencils: Grow stencils without bulk cells to reach one
    """

    grad_tol: float = GRADIENT_TOLERANCE
    max_iters: int = MAX_ITERATIONS
    line_search_max: int = LINE_SEARCH_MAX
    box_theta: float = BOX_THETA
    box_exponent: int = BOX_EXPONENT
    bulk_weight: Optional[float] = None
    eps_alpha: float = VOF_TOLERANCE
    stencil_kind: str = "vertex"
    scheme: str = "fbnr"
    extend_stencils: bool = True

    def __post_init__(self):
        if self.stencil_kind not in STENCIL_KINDS:
            raise ValueError(
                f"Unknown stencil kind '{self.stencil_kind}'. Supported kinds: {', '.join(STENCIL_KINDS)}"
            )
        if self.scheme not in SCHEMES:
            raise ValueError(f"Unknown scheme '{self.scheme}'. Supported schemes: {', '.join(SCHEMES)}")
        if self.bulk_weight is None:
            weight = FACE_BULK_WEIGHT if self.stencil_kind == "face" else DEFAULT_BULK_WEIGHT
            object.__setattr__(self, "bulk_weight", weight)
        for name in ("grad_tol", "max_iters", "line_search_max", "box_theta", "bulk_weight", "eps_alpha"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if int(self.box_exponent) != self.box_exponent or self.box_exponent <= 0 or self.box_exponent % 2:
            raise ValueError(f"box_exponent must be a positive even integer, got {self.box_exponent!r}")

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any]) -> "ReconConfig":
        """
        Build a config from a key-value mapping.

        Raises:
            ValueError: If the mapping holds unknown keys or invalid values
        """
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(mapping) - known)
        if unknown:
            raise ValueError(f"Unknown reconstruction settings: {', '.join(unknown)}")
        return cls(**dict(mapping))

    def to_mapping(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class TraceEntry:
    """One iterate of the minimization."""

    phi: float
    theta: float
    error: float
    grad_norm: float
    step: str


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    """
    Reconstructed plane of one cell.

    Attributes:
        cell: Center cell index
        phi, theta: Final orientation
        s: Signed distance with respect to ``x_base`` (the center centroid)
        normal: Unit normal of the final orientation
        error: Final error functional value
        grad_norm: Final ||grad E||_2
        iterations: Number of accepted steps
        trace: Iterates, starting with the initial orientation
        status: "converged", "max_iters", "degenerate", "baseline" or "failed"
        scheme: Reconstruction scheme
        stencil: Stencil used
        x_base: Base point of the plane
        dalpha_ds: d alpha/ds of the center cell at the final plane
        message: Failure description, if any
    """

    cell: int
    phi: float
    theta: float
    s: float
    normal: np.ndarray
    error: float
    grad_norm: float
    iterations: int
    trace: Tuple[TraceEntry, ...]
    status: str
    scheme: str
    stencil: Optional[Stencil] = None
    x_base: Optional[np.ndarray] = None
    dalpha_ds: float = float("nan")
    message: str = ""

    @property
    def plane(self) -> Plane:
        return Plane(self.phi, self.theta, self.s, self.x_base)

    @property
    def failed(self) -> bool:
        return self.status == "failed"


@dataclass(frozen=True, eq=False)
class ErrorGradient:
    """Error functional with its gradient and Gauss-Newton Hessian at p."""

    error: float
    grad: np.ndarray
    hessian: np.ndarray
    s: float
    dalpha_ds: float
    degenerate: bool


def _is_bulk(alpha: np.ndarray, eps_alpha: float) -> np.ndarray:
    return (alpha < eps_alpha) | (alpha > 1.0 - eps_alpha)


class StencilProblem:
    """
    Error functional of one stencil, with cached cell geometry.

    Args:
        mesh: The mesh
        stencil: Stencil (center first)
        field: Volume fraction data
        weights: Weights mu_k of the non-center members
    """

    def __init__(self, mesh: Mesh, stencil: Stencil, field: VolumeFractionField, weights: np.ndarray):
        self.stencil = stencil
        self.center = mesh.polyhedron(stencil.center_index)
        self.x_base = self.center.centroid
        self.target = float(field.alpha[stencil.center_index])
        self.polys: List[Polyhedron] = [mesh.polyhedron(k) for k in stencil.neighbours]
        self.data = field.alpha[list(stencil.neighbours)]
        self.weights = np.asarray(weights, dtype=float)
        if len(self.weights) != len(self.polys):
            raise ValueError(f"Expected {len(self.polys)} weights, got {len(self.weights)}")

    def position(self, phi: float, theta: float) -> Plane:
        s = position_plane(self.center, phi, theta, self.target, self.x_base)
        return Plane(phi, theta, s, self.x_base)

    def _side(self, poly: Polyhedron, plane: Plane) -> Optional[float]:
        levels = plane.level(poly.vertices)
        if levels.max() <= -ZERO_TOLERANCE:
            return 1.0
        if levels.min() >= ZERO_TOLERANCE:
            return 0.0
        return None

    def fractions(self, plane: Plane) -> np.ndarray:
        alpha = np.empty(len(self.polys))
        for i, poly in enumerate(self.polys):
            side = self._side(poly, plane)
            alpha[i] = side if side is not None else truncate(poly, plane).alpha
        return alpha

    def value(self, phi: float, theta: float) -> Tuple[float, float]:
        """(E(p), s*(p))."""
        plane = self.position(phi, theta)
        residual = self.fractions(plane) - self.data
        return float(0.5 * np.sum(self.weights * residual * residual)), plane.s

    def gradient(self, phi: float, theta: float) -> ErrorGradient:
        plane = self.position(phi, theta)
        center = truncate_with_gradient(self.center, plane)
        ds = position_gradient(self.center, plane, center)
        grad = np.zeros(2)
        hessian = np.zeros((2, 2))
        error = 0.0
        for poly, data, weight in zip(self.polys, self.data, self.weights):
            side = self._side(poly, plane)
            if side is not None:
                residual = side - data
                error += 0.5 * weight * residual * residual
                continue
            truncation = truncate_with_gradient(poly, plane)
            g = truncation.grad[1:] + truncation.grad[0] * ds.grad
            residual = truncation.alpha - data
            error += 0.5 * weight * residual * residual
            grad += weight * residual * g
            hessian += weight * np.outer(g, g)
        return ErrorGradient(float(error), grad, hessian, plane.s, ds.dalpha_ds, ds.dalpha_ds <= ZERO_TOLERANCE)


def assign_weights(stencil: Stencil, field: VolumeFractionField, config: ReconConfig) -> np.ndarray:
    """
    Weights mu_k of the non-center stencil members.

    Data-wise bulk members get ``config.bulk_weight`` (1e9 for face stencils
    by default), every other member 1. The center carries the volume
    constraint and no weight.
    """
    alpha = field.alpha[list(stencil.neighbours)]
    return np.where(_is_bulk(alpha, config.eps_alpha), config.bulk_weight, 1.0)


def extend_stencil(mesh: Mesh, stencil: Stencil, field: VolumeFractionField) -> Stencil:
    """
    Grow a stencil without data-wise bulk members until it reaches one.

    The neighbourhood (of the same kind) of the first member, by label,
    whose neighbourhood contains a bulk cell is appended.

    Returns:
        The unchanged stencil if it already holds a bulk cell, the extended
        stencil (``extension="extended"``), or the unchanged members with
        ``extension="unavailable"`` when no bulk cell is reachable
    """
    members = stencil.member_indices
    eps = field.eps_alpha
    if np.any(_is_bulk(field.alpha[list(members)], eps)):
        return stencil
    present = set(members)
    for u in sorted(members):
        neighbourhood = build_neighborhood(mesh, u, stencil.kind).member_indices
        if np.any(_is_bulk(field.alpha[list(neighbourhood)], eps)):
            added = sorted(set(neighbourhood) - present)
            logger.debug("Extended stencil of cell %d by %d cells via cell %d",
                         stencil.center_index, len(added), u)
            return Stencil(stencil.center_index, members + tuple(added), stencil.kind, "extended")
    logger.warning("No bulk cell reachable from the stencil of cell %d", stencil.center_index)
    return Stencil(stencil.center_index, members, stencil.kind, "unavailable")


def error_value(mesh: Mesh, stencil: Stencil, field: VolumeFractionField, weights: np.ndarray,
                p: Sequence[float]) -> Tuple[float, float]:
    """
    Error functional E(p) and the positioned distance s*(p).

    Raises:
        PositioningError: If the plane cannot be positioned in the center cell
    """
    return StencilProblem(mesh, stencil, field, weights).value(float(p[0]), float(p[1]))


def error_gradient(mesh: Mesh, stencil: Stencil, field: VolumeFractionField, weights: np.ndarray,
                   p: Sequence[float]) -> ErrorGradient:
    """
    Gradient and Gauss-Newton Hessian of the error functional.

    grad alpha_k = [d_phi alpha_k + d_s alpha_k d_phi s*, d_theta alpha_k + d_s alpha_k d_theta s*]
    at s = s*(p); grad E = sum mu_k r_k grad alpha_k and H = sum mu_k grad alpha_k grad alpha_k^T.
    """
    return StencilProblem(mesh, stencil, field, weights).gradient(float(p[0]), float(p[1]))


def box_width_phi(theta: float, box_theta: float = BOX_THETA, box_exponent: int = BOX_EXPONENT) -> float:
    """Azimuthal edge length of the step box, widening towards the poles."""
    ratio = (2.0 * theta - np.pi) / (np.pi - box_theta)
    return float(min(2.0 * np.pi, box_theta + (np.pi - box_theta) * ratio ** box_exponent))


def clip_step(p: Sequence[float], dp: Sequence[float], box_theta: float = BOX_THETA,
              box_exponent: int = BOX_EXPONENT) -> np.ndarray:
    """
    Scale a step so that p + dp stays inside the box centered at p.

    The box has edge lengths (dphi(theta), box_theta); the step direction
    is preserved.
    """
    dp = np.asarray(dp, dtype=float)
    half = np.array([box_width_phi(p[1], box_theta, box_exponent), box_theta]) / 2.0
    magnitude = np.abs(dp)
    with np.errstate(divide="ignore"):
        limits = np.where(magnitude > 0.0, half / magnitude, np.inf)
    return dp * min(1.0, float(limits.min()))


def wrap_angles(phi: float, theta: float) -> Tuple[float, float]:
    """Map angles back to phi in [0, 2 pi), theta in [0, pi] without changing the normal."""
    theta = float(np.mod(theta, 2.0 * np.pi))
    if theta > np.pi:
        theta = 2.0 * np.pi - theta
        phi = phi + np.pi
    return float(np.mod(phi, 2.0 * np.pi)), theta


def gauss_newton_step(evaluation: ErrorGradient) -> Optional[np.ndarray]:
    """Solution of H dp = -grad E, or None if |det H| < 1e-14 ||H||^2."""
    hessian = evaluation.hessian
    scale = float(np.linalg.norm(hessian))
    if scale == 0.0 or abs(np.linalg.det(hessian)) < HESSIAN_SINGULAR_TOLERANCE * scale ** 2:
        return None
    return solve(hessian, -evaluation.grad, assume_a="sym")


def _line_search(problem: StencilProblem, phi: float, theta: float, error: float, step: np.ndarray,
                 max_halvings: int) -> Optional[Tuple[float, float, float]]:
    t = 1.0
    for _ in range(max_halvings):
        candidate = wrap_angles(phi + t * step[0], theta + t * step[1])
        try:
            value, _ = problem.value(*candidate)
        except (PositioningError, DegenerateGeometryError) as e:
            logger.debug("Rejected trial orientation %s: %s", candidate, e)
            value = np.inf
        if value < error:
            return candidate[0], candidate[1], value
        t *= 0.5
    return None


def _result(problem: StencilProblem, scheme: str, phi: float, theta: float, evaluation: ErrorGradient,
            iterations: int, trace: List[TraceEntry], status: str) -> ReconstructionResult:
    return ReconstructionResult(
        cell=problem.stencil.center_index,
        phi=phi,
        theta=theta,
        s=evaluation.s,
        normal=angles_to_normal(phi, theta),
        error=evaluation.error,
        grad_norm=float(np.linalg.norm(evaluation.grad)),
        iterations=iterations,
        trace=tuple(trace),
        status=status,
        scheme=scheme,
        stencil=problem.stencil,
        x_base=problem.x_base,
        dalpha_ds=evaluation.dalpha_ds,
    )


def minimize(problem: StencilProblem, phi: float, theta: float, config: ReconConfig) -> ReconstructionResult:
    """Run the damped Gauss-Newton iteration from (phi, theta)."""
    phi, theta = wrap_angles(phi, theta)
    evaluation = problem.gradient(phi, theta)
    grad_norm = float(np.linalg.norm(evaluation.grad))
    trace = [TraceEntry(phi, theta, evaluation.error, grad_norm, "initial")]
    iterations = 0
    while True:
        if grad_norm < config.grad_tol:
            status = "converged"
            break
        if iterations >= config.max_iters:
            status = "max_iters"
            break
        if evaluation.degenerate:
            status = "degenerate"
            break

        directions = []
        step = gauss_newton_step(evaluation)
        if step is not None:
            directions.append(("gauss-newton", step))
        directions.append(("steepest-descent", -evaluation.grad))

        accepted = None
        for kind, direction in directions:
            step = clip_step((phi, theta), direction, config.box_theta, config.box_exponent)
            accepted = _line_search(problem, phi, theta, evaluation.error, step, config.line_search_max)
            if accepted is not None:
                break
        if accepted is None:
            status = "degenerate"
            break

        phi, theta, _ = accepted
        iterations += 1
        evaluation = problem.gradient(phi, theta)
        grad_norm = float(np.linalg.norm(evaluation.grad))
        trace.append(TraceEntry(phi, theta, evaluation.error, grad_norm, kind))
        logger.debug("Cell %d, iteration %d (%s): E=%.3e |grad E|=%.3e",
                     problem.stencil.center_index, iterations, kind, evaluation.error, grad_norm)

    if status == "degenerate":
        logger.warning("Reconstruction of cell %d stalled after %d iterations",
                       problem.stencil.center_index, iterations)
    return _result(problem, "fbnr", phi, theta, evaluation, iterations, trace, status)


def reconstruct_cell(mesh: Mesh, center: int, field: VolumeFractionField, config: Optional[ReconConfig] = None,
                     stencil: Optional[Stencil] = None,
                     initial: Optional[Tuple[float, float]] = None) -> ReconstructionResult:
    """
    Reconstruct the plane of one intersected cell.

    Args:
        mesh: The mesh
        center: Center cell index
        field: Volume fraction data
        config: Reconstruction settings (defaults if omitted)
        stencil: Stencil to use instead of the configured neighbourhood
        initial: Initial orientation (phi, theta) replacing the LSE* estimate

    Returns:
        ReconstructionResult; baseline schemes return the estimated plane
        with zero iterations and status "baseline"

    Raises:
        ValueError: If the center cell is not intersected
        UnreconstructableStencilError: If the stencil data is uniform
    """
    config = config or ReconConfig()
    if not config.eps_alpha <= field.alpha[center] <= 1.0 - config.eps_alpha:
        raise ValueError(f"Cell {center} is not intersected (alpha={field.alpha[center]!r})")
    if stencil is None:
        stencil = build_neighborhood(mesh, center, config.stencil_kind)
        if config.extend_stencils:
            stencil = extend_stencil(mesh, stencil, field)
    problem = StencilProblem(mesh, stencil, field, assign_weights(stencil, field, config))

    if config.scheme != "fbnr":
        guess = initial_orientation(mesh, stencil, field, config.scheme)
        evaluation = problem.gradient(guess.phi, guess.theta)
        entry = TraceEntry(guess.phi, guess.theta, evaluation.error,
                           float(np.linalg.norm(evaluation.grad)), "initial")
        return _result(problem, config.scheme, guess.phi, guess.theta, evaluation, 0, [entry], "baseline")

    if initial is None:
        guess = initial_orientation(mesh, stencil, field, "lse-star")
        initial = (guess.phi, guess.theta)
    return minimize(problem, float(initial[0]), float(initial[1]), config)


def _failed(center: int, scheme: str, message: str) -> ReconstructionResult:
    nan = float("nan")
    return ReconstructionResult(
        cell=center, phi=nan, theta=nan, s=nan, normal=np.full(3, nan), error=nan, grad_norm=nan,
        iterations=0, trace=(), status="failed", scheme=scheme, message=message,
    )


def reconstruct_field(mesh: Mesh, field: VolumeFractionField, config: Optional[ReconConfig] = None,
                      progress_callback: Optional[Callable[[int, int], None]] = None
                      ) -> Dict[int, ReconstructionResult]:
    """
    Reconstruct every interface cell of a field.

    Failures of single cells are logged and recorded with status "failed";
    the sweep always completes.

    Args:
        mesh: The mesh
        field: Volume fraction data
        config: Reconstruction settings
        progress_callback: Optional callback(current, total)

    Returns:
        Results keyed by cell index, in ascending cell order
    """
    config = config or ReconConfig()
    cells = interface_cells(field, config.eps_alpha)
    results: Dict[int, ReconstructionResult] = {}
    for i, k in enumerate(cells):
        try:
            results[k] = reconstruct_cell(mesh, k, field, config)
        except (UnreconstructableStencilError, PositioningError, DegenerateGeometryError) as e:
            logger.warning("Cell %d could not be reconstructed: %s", k, e)
            results[k] = _failed(k, config.scheme, str(e))
        if progress_callback:
            progress_callback(i + 1, len(cells))

    counts = {status: 0 for status in STATUSES}
    for result in results.values():
        counts[result.status] += 1
    logger.info("Reconstructed %d cells (%s)", len(results),
                ", ".join(f"{k}={v}" for k, v in counts.items() if v))
    return results


def results_to_csv(results: Mapping[int, ReconstructionResult], path: Union[str, Path],
                   header: Optional[List[str]] = None) -> None:
    """Write one row per cell with the RESULT_CSV_COLUMNS schema."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        for line in header or []:
            f.write(f"# {line}\n")
        writer = csv.writer(f)
        writer.writerow(RESULT_CSV_COLUMNS)
        for k in sorted(results):
            r = results[k]
            writer.writerow([
                k, repr(r.phi), repr(r.theta), repr(r.s),
                *(repr(float(c)) for c in r.normal),
                repr(r.error), repr(r.grad_norm), r.iterations, r.status,
            ])
