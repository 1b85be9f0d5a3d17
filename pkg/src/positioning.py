#!/usr/bin/env python3
"""
Plane positioning by implicit bracketing.

For a fixed normal, the truncated volume fraction alpha(s) is an increasing
piecewise cubic polynomial in the signed distance s, with breakpoints at the
distances of the cell vertices. Truncating the cell once at an iterate s^n
yields the exact cubic S_i of the bracket containing s^n (value and first
three s-derivatives), and with it the volume fractions at both ends of that
bracket. The solver:

1. starts from the inverse of the global cubic spline through
   (s_min, 0) and (s_max, 1),
2. returns the root of S_i directly when the target lies within the
   bracket values,
3. otherwise moves towards the target bracket with a step of the locally
   quadratic model, confined to the range of brackets not yet excluded.

The derivatives of the positioned distance with respect to the angles
follow from the implicit function theorem, ds*/di = -(d alpha/di)/(d alpha/ds).
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import PositioningError
from .mesh import Polyhedron
from .truncation import (
    Plane,
    TruncationResult,
    angles_to_normal,
    bracket_polynomial,
    truncate_with_gradient,
    vertex_distances,
)

try:
    from .config import CUBIC_ROOT_TOLERANCE, MAX_POSITIONING_TRUNCATIONS, ZERO_TOLERANCE
except ImportError:
    ZERO_TOLERANCE = 1e-14
    CUBIC_ROOT_TOLERANCE = 1e-14
    MAX_POSITIONING_TRUNCATIONS = 50

logger = logging.getLogger(__name__)

MAX_NEWTON_STEPS = 100


@dataclass(frozen=True)
class CubicModel:
    """
    Local cubic S_i(s) expanded about s^n.

    Attributes:
        center: Expansion point s^n
        coefficients: alpha and its first three s-derivatives at s^n
        bracket: Vertex distances (s_i, s_i+1) enclosing s^n
    """

    center: float
    coefficients: Tuple[float, float, float, float]
    bracket: Tuple[float, float]

    def value(self, s: float) -> float:
        a0, a1, a2, a3 = self.coefficients
        z = s - self.center
        return a0 + z * (a1 + z * (a2 / 2.0 + z * a3 / 6.0))

    def slope(self, s: float) -> float:
        _, a1, a2, a3 = self.coefficients
        z = s - self.center
        return a1 + z * (a2 + z * a3 / 2.0)

    def root(self, target: float, tolerance: float = CUBIC_ROOT_TOLERANCE) -> float:
        """
        Root of S_i(s) = target inside the bracket by safeguarded Newton iteration.

        Newton steps leaving the current enclosing interval are replaced by
        bisection; the interval shrinks with every evaluation.
        """
        lo, hi = self.bracket
        f_lo, f_hi = self.value(lo) - target, self.value(hi) - target
        if f_lo >= 0.0:
            return lo
        if f_hi <= 0.0:
            return hi
        s = min(max(self.center, lo), hi)
        for _ in range(MAX_NEWTON_STEPS):
            f = self.value(s) - target
            if abs(f) <= tolerance:
                return s
            if f < 0.0:
                lo = s
            else:
                hi = s
            slope = self.slope(s)
            step_ok = slope > 0.0
            if step_ok:
                candidate = s - f / slope
                step_ok = lo < candidate < hi
            s = candidate if step_ok else 0.5 * (lo + hi)
            if hi - lo <= 4.0 * np.finfo(float).eps * max(1.0, abs(s)):
                return s
        return s


@dataclass(frozen=True)
class PositionResult:
    """
    Outcome of positioning a plane.

    Attributes:
        s: Signed distance s* with alpha(s*) = target
        target: Prescribed volume fraction
        residual: |S_i(s*) - target| of the final cubic
        truncations: Number of cell truncations performed
        bracket: Vertex distances enclosing s*
        trace: Sequence of iterates s^0, s^1, ...
    """

    s: float
    target: float
    residual: float
    truncations: int
    bracket: Tuple[float, float]
    trace: Tuple[float, ...]


@dataclass(frozen=True)
class PositionGradient:
    """Derivatives (ds*/dphi, ds*/dtheta) of the positioned distance."""

    grad: np.ndarray
    dalpha_ds: float
    degenerate: bool


def breakpoints(distances: np.ndarray, tolerance: float = ZERO_TOLERANCE) -> np.ndarray:
    """Sorted distinct vertex distances, merging values closer than the tolerance."""
    d = np.sort(np.asarray(distances, dtype=float))
    keep = np.concatenate([[True], np.diff(d) >= tolerance])
    return d[keep]


def spline_guess(alpha: float, s_min: float, s_max: float) -> float:
    """Inverse of the cubic spline 3t^2 - 2t^3 mapping [s_min, s_max] onto [0, 1]."""
    t = 0.5 - np.cos((np.arccos(2.0 * alpha - 1.0) - 2.0 * np.pi) / 3.0)
    return float(s_min + (s_max - s_min) * t)


def _quadratic_step(model: CubicModel, target: float, lo: float, hi: float) -> float:
    a0, a1, a2, _ = model.coefficients
    s = model.center
    roots = []
    if abs(a2) > 0.0:
        disc = a1 * a1 + 2.0 * a2 * (target - a0)
        if disc >= 0.0:
            sq = np.sqrt(disc)
            roots = [s + (-a1 + sq) / a2, s + (-a1 - sq) / a2]
    elif a1 > 0.0:
        roots = [s + (target - a0) / a1]
    admissible = [r for r in roots if lo <= r <= hi]
    if admissible:
        return min(admissible, key=lambda r: abs(r - s))
    return 0.5 * (lo + hi)


def solve_position(poly: Polyhedron, phi: float, theta: float, alpha_target: float,
                   x_base: Optional[np.ndarray] = None) -> PositionResult:
    """
    Find the signed distance that truncates the prescribed volume fraction.

    Args:
        poly: The cell
        phi: Azimuthal angle of the plane normal
        theta: Polar angle of the plane normal
        alpha_target: Prescribed volume fraction in [0, 1]
        x_base: Base point of the plane (default: cell centroid)

    Returns:
        PositionResult with s* and the iteration record

    Raises:
        PositioningError: If the target lies outside [0, 1] or the iteration
            exceeds the truncation cap
    """
    if not 0.0 <= alpha_target <= 1.0:
        raise PositioningError(f"Target volume fraction {alpha_target!r} is outside [0, 1]")
    x_base = poly.centroid if x_base is None else np.asarray(x_base, dtype=float)
    normal = angles_to_normal(phi, theta)
    distances = vertex_distances(poly, normal, x_base)
    points = breakpoints(distances)
    if len(points) < 2:
        raise PositioningError("Cell has no extent along the plane normal")
    s_min, s_max = float(points[0]), float(points[-1])
    if alpha_target == 0.0:
        return PositionResult(s_min, 0.0, 0.0, 0, (s_min, float(points[1])), (s_min,))
    if alpha_target == 1.0:
        return PositionResult(s_max, 1.0, 0.0, 0, (float(points[-2]), s_max), (s_max,))

    lo, hi = s_min, s_max
    s = spline_guess(alpha_target, s_min, s_max)
    trace = [s]
    for truncations in range(1, MAX_POSITIONING_TRUNCATIONS + 1):
        # the bracket containing s, restricted to the brackets not yet excluded
        first = int(np.searchsorted(points, lo))
        last = int(np.searchsorted(points, hi)) - 1
        i = int(np.clip(np.searchsorted(points, s, side="right") - 1, first, max(first, last)))
        left, right = float(points[i]), float(points[i + 1])
        below = distances <= left + ZERO_TOLERANCE
        coefficients = bracket_polynomial(poly, Plane(phi, theta, s, x_base), below)
        model = CubicModel(s, tuple(float(c) for c in coefficients), (left, right))
        alpha_left, alpha_right = model.value(left), model.value(right)

        if alpha_left <= alpha_target <= alpha_right:
            root = model.root(alpha_target)
            residual = abs(model.value(root) - alpha_target)
            logger.debug("Positioned plane after %d truncations, residual %.2e", truncations, residual)
            return PositionResult(root, alpha_target, residual, truncations, (left, right), tuple(trace))

        if alpha_right < alpha_target:
            lo = max(lo, right)
        else:
            hi = min(hi, left)
        if lo >= hi:
            # the target sits on a breakpoint up to roundoff of the two adjacent cubics
            residual = abs((alpha_right if alpha_right < alpha_target else alpha_left) - alpha_target)
            trace.append(lo)
            return PositionResult(lo, alpha_target, residual, truncations, (left, right), tuple(trace))
        s = _quadratic_step(model, alpha_target, lo, hi)
        trace.append(s)

    raise PositioningError(
        f"Positioning did not converge within {MAX_POSITIONING_TRUNCATIONS} truncations "
        f"(alpha={alpha_target!r}, phi={phi!r}, theta={theta!r})"
    )


def position_plane(poly: Polyhedron, phi: float, theta: float, alpha_target: float,
                   x_base: Optional[np.ndarray] = None) -> float:
    """
    Signed distance s* of the plane with angles (phi, theta) truncating ``alpha_target``.

    See :func:`solve_position` for arguments and errors.
    """
    return solve_position(poly, phi, theta, alpha_target, x_base).s


def position_gradient(poly: Polyhedron, plane: Plane,
                      truncation: Optional[TruncationResult] = None) -> PositionGradient:
    """
    Derivatives of the positioned distance with respect to the plane angles.

    Args:
        poly: The cell
        plane: Plane positioned at s*
        truncation: Gradient evaluation of ``poly`` at ``plane``, if already available

    Returns:
        PositionGradient; ``degenerate`` is set when d alpha/ds vanishes
        (plane tangent to the cell) and the gradient is then zero
    """
    if truncation is None or truncation.grad is None:
        truncation = truncate_with_gradient(poly, plane)
    dalpha_ds = float(truncation.grad[0])
    if dalpha_ds <= ZERO_TOLERANCE:
        return PositionGradient(np.zeros(2), dalpha_ds, True)
    return PositionGradient(-truncation.grad[1:] / dalpha_ds, dalpha_ds, truncation.degenerate)
