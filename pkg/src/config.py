#!/usr/bin/env python3
"""
Configuration module for the FBNR-PLIC toolkit.

This module centralizes all configuration constants and settings used
throughout the package: numerical tolerances of the geometry kernel,
defaults of the Gauss-Newton reconstruction, benchmark parameters and the
CSV schemas written by the experiment harness. It also provides the loader
for the JSON/YAML key-value files accepted by the command-line interface.
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, Union

import yaml

# Version information
VERSION = "1.0.0"
APP_NAME = "FBNR-PLIC - face-based normal reconstruction"

# Project paths (relative to this file)
PROJECT_ROOT = Path(__file__).parent.parent
INPUTS_DIR = PROJECT_ROOT / "inputs"
DATA_DIR = PROJECT_ROOT / "data"
OUTPUTS_DIR = DATA_DIR / "outputs"

# Geometry kernel tolerances (meshes are O(1) sized, h ~ 1)
ZERO_TOLERANCE = 1e-14  # half thickness of the tubular neighborhood around a plane
PARALLEL_TOLERANCE = 1e-12  # threshold on 1 - <n_f, n>^2 for the parallel-face branch
PLANARITY_TOLERANCE = 1e-12  # relative to the face diameter
CLOSURE_TOLERANCE = 1e-10  # relative to the cell surface area
ALPHA_ROUNDOFF_TOLERANCE = 1e-12  # volume fractions beyond [0, 1] by more are inconsistent

# Interface band
VOF_TOLERANCE = 1e-9

# Positioning (implicit bracketing)
MAX_POSITIONING_TRUNCATIONS = 50
CUBIC_ROOT_TOLERANCE = 1e-14

# Gauss-Newton reconstruction defaults
GRADIENT_TOLERANCE = 1e-4
MAX_ITERATIONS = 20
LINE_SEARCH_MAX = 6
BOX_THETA = math.pi / 4
BOX_EXPONENT = 12
FACE_BULK_WEIGHT = 1e9
DEFAULT_BULK_WEIGHT = 1.0
HESSIAN_SINGULAR_TOLERANCE = 1e-14  # relative to ||H||^2
LSE_SINGULAR_TOLERANCE = 1e-16  # relative to ||A||^3

# Supported stencil kinds and reconstruction schemes
STENCIL_KINDS = ("face", "edge", "vertex")
SCHEMES = ("fbnr", "lse", "lse-star", "gg")

# Volume fraction initialization
DEFAULT_SUBDIVISION_DEPTH = 3

# Benchmark hypersurfaces
HALFSPACE_BASE_POINT = (0.4534, 0.5442, 0.4330)
HALFSPACE_NORMAL = (1.0 / math.sqrt(46.0), -3.0 / math.sqrt(46.0), 6.0 / math.sqrt(46.0))
SPHERE_RADIUS = 0.8
OBLATE_SEMIAXES = (0.8, 0.8, 0.4)
PROLATE_SEMIAXES = (0.25, 0.5, 0.75)
PERTURBATION_VARIANCE = 5e-4
PERTURBATION_DEGREES = (3, 6, 9)
DEFAULT_DOMAIN = ((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0))
DEFAULT_SEED = 20211

# Diagnostics
ERROR_MAP_RESOLUTION = 60
DEFAULT_OUTLIER_THRESHOLD = 1e-6

# CSV schemas
FIELD_CSV_COLUMNS = ("cell_id", "alpha", "nx", "ny", "nz")
RESULT_CSV_COLUMNS = (
    "cell_id", "phi", "theta", "s", "nx", "ny", "nz",
    "error", "grad_norm", "iters", "status",
)
CONVERGENCE_CSV_COLUMNS = (
    "scheme", "resolution", "n_interface_cells", "mean_dn", "mean_dV", "fitted_order_dn", "fitted_order_dV",
    "error",
)
HALFSPACE_CSV_COLUMNS = ("cell_id", "status", "error_final", "dn", "iters", "outlier", "cause")
ERROR_MAP_CSV_COLUMNS = ("phi", "theta", "log10_error", "grad_phi", "grad_theta", "step_phi", "step_theta")


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Load a key-value configuration file.

    JSON files (``.json``) and YAML files (``.yaml``/``.yml``) are accepted;
    both must contain a single mapping at the top level.

    Args:
        path: Path to the configuration file

    Returns:
        Dictionary with the file contents

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: If the suffix is not supported or the content is not a mapping
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Configuration file not found: {path}")

    suffix = path.suffix.lower()
    with open(path, "r", encoding="utf-8") as f:
        if suffix == ".json":
            content = json.load(f)
        elif suffix in (".yaml", ".yml"):
            content = yaml.safe_load(f)
        else:
            raise ValueError(
                f"Unsupported configuration format '{suffix}'. "
                "Use .json, .yaml or .yml"
            )

    if not isinstance(content, dict):
        raise ValueError(f"Configuration file {path} must contain a mapping at the top level")
    return content
