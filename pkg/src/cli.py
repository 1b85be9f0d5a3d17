#!/usr/bin/env python3
"""
Command-line interface of the FBNR toolkit.

Subcommands:
    init         initialize and write volume fraction fields
    halfspace    exact halfspace benchmark with outlier report
    convergence  mesh convergence study of <dn> and <dV> per scheme
    errormap     local error map of one stencil

Experiments are described by flags, optionally on top of a JSON/YAML
experiment file (--spec); flags given explicitly take precedence.
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from .config import APP_NAME, SCHEMES, STENCIL_KINDS, VERSION, load_config_file
from .errors import ExperimentError, MeshError
from .experiments import ExperimentSpec, run_convergence, run_errormap, run_halfspace, run_init

logger = logging.getLogger(__name__)

DEFAULT_SURFACES = {
    "halfspace": {"type": "halfspace"},
    "convergence": {"type": "sphere"},
    "errormap": {"type": "sphere"},
    "init": {"type": "sphere"},
}


def _surface_argument(value: str) -> Dict[str, Any]:
    """Inline JSON mapping or path to a JSON/YAML surface file."""
    if value.lstrip().startswith("{"):
        try:
            mapping = json.loads(value)
        except json.JSONDecodeError as e:
            raise argparse.ArgumentTypeError(f"Invalid surface JSON: {e}") from e
    else:
        try:
            mapping = load_config_file(value)
        except (FileNotFoundError, ValueError) as e:
            raise argparse.ArgumentTypeError(str(e)) from e
    if not isinstance(mapping, dict):
        raise argparse.ArgumentTypeError("Surface specification must be a mapping")
    return mapping


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fbnr",
        description=f"{APP_NAME} (version {VERSION})",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
    fbnr halfspace --mesh cube:5 --stencil vertex
    fbnr halfspace --mesh tet:5 --stencil edge --scheme fbnr lse-star
    fbnr convergence --resolutions 15 20 25 30 40 --surface inputs/sphere.json
    fbnr convergence --mesh-type tet --resolutions 5 8 11 --surface inputs/perturbed_sphere_L6.json --scheme fbnr lse gg --stencil face
    fbnr errormap --mesh cube:10 --cell 455 --map-resolution 60
    fbnr init --mesh vtk:inputs/single_tet.vtk --surface '{"type": "sphere", "radius": 0.3}'
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Log debug messages")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Log warnings and errors only")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="JSON/YAML experiment file (flags override its values)")
    common.add_argument("--mesh", action="append", help="Mesh source cube:N, tet:N or vtk:path (repeatable)")
    common.add_argument("--resolutions", type=int, nargs="+", help="Shorthand for generated meshes of these N")
    common.add_argument("--mesh-type", choices=("cube", "tet"), default="cube",
                        help="Generated mesh type for --resolutions (default: cube)")
    common.add_argument("--surface", type=_surface_argument, help="Surface as inline JSON or JSON/YAML file")
    common.add_argument("--stencil", choices=STENCIL_KINDS, help="Stencil kind (default: vertex)")
    common.add_argument("--scheme", nargs="+", choices=SCHEMES, help="Reconstruction scheme(s) (default: fbnr)")
    common.add_argument("--config", help="JSON/YAML file with reconstruction settings")
    common.add_argument("--seed", type=int, help="Seed of randomly perturbed surfaces")
    common.add_argument("--depth", type=int, help="Subdivision depth of the initialization")
    common.add_argument("--out", help="Output directory (default: data/outputs)")

    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("init", parents=[common], help="Write initialized volume fraction fields")
    halfspace = subparsers.add_parser("halfspace", parents=[common], help="Halfspace benchmark")
    halfspace.add_argument("--threshold", type=float, help="Outlier threshold on dn (default: 1e-6)")
    subparsers.add_parser("convergence", parents=[common], help="Mesh convergence study")
    errormap = subparsers.add_parser("errormap", parents=[common], help="Local error map of one cell")
    errormap.add_argument("--cell", type=int, help="Center cell (default: first interface cell)")
    errormap.add_argument("--map-resolution", type=int, help="Grid half-resolution M (default: 60)")
    return parser


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    """
    Combine the experiment file and the command-line flags into a spec.

    Raises:
        ExperimentError: If no mesh is given or a setting is invalid
    """
    mapping: Dict[str, Any] = {}
    if args.spec:
        mapping.update(load_config_file(args.spec))
    mapping.setdefault("surface", DEFAULT_SURFACES[args.command])

    meshes: List[str] = list(args.mesh or [])
    if args.resolutions:
        meshes.extend(f"{args.mesh_type}:{n}" for n in args.resolutions)
    if meshes:
        mapping["meshes"] = meshes
    if "meshes" not in mapping:
        raise ExperimentError("No mesh given; use --mesh or --resolutions")

    overrides = {
        "surface": args.surface,
        "stencil": args.stencil,
        "schemes": args.scheme,
        "seed": args.seed,
        "depth": args.depth,
        "out": args.out,
        "outlier_threshold": getattr(args, "threshold", None),
        "cell": getattr(args, "cell", None),
        "map_resolution": getattr(args, "map_resolution", None),
    }
    mapping.update({k: v for k, v in overrides.items() if v is not None})
    if args.config:
        mapping["recon"] = {**mapping.get("recon", {}), **load_config_file(args.config)}
    return ExperimentSpec.from_mapping(mapping)


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run the command line interface.

    Returns:
        Exit code: 0 on success, 2 on an invalid experiment specification
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)

    try:
        spec = spec_from_args(args)
        print(f"Experiment {args.command} (spec hash {spec.spec_hash()})")
        if args.command == "init":
            for path in run_init(spec):
                print(f"✓ Field saved: {path}")
        elif args.command == "halfspace":
            for report in run_halfspace(spec):
                print(
                    f"  {report.mesh} / {report.scheme}: {report.cells} cells, "
                    f"{report.outliers} outliers, max E = {report.max_error:.3e}, "
                    f"max dn = {report.max_dn:.3e}"
                )
                print(f"✓ CSV saved: {report.csv_path}")
        elif args.command == "convergence":
            report = run_convergence(spec)
            for scheme, (order_dn, order_dv) in report.orders.items():
                print(f"  {scheme}: order <dn> = {order_dn:.2f}, order <dV> = {order_dv:.2f}")
            print(f"✓ CSV saved: {report.csv_path}")
            print(f"✓ Summary saved: {report.summary_path}")
        elif args.command == "errormap":
            path, side_path = run_errormap(spec)
            print(f"✓ CSV saved: {path}")
            print(f"✓ Trace saved: {side_path}")
    except (ExperimentError, MeshError, FileNotFoundError, ValueError) as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
