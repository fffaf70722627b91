"""
Command line front end: ``fraclap apply|convergence|pme|mesh-info``.
"""

import argparse
import logging
import os
import sys
from typing import *

from . import __version__
from .config import InputSpec, RunConfig, load_config
from .errors import *
from .fem import FeSpace
from .fracop import FractionalLaplacian, shift_datum, write_result_csv
from .harness import convergence_study
from .mesh import is_conforming, quasi_uniformity_report, write_flm
from .pme import boundary_behavior_ratio, pme_run, write_snapshot_csv

__all__ = ["main"]


logger = logging.getLogger(__name__)


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    scheme = getattr(args, "scheme", None)
    return {} if scheme is None else {"scheme": scheme}


def _output_names(config: RunConfig) -> List[str]:
    kinds = [bc.kind for bc in config.boundary]
    if len(set(kinds)) == len(kinds):
        return kinds
    return [f"{kind}{i}" for i, kind in enumerate(kinds)]


def cmd_apply(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if config.input is None:
        raise MissingConfigKey("input")

    mesh = config.build_mesh()
    os.makedirs(args.out, exist_ok=True)

    for bc, name in zip(config.boundary, _output_names(config)):
        cfg = config.frac_config(bc, **_overrides(args))
        space = FeSpace(mesh, bc)
        operator = FractionalLaplacian(space, cfg)

        u = config.input.build(config.domain, bc)
        if config.boundary_data is not None:
            g = config.boundary_data.build(config.domain, bc)
            u = shift_datum(space, u, g, tol_rel=cfg.tol_rel)

        result = operator.apply(u)
        path = config.output_path(args.out, "apply", name)
        write_result_csv(path, space, result.datum, result.values)
        print(path)
    return 0


def cmd_convergence(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    spec = config.convergence
    if spec is None:
        raise MissingConfigKey("convergence.h_list")

    os.makedirs(args.out, exist_ok=True)
    for bc, name in zip(config.boundary, _output_names(config)):
        cfg = config.frac_config(bc, **_overrides(args))
        g = None if config.boundary_data is None else config.boundary_data.build(config.domain, bc)
        report = convergence_study(
            config.domain,
            bc,
            spec.eigen_index,
            cfg.s,
            cfg,
            spec.h_list,
            boundary_data=g,
            max_workers=spec.max_workers,
        )
        path = config.output_path(args.out, "convergence", name)
        report.to_csv(path)
        print(f"{path} slope={report.fitted_slope:.4f}")
    return 0


def cmd_pme(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    spec = config.pme
    if spec is None:
        raise MissingConfigKey("pme.m")
    if len(config.boundary) != 1:
        raise InvalidConfigValue("boundary", len(config.boundary), "the porous-medium solver takes one condition")

    (bc,) = config.boundary
    cfg = config.frac_config(bc, **_overrides(args))
    mesh = config.build_mesh()
    space = FeSpace(mesh, bc)
    datum = config.input if config.input is not None else InputSpec("pme_initial")
    u0 = datum.build(config.domain, bc)

    run = pme_run(space, u0, spec.m, cfg.s, spec.tau_end, cfg, spec.snapshots)

    os.makedirs(args.out, exist_ok=True)
    for tau, state in run.snapshots.items():
        path = config.output_path(args.out, "pme", f"tau={tau!r}")
        write_snapshot_csv(path, state)
        print(path)

    if run.state.tau > 0 and mesh.dim == 1:
        c0, c1 = boundary_behavior_ratio(run.state)
        print(f"c0={c0!r} c1={c1!r} steps={run.n_steps} min={run.min_value!r}")
    return 0


def cmd_mesh_info(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    mesh = config.build_mesh()
    sigma, tau = quasi_uniformity_report(mesh)

    print(f"dim={mesh.dim}")
    print(f"nodes={mesh.n_nodes}")
    print(f"elements={mesh.n_elements}")
    print(f"h_max={mesh.h_max!r}")
    print(f"sigma={sigma!r}")
    print(f"tau={tau!r}")
    print(f"conforming={is_conforming(mesh)}")

    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, config.prefix + ".flm")
        write_flm(mesh, path)
        print(path)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fraclap",
        description="Spectral fractional Laplacian via the heat semigroup.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run file")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")

    subparsers = parser.add_subparsers(dest="command", required=True)

    apply = subparsers.add_parser("apply", parents=[common], help="apply the operator, one CSV per condition")
    apply.add_argument("--out", default=".", help="output directory")
    apply.add_argument("--scheme", choices=["low", "high"], help="override the quadrature scheme")
    apply.set_defaults(handler=cmd_apply)

    convergence = subparsers.add_parser("convergence", parents=[common], help="mesh refinement study")
    convergence.add_argument("--out", default=".", help="output directory")
    convergence.add_argument("--scheme", choices=["low", "high"], help="override the quadrature scheme")
    convergence.set_defaults(handler=cmd_convergence)

    pme = subparsers.add_parser("pme", parents=[common], help="fractional porous-medium run")
    pme.add_argument("--out", default=".", help="output directory")
    pme.set_defaults(handler=cmd_pme)

    mesh_info = subparsers.add_parser("mesh-info", parents=[common], help="mesh statistics")
    mesh_info.add_argument("--out", default=None, help="write the mesh as .flm into this directory")
    mesh_info.set_defaults(handler=cmd_mesh_info)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Runs one command. Returns 0 on success and 1 after printing a single
    ``error: ...`` line to stderr; usage errors exit with status 2.
    """
    args = _build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        return args.handler(args)
    except (Error, OSError) as error:
        logger.debug("command failed", exc_info=True)
        message = " ".join(str(error).split())
        print(f"error: {message}", file=sys.stderr)
        return 1
