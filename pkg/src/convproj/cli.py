"""Command-line front end: solve instances, verify bundles, emit plot data.

Exit codes: 0 success, 1 solver failure, 2 verification failure, 3 I/O or
parse errors.  The stats line printed by ``solve`` is stable for harnesses:
``optimizations=<k> polyhedron_evals=<m>``.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .algorithms import (
    load_bundle,
    save_bundle,
    solve_bounded,
    solve_general,
    verify_bundle,
)
from .errors import (
    ConvprojError,
    DimensionMismatch,
    FailedPhaseOne,
    InfeasibleScalarization,
    IterationLimit,
    NotConvex,
    NumericalFailure,
    ParseError,
    UnboundedProblem,
)
from .model import Tolerances, load_instance
from .plotting import emit_plot_data, truncation_radius

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_VERIFY = 2
EXIT_IO = 3

_SOLVER_ERRORS = (FailedPhaseOne, NumericalFailure, IterationLimit,
                  UnboundedProblem, InfeasibleScalarization)
_IO_ERRORS = (ParseError, DimensionMismatch, NotConvex, OSError,
              KeyError, ValueError)


@dataclass
class RunConfig:
    command: str
    input_path: str
    output_path: Optional[str] = None
    bundle_path: Optional[str] = None
    plot_prefix: Optional[str] = None
    epsilon: float = 0.01
    delta: float = 0.1
    variant: str = "box"
    algorithm: str = "auto"
    max_iter: int = 200
    seed: int = 0
    radius: Optional[float] = None
    verbosity: int = 0


def _solve(config: RunConfig) -> int:
    instance = load_instance(config.input_path)
    tols = Tolerances(epsilon=config.epsilon, delta=config.delta)
    if config.algorithm == "bounded":
        bundle = solve_bounded(instance, tols, init_variant=config.variant,
                               max_iter=config.max_iter)
    else:
        # "auto" and "general" both run the general driver; a bounded image
        # simply comes back with empty direction sets.
        bundle = solve_general(instance, tols, init_variant=config.variant,
                               max_iter=config.max_iter)
    if config.output_path:
        save_bundle(bundle, config.output_path)
    if config.verbosity:
        print(f"termination={bundle.termination} "
              f"points={bundle.X_bar.shape[0]} "
              f"inner_dirs={bundle.Y_in.shape[0]} "
              f"outer_dirs={bundle.Y_out.shape[0]} "
              f"wall_time={bundle.stats.wall_time:.2f}s")
    print(f"optimizations={bundle.stats.n_scalarizations} "
          f"polyhedron_evals={bundle.stats.n_polyhedron_evals}")
    if config.plot_prefix:
        paths = emit_plot_data(bundle, instance, config.plot_prefix,
                               radius=config.radius)
        if config.verbosity:
            for p in paths:
                print(f"wrote {p}")
    return EXIT_OK


def _verify(config: RunConfig) -> int:
    instance = load_instance(config.input_path)
    bundle = load_bundle(config.bundle_path)
    report = verify_bundle(bundle, instance, seed=config.seed)
    labels = [
        ("cone_consistent", report.cone_consistent),
        ("inner_directions_recede", report.inner_directions_recede),
        ("vertices_near_hull", report.vertices_near_hull),
        ("cuts_contain_samples", report.cuts_contain_samples),
    ]
    for name, value in labels:
        state = "pass" if value is not False else "FAIL"
        print(f"{name}: {state}")
    if config.verbosity:
        for key, val in report.details.items():
            print(f"  {key}={val}")
    return EXIT_OK if report.passed else EXIT_VERIFY


def _plot_data(config: RunConfig) -> int:
    instance = load_instance(config.input_path)
    bundle = load_bundle(config.bundle_path)
    radius = config.radius if config.radius is not None \
        else truncation_radius(bundle)
    paths = emit_plot_data(bundle, instance, config.plot_prefix, radius=radius)
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def run(config: RunConfig) -> int:
    """Execute one command; returns the process exit code."""
    try:
        if config.command == "solve":
            return _solve(config)
        if config.command == "verify":
            return _verify(config)
        if config.command == "plot-data":
            return _plot_data(config)
        print(f"unknown command {config.command!r}", file=sys.stderr)
        return EXIT_IO
    except _SOLVER_ERRORS as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except _IO_ERRORS as exc:
        print(f"input/output error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConvprojError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convproj",
        description="Polyhedral approximation of images of convex sets "
                    "under linear maps.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("instance", help="problem file (JSON)")
        p.add_argument("--seed", type=int, default=0,
                       help="RNG seed for verification sampling")
        p.add_argument("--verbose", "-v", action="count", default=0)

    p_solve = sub.add_parser("solve", help="approximate the image set")
    common(p_solve)
    p_solve.add_argument("--out", help="bundle output path")
    p_solve.add_argument("--epsilon", type=float, default=0.01,
                         help="image approximation tolerance (l1)")
    p_solve.add_argument("--delta", type=float, default=0.1,
                         help="recession cone tolerance (l1)")
    p_solve.add_argument("--variant", choices=["box", "simplex"],
                         default="box", help="initialization weights")
    p_solve.add_argument("--algorithm", choices=["auto", "bounded", "general"],
                         default="auto")
    p_solve.add_argument("--max-iter", type=int, default=200)
    p_solve.add_argument("--plot", help="plot-data output prefix")
    p_solve.add_argument("--radius", type=float,
                         help="truncation radius for plot output")

    p_verify = sub.add_parser("verify", help="re-check a solved bundle")
    common(p_verify)
    p_verify.add_argument("--bundle", required=True, help="bundle file")

    p_plot = sub.add_parser("plot-data", help="emit SVG/OFF plot files")
    common(p_plot)
    p_plot.add_argument("--bundle", required=True, help="bundle file")
    p_plot.add_argument("--out", required=True, help="output prefix")
    p_plot.add_argument("--radius", type=float,
                        help="truncation radius for unbounded sets")

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=args.command,
        input_path=args.instance,
        output_path=getattr(args, "out", None) if args.command == "solve" else None,
        bundle_path=getattr(args, "bundle", None),
        plot_prefix=(getattr(args, "plot", None) if args.command == "solve"
                     else getattr(args, "out", None)),
        epsilon=getattr(args, "epsilon", 0.01),
        delta=getattr(args, "delta", 0.1),
        variant=getattr(args, "variant", "box"),
        algorithm=getattr(args, "algorithm", "auto"),
        max_iter=getattr(args, "max_iter", 200),
        seed=args.seed,
        radius=getattr(args, "radius", None),
        verbosity=args.verbose,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(config_from_args(args))


if __name__ == "__main__":
    sys.exit(main())
