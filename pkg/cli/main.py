"""quermassflow command line: shapes, flows, xi tables, verification and the acceptance suite

Structure comes from a JSON config; flags only pick paths, verbosity and
dry runs. Exit codes: 0 success, 1 verification failure, 2 flow breakdown,
3 config error.
"""

import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from rich.console import Console
from rich.logging import RichHandler

from core.errors import ConfigError, DomainError, FlowBreakdownError, QuermassFlowError
from core.flow import FlowRunner
from core.quermass import quermass_vector
from core.surface import (
    RadialGraph,
    compute_geometry,
    geodesic_sphere,
    minkowski_residual,
    perturbed_sphere,
    support_gradient_residual,
)
from core.trace import FlowTrace
from core.xi import build_xi
from verify.experiments import convergence_study, sweep, verify_inequalities
from verify.formatter import (
    ReportFormatter,
    SuiteFormatter,
    TraceFormatter,
    csv_table,
    to_json,
    write_text,
    xi_table_csv,
)
from verify.suite import plan, run_suite

from .config import RunConfig, config_schema, load_config

logger = logging.getLogger("quermassflow")

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_BREAKDOWN = 2
EXIT_CONFIG = 3

SUBCOMMANDS = {
    "shape": "eval",
    "flow": "run",
    "xi": "dump",
    "verify": "run",
}

stdout = Console()
stderr = Console(stderr=True)


def setup_logging(verbose: int = 0, quiet: bool = False):
    level = logging.WARNING if quiet else (logging.DEBUG if verbose else logging.INFO)
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=stderr, show_path=False)],
        force=True,
    )


def build_shape(config: RunConfig) -> RadialGraph:
    shape = config.shape
    if shape.kind == "file":
        g = RadialGraph.load(shape.path)
        if g.n != config.n:
            raise DomainError(f"{shape.path} holds an n={g.n} graph, config says n={config.n}")
        return g
    grid = config.grid.build(config.n)
    if shape.kind == "sphere":
        return geodesic_sphere(grid, shape.rho0)
    return perturbed_sphere(grid, shape.rho0, shape.eps, shape.ell, shape.order)


def _write(config: RunConfig, stem: str, json_text: Optional[str], csv_text: Optional[str]):
    out = config.output
    if "json" in out.formats and json_text is not None:
        logger.info("wrote %s", write_text(out.path(stem, "json"), json_text))
    if "csv" in out.formats and csv_text is not None:
        logger.info("wrote %s", write_text(out.path(stem, "csv"), csv_text))


# --- commands ---------------------------------------------------------------------


def shape_eval(config: RunConfig) -> int:
    g = build_shape(config)
    fields = compute_geometry(g)
    q = quermass_vector(g, fields)
    record: Dict[str, Any] = {
        "n": g.n,
        "grid": {"mode": g.grid.mode, "resolution": list(g.grid.resolution)},
        "shape": config.shape.model_dump(mode="json"),
        "convex": fields.is_convex,
        "min_curvature": fields.min_curvature,
        "quermass": q.to_record(),
        "W": {str(k): q.w(k) for k in range(g.n)},
        "minkowski_residual": {str(k): minkowski_residual(fields, k) for k in range(g.n)},
        "support_gradient_residual": support_gradient_residual(fields),
    }
    rows = [[k, q[k], record["minkowski_residual"].get(str(k))] for k in range(-1, g.n)]
    _write(config, "shape", to_json(record), csv_table(["k", "A_k", "minkowski_residual"], rows))
    if config.output.save_shape:
        path = config.output.path("shape_graph", "json")
        path.parent.mkdir(parents=True, exist_ok=True)
        g.save(path)
        logger.info("wrote %s", path)
    return EXIT_OK


def _write_trace(config: RunConfig, trace: FlowTrace):
    _write(config, "trace", TraceFormatter.to_json(trace), TraceFormatter.to_csv(trace))


def flow_run(config: RunConfig) -> int:
    g = build_shape(config)
    runner = FlowRunner(config.flow)
    runner.on_record = lambda p: logger.info(
        "t=%.6g  rho in [%.6g, %.6g]  min kappa %.4g  max|f| %.3g",
        p.t,
        p.min_rho,
        p.max_rho,
        p.min_curvature,
        p.max_speed,
    )
    try:
        trace = runner.run(g)
    except FlowBreakdownError as exc:
        logger.error("flow breakdown: %s", exc)
        if exc.spectrum is not None:
            logger.error("offending spectrum %s", list(exc.spectrum.values))
        if exc.trace is not None:
            _write_trace(config, exc.trace)
        return EXIT_BREAKDOWN
    _write_trace(config, trace)
    return EXIT_OK


def xi_dump(config: RunConfig) -> int:
    opts = config.xi
    f = build_xi(
        config.n,
        opts.k,
        opts.l,
        opts.kind,
        knots=opts.knots,
        variant=opts.variant,
        reading=opts.reading,
    )
    s, values = f.samples(opts.samples, opts.margin)
    record = {
        "label": f.label,
        "n": f.n,
        "k": f.k,
        "l": f.l,
        "kind": f.kind,
        "domain": list(f.domain),
        "s": s.tolist(),
        "xi": np.asarray(values).tolist(),
    }
    _write(config, "xi", to_json(record), xi_table_csv(s, np.asarray(values)))
    return EXIT_OK


def verify_run(config: RunConfig) -> int:
    tolerance = config.tolerances.inequality
    if config.family is not None:
        result = asyncio.run(sweep(config.family, config.effective_workers(), tolerance))
        reports, summary = result.reports, result.summary
        for failure in result.failures:
            logger.error("%s: %s", failure["experiment_id"], failure["error"])
    else:
        g = build_shape(config)
        shape = config.shape.model_dump(mode="json")
        reports = [verify_inequalities(g, "single", shape, tolerance)]
        summary = {"experiments": 1, "all_pass": reports[0].passed}

    passed = bool(summary["all_pass"])
    if config.convergence is not None:
        conv = config.convergence
        shape = config.shape
        result = convergence_study(
            conv.check,
            conv.resolutions,
            n=config.n,
            mode=config.grid.mode,
            rho0=shape.rho0,
            eps=shape.eps,
            ell=shape.ell,
            k=conv.k,
        )
        summary["convergence"] = result.to_record()
        _write(config, "convergence", None, ReportFormatter.convergence_csv(result))

    _write(
        config,
        "report",
        ReportFormatter.to_json(reports, summary),
        ReportFormatter.to_csv(reports),
    )
    stdout.print(ReportFormatter.summary_table(reports))
    return EXIT_OK if passed else EXIT_VERIFY_FAILED


def suite(config: RunConfig, dry_run: bool = False) -> int:
    settings = config.suite.model_copy(update={"workers": config.effective_workers()})
    if dry_run:
        stdout.print(SuiteFormatter.plan_table(plan(settings)))
        return EXIT_OK
    report = asyncio.run(run_suite(settings))
    _write(config, "suite", SuiteFormatter.to_json(report), None)
    stdout.print(SuiteFormatter.summary_table(report))
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


COMMANDS = {
    "shape": shape_eval,
    "flow": flow_run,
    "xi": xi_dump,
    "verify": verify_run,
}


def dispatch(config: RunConfig, dry_run: bool = False) -> int:
    """Run the pipeline `config.command` names and return the exit code"""
    try:
        config.output.check_writable()
        if config.command == "suite":
            return suite(config, dry_run)
        return COMMANDS[config.command](config)
    except ConfigError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except DomainError as exc:
        logger.error("invalid parameters: %s", exc)
        return EXIT_CONFIG
    except FlowBreakdownError as exc:
        logger.error("flow breakdown: %s", exc)
        return EXIT_BREAKDOWN
    except QuermassFlowError as exc:
        logger.error("%s", exc)
        return EXIT_VERIFY_FAILED


# --- argument parsing -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quermassflow",
        description="Quermassintegral inequalities and curvature flows of convex "
        "hypersurfaces in the sphere",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    groups = parser.add_subparsers(dest="group", required=True)

    for group, action in SUBCOMMANDS.items():
        sub = groups.add_parser(group, help=f"{group} {action}")
        actions = sub.add_subparsers(dest="action", required=True)
        cmd = actions.add_parser(action)
        cmd.add_argument("--config", type=Path, required=True, help="JSON run config")
        cmd.add_argument("--out", type=Path, help="output directory (overrides the config)")

    suite_cmd = groups.add_parser("suite", help="run the acceptance battery")
    suite_cmd.add_argument("--config", type=Path, help="JSON run config with a suite section")
    suite_cmd.add_argument("--out", type=Path, help="output directory (overrides the config)")
    suite_cmd.add_argument("--dry-run", action="store_true", help="print the plan and exit")

    schema_cmd = groups.add_parser("schema", help="print the RunConfig JSON schema")
    schema_cmd.add_argument("--out", type=Path, help="write to this file instead of stdout")
    return parser


def _load(args: argparse.Namespace) -> RunConfig:
    if args.config is None:
        config = RunConfig(command="suite")
    else:
        config = load_config(args.config)
    if config.command != args.group:
        raise ConfigError(
            f"config command {config.command!r} does not match subcommand {args.group!r}",
            ["command"],
        )
    if args.out is not None:
        config = config.model_copy(
            update={"output": config.output.model_copy(update={"directory": args.out})}
        )
    return config


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose, args.quiet)

    if args.group == "schema":
        text = json.dumps(config_schema(), indent=2) + "\n"
        if args.out is None:
            sys.stdout.write(text)
        else:
            write_text(args.out, text)
        return EXIT_OK

    try:
        config = _load(args)
    except ConfigError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    return dispatch(config, getattr(args, "dry_run", False))


if __name__ == "__main__":
    sys.exit(main())
