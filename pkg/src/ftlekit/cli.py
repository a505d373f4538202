"""Command-line entry point: generate, compute, bench, and report.

Exit codes: 0 success; 1 usage error (unknown flag/subcommand, malformed
flag value, missing required flag); 2 data or format error (unreadable or
malformed files, invalid field data); 3 kernel/computation error (zero
horizon, degenerate stencil, trajectory leaving the flow domain).

Machine-readable output goes to files; human-readable summaries go to
standard output (suppressed by --quiet); diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from typing import Sequence

from . import bench as bench_mod
from . import io as io_mod
from .errors import (
    DegenerateStencilError,
    DomainError,
    FormatError,
    HorizonError,
    ValidationError,
)
from .flows import ABCFlow, ConstantDrift, DoubleGyre, FlowSpec, Identity, default_domain
from .core import make_structured_grid
from .flows import generate_flowmap
from .kernels import (
    DEFAULT_CHUNK,
    DataParallel,
    SinglePass,
    compute_ftle_field,
    default_workers,
)

FLOW_NAMES = ("double-gyre", "abc", "identity", "drift")


class _UsageError(Exception):
    def __init__(self, message: str, parser: argparse.ArgumentParser | None = None):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: A003 - argparse hook
        raise _UsageError(message, self)


def _parse_dims(text: str) -> tuple[int, ...]:
    parts = text.lower().split("x")
    try:
        dims = tuple(int(p) for p in parts)
    except ValueError:
        raise _UsageError(f"--dims expects NXxNY[xNZ], got {text!r}") from None
    if len(dims) not in (2, 3):
        raise _UsageError(f"--dims expects 2 or 3 axes, got {len(dims)}")
    return dims


def _parse_floats(text: str, flag: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise _UsageError(f"{flag} expects a comma-separated list of numbers, got {text!r}") from None


def _parse_domain(text: str, dim: int) -> tuple[tuple[float, float], ...]:
    vals = _parse_floats(text, "--domain")
    if len(vals) != 2 * dim:
        raise _UsageError(
            f"--domain expects {2 * dim} numbers for a {dim}D grid, got {len(vals)}"
        )
    pairs = tuple((vals[2 * a], vals[2 * a + 1]) for a in range(dim))
    if any(hi <= lo for lo, hi in pairs):
        raise _UsageError(f"--domain bounds must satisfy lo < hi, got {text!r}")
    return pairs


def _make_flow(args: argparse.Namespace, dim: int) -> FlowSpec:
    if args.flow == "double-gyre":
        return DoubleGyre(args.amplitude, args.epsilon, args.omega)
    if args.flow == "abc":
        if dim != 3:
            raise _UsageError("--flow abc needs 3D dims")
        return ABCFlow(args.abc_a, args.abc_b, args.abc_c)
    if args.flow == "identity":
        return Identity()
    if args.velocity is None:
        raise _UsageError("--flow drift requires --velocity")
    vel = _parse_floats(args.velocity, "--velocity")
    if len(vel) != dim:
        raise _UsageError(f"--velocity needs {dim} components, got {len(vel)}")
    return ConstantDrift(vel)


def _add_flow_flags(p: argparse.ArgumentParser):
    p.add_argument("--flow", choices=FLOW_NAMES, default="double-gyre",
                   help="velocity field (default: double-gyre)")
    p.add_argument("--amplitude", type=float, default=0.1,
                   help="double-gyre amplitude (default: 0.1)")
    p.add_argument("--epsilon", type=float, default=0.25,
                   help="double-gyre perturbation (default: 0.25)")
    p.add_argument("--omega", type=float, default=2.0 * math.pi / 10.0,
                   help="double-gyre angular frequency (default: 2*pi/10)")
    p.add_argument("--abc-a", type=float, default=math.sqrt(3.0),
                   help="ABC coefficient A (default: sqrt(3))")
    p.add_argument("--abc-b", type=float, default=math.sqrt(2.0),
                   help="ABC coefficient B (default: sqrt(2))")
    p.add_argument("--abc-c", type=float, default=1.0,
                   help="ABC coefficient C (default: 1)")
    p.add_argument("--velocity", default=None,
                   help="drift velocity components, comma-separated (required for --flow drift)")


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--quiet", action="store_true",
                        help="suppress informational output")
    common.add_argument("--seed", type=int, default=None,
                        help="seed for randomized tooling; current subcommands are deterministic")

    parser = _Parser(prog="ftlekit", parents=[common],
                     description="FTLE fields from discrete flowmaps")
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser, metavar="SUBCOMMAND")

    g = sub.add_parser("generate", parents=[common],
                       help="advect a seed grid and write a flowmap (.ftlm)")
    _add_flow_flags(g)
    g.add_argument("--dims", required=True, help="grid shape, e.g. 500x400 or 100x80x50")
    g.add_argument("--domain", default=None,
                   help="axis bounds x0,x1,y0,y1[,z0,z1]; default: the flow's natural domain."
                        " Spacing is (hi-lo)/n per axis, so the high edge is excluded")
    g.add_argument("--t0", type=float, default=0.0, help="start time (default: 0)")
    g.add_argument("--T", type=float, required=True, help="integration horizon (signed)")
    g.add_argument("--dt", type=float, required=True, help="RK4 step (sign must match T)")
    g.add_argument("--out", required=True, help="output .ftlm path")
    g.set_defaults(func=_cmd_generate)

    c = sub.add_parser("compute", parents=[common],
                       help="compute the FTLE field of a flowmap file")
    c.add_argument("--input", required=True, help="input .ftlm path")
    c.add_argument("--strategy", choices=("data-parallel", "single-pass"),
                   default="data-parallel", help="execution strategy (default: data-parallel)")
    c.add_argument("--workers", type=int, default=None,
                   help="data-parallel worker threads (default: logical CPU count)")
    c.add_argument("--chunk", type=int, default=DEFAULT_CHUNK,
                   help=f"points per work unit (default: {DEFAULT_CHUNK})")
    c.add_argument("--out", required=True, help="output .ftlf path")
    c.add_argument("--csv", default=None, help="also write x,y[,z],ftle rows here")
    c.set_defaults(func=_cmd_compute)

    b = sub.add_parser("bench", parents=[common],
                       help="time the kernel over sizes x dims x strategies")
    _add_flow_flags(b)
    b.add_argument("--sizes", default="200000,400000,600000",
                   help="comma-separated point counts (default: 200000,400000,600000)")
    b.add_argument("--dims", default="2,3", help="comma-separated dimensions (default: 2,3)")
    b.add_argument("--strategies", default="data-parallel,single-pass",
                   help="comma-separated strategies (default: data-parallel,single-pass)")
    b.add_argument("--reps", type=int, default=5, help="timed repetitions (default: 5)")
    b.add_argument("--warmup", type=int, default=1, help="discarded warmup runs (default: 1)")
    b.add_argument("--workers", type=int, default=None,
                   help="data-parallel worker threads (default: logical CPU count)")
    b.add_argument("--chunk", type=int, default=DEFAULT_CHUNK,
                   help=f"points per work unit (default: {DEFAULT_CHUNK})")
    b.add_argument("--t0", type=float, default=0.0, help="advection start time (default: 0)")
    b.add_argument("--T", type=float, default=5.0, help="advection horizon (default: 5)")
    b.add_argument("--dt", type=float, default=0.1, help="advection step (default: 0.1)")
    b.add_argument("--out", required=True,
                   help="detail CSV path; medians land next to it as <stem>.summary.csv")
    b.set_defaults(func=_cmd_bench)

    r = sub.add_parser("report", parents=[common],
                       help="render bench results and/or the bundled reference table")
    r.add_argument("--bench", default=None, help="detail CSV from the bench subcommand")
    r.add_argument("--reference", choices=("table1",), default=None,
                   help="append the bundled reference timings")
    r.add_argument("--format", choices=("md", "csv"), default="md",
                   help="output format (default: md)")
    r.set_defaults(func=_cmd_report)

    return parser


def _say(args, message: str):
    if not args.quiet:
        print(message)


def _cmd_generate(args) -> int:
    dims = _parse_dims(args.dims)
    dim = len(dims)
    flow = _make_flow(args, dim)
    if args.domain is not None:
        domain = _parse_domain(args.domain, dim)
    else:
        domain = default_domain(flow, dim)
    spacing = tuple((hi - lo) / d for (lo, hi), d in zip(domain, dims))
    origin = tuple(lo for lo, _ in domain)
    mesh = make_structured_grid(dims, spacing, origin)
    field = generate_flowmap(mesh, flow, args.t0, args.T, args.dt)
    io_mod.write_flowmap(args.out, field, mesh)
    _say(args, f"wrote {mesh.npoints} points ({args.flow}, T={args.T}) to {args.out}")
    return 0


def _cmd_compute(args) -> int:
    if args.strategy == "single-pass":
        strategy = SinglePass()
    else:
        workers = args.workers if args.workers is not None else default_workers()
        strategy = DataParallel(workers=workers, chunk=args.chunk)
    field, mesh = io_mod.read_flowmap(args.input)
    start = time.perf_counter()
    ftle = compute_ftle_field(field, mesh, strategy)
    kernel_ms = (time.perf_counter() - start) * 1e3
    io_mod.write_ftle_field(args.out, ftle)
    if args.csv is not None:
        io_mod.write_ftle_csv(args.csv, ftle, mesh)
    _say(args, f"kernel_ms={kernel_ms:.3f} degenerate_count={ftle.degenerate_count}")
    return 0


def _parse_int_list(text: str, flag: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise _UsageError(f"{flag} expects a comma-separated list of integers, got {text!r}") from None


def _cmd_bench(args) -> int:
    sizes = _parse_int_list(args.sizes, "--sizes")
    dims = _parse_int_list(args.dims, "--dims")
    if any(d not in (2, 3) for d in dims):
        raise _UsageError(f"--dims entries must be 2 or 3, got {args.dims!r}")
    strategies = []
    for name in args.strategies.split(","):
        name = name.strip()
        if name == "single-pass":
            strategies.append(SinglePass())
        elif name == "data-parallel":
            workers = args.workers if args.workers is not None else default_workers()
            strategies.append(DataParallel(workers=workers, chunk=args.chunk))
        else:
            raise _UsageError(f"unknown strategy {name!r}")
    if not strategies:
        raise _UsageError("--strategies must name at least one strategy")
    flow = _make_flow(args, max(dims))
    records = bench_mod.run_suite(
        sizes, dims, strategies,
        reps=args.reps, warmup=args.warmup,
        flow=flow, t0=args.t0, T=args.T, dt=args.dt,
        progress=None if args.quiet else lambda msg: print(f"running {msg}"),
    )
    summary = bench_mod.write_bench_csv(records, args.out)
    _say(args, f"wrote {args.out} and {summary}")
    for rec in records:
        _say(args, f"{rec.dim}D n={rec.npoints} {rec.label}: median {rec.median_ms:.3f} ms")
    return 0


def _cmd_report(args) -> int:
    if args.bench is None and args.reference is None:
        raise _UsageError("report needs --bench and/or --reference")
    records = bench_mod.read_bench_csv(args.bench) if args.bench is not None else []
    reference = bench_mod.reference_table1() if args.reference == "table1" else None
    sys.stdout.write(bench_mod.render_report(records, reference, args.format))
    return 0


def run(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, dispatch, and map exceptions to exit codes."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        (exc.parser or parser).print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if getattr(args, "subcommand", None) is None:
        parser.print_usage(sys.stderr)
        print("error: a subcommand is required", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FormatError, ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DegenerateStencilError, HorizonError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
