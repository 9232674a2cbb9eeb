import argparse
import dataclasses
import datetime
import json
import logging
import os
import pathlib
import sys
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy
import pandas

from . import __version__, lab, solver, tearsheet, validation
from .exceptions import InfeasibleParameterError, WalkError
from .generators import graph_from_spec
from .graph import ConnectivityQuery, Graph, read_edge_list, write_edge_list
from .walks import RandomStream

logger = logging.getLogger(__name__)

SEED_VARIABLE = "METROPOLIS_USTCON_SEED"

EXIT_CONNECTED = 0
EXIT_NOT_CONNECTED = 1
EXIT_USAGE = 2


@dataclasses.dataclass
class RunManifest:
    """Everything needed to reproduce one CLI run"""

    command: str
    flags: Dict[str, Any]
    seed: Optional[int]
    graph: Optional[str]
    timestamp: str = dataclasses.field(
        default_factory=lambda: datetime.datetime.now(
            datetime.timezone.utc
        ).isoformat()
    )
    version: str = __version__

    @classmethod
    def from_args(
        cls,
        args: argparse.Namespace,
        seed: Optional[int],
        graph: Optional[str],
    ) -> "RunManifest":
        flags = {
            key: str(value) if isinstance(value, pathlib.Path) else value
            for key, value in sorted(vars(args).items())
            if key != "handler"
        }
        return cls(command=args.command, flags=flags, seed=seed, graph=graph)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2)

    def write(self, path: Optional[pathlib.Path]) -> None:
        """Write to ``path``, or to stderr when no path is given"""
        if path is None:
            sys.stderr.write(self.to_json() + "\n")
            return
        path.write_text(self.to_json() + "\n", encoding="utf-8")


def resolve_seed(seed: Optional[int]) -> int:
    """The explicit seed, else the environment default, else fresh entropy

    Raises
    ------
    InfeasibleParameterError
        If the seed is negative or the environment value is not an integer
    """
    if seed is None and os.environ.get(SEED_VARIABLE):
        try:
            seed = int(os.environ[SEED_VARIABLE])
        except ValueError:
            raise InfeasibleParameterError(
                f"{SEED_VARIABLE} must be an integer"
            ) from None
    if seed is None:
        seed = int(numpy.random.SeedSequence().entropy)
        logger.warning("no seed given, drew seed %d", seed)
    if seed < 0:
        raise InfeasibleParameterError(f"seed must be >= 0, got {seed}")
    return seed


def parse_int_list(text: str) -> List[int]:
    try:
        return [int(token) for token in text.split(",") if token.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers: {text}"
        )


def parse_name_list(text: str) -> List[str]:
    return [token.strip() for token in text.split(",") if token.strip()]


def load_graph(
    args: argparse.Namespace,
) -> Tuple[Graph, Optional[ConnectivityQuery], str]:
    """Graph, built-in query and descriptor from ``--graph`` or ``--gen``"""
    if args.graph is not None:
        return read_edge_list(args.graph), None, str(args.graph)
    g, query = graph_from_spec(args.gen)
    return g, query, args.gen


def cmd_solve(args: argparse.Namespace) -> int:
    g, query, descriptor = load_graph(args)
    if args.s is not None or args.t is not None:
        if args.s is None or args.t is None:
            raise InfeasibleParameterError(
                "--s and --t must be given together"
            )
        query = ConnectivityQuery(args.s, args.t)
    if query is None:
        raise InfeasibleParameterError(
            f"'{descriptor}' has no built-in query, pass --s and --t"
        )

    seed = resolve_seed(args.seed)
    rng = RandomStream(seed)

    if args.solver == "logspace":
        result = solver.solve_logspace(g, query, rng, args.c_scale)
    else:
        config = solver.LandmarkConfig(
            p=args.p,
            gamma=args.gamma,
            beta=args.beta,
            c_scale=args.c_scale,
            seed=seed,
            early_exit=args.early_exit,
            split=args.split,
        )
        result = solver.test_connectivity(g, query, config, rng)

    sys.stdout.write(result.to_json() + "\n")
    RunManifest.from_args(args, seed, descriptor).write(args.manifest)
    return EXIT_CONNECTED if result.connected else EXIT_NOT_CONNECTED


def cmd_generate(args: argparse.Namespace) -> int:
    g, _ = graph_from_spec(args.spec)
    manifest = RunManifest.from_args(args, None, args.spec)

    if args.output == "-":
        write_edge_list(g, sys.stdout)
        manifest.write(args.manifest)
        return 0

    path = pathlib.Path(args.output)
    write_edge_list(g, path)
    sidecar = path.with_name(path.name + ".manifest.json")
    manifest.write(args.manifest or sidecar)
    logger.info("wrote %s with n=%d m=%d", path, g.node_count, g.edge_count)
    return 0


def bench_frames(
    sweep: Dict[str, Dict[int, lab.EstimatorReport]], family: str, seed: int
) -> Tuple[pandas.DataFrame, pandas.DataFrame]:
    """Per-cell rows and the per-kernel summary block of a cover-time sweep"""
    cells = pandas.DataFrame(
        [
            {
                "family": family,
                "kernel": kernel,
                "n": n,
                "seed": report.seed,
                "trials": report.trials,
                "estimate": report.estimate,
                "standard_error": report.standard_error,
                "censored": report.censored,
            }
            for kernel, reports in sweep.items()
            for n, report in sorted(reports.items())
        ]
    )

    covers = tearsheet.CoverTimeTearsheet().create_tearsheet(sweep).T
    covers.columns = [f"n={n}" for n in covers.columns]
    blocks = [covers]
    if len(next(iter(sweep.values()))) >= 3:
        blocks.append(tearsheet.ScalingTearsheet().create_tearsheet(sweep).T)
    else:
        logger.warning("fewer than 3 sizes, no scaling exponent fitted")
    summary = pandas.concat(blocks, axis=1)
    summary.index.name = "kernel"
    summary = summary.reset_index()
    summary.insert(1, "seed", seed)
    return cells, summary


def cmd_bench(args: argparse.Namespace) -> int:
    if not args.sizes:
        raise InfeasibleParameterError("--sizes must name at least one size")
    seed = resolve_seed(args.seed)
    rng = RandomStream(seed)

    sweep = lab.cover_time_sweep(
        args.family,
        args.sizes,
        args.kernels,
        args.trials,
        rng,
        step_cap_factor=args.step_cap_factor,
        start=args.start,
        jobs=args.jobs,
    )
    cells, summary = bench_frames(sweep, args.family, seed)

    out = sys.stdout
    cells.to_csv(out, index=False, lineterminator="\n")
    out.write("\n")
    summary.to_csv(out, index=False, lineterminator="\n")

    RunManifest.from_args(args, seed, args.family).write(args.manifest)
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    seed = resolve_seed(args.seed)
    results = validation.run_suite(args.suite, args.budget, RandomStream(seed))

    frame = pandas.DataFrame(
        [(r.suite, r.check, r.passed, seed) for r in results],
        columns=["suite", "check", "passed", "seed"],
    )
    frame.to_csv(sys.stdout, index=False, lineterminator="\n")

    failures = [r for r in results if not r.passed]
    for failure in failures:
        sys.stderr.write(
            f"FAILED {failure.suite}: {failure.check} {failure.detail}\n"
        )

    RunManifest.from_args(args, seed, None).write(args.manifest)
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--seed",
        type=int,
        default=None,
        help=f"master seed (default: ${SEED_VARIABLE} or fresh entropy)",
    )
    common.add_argument(
        "--verbose", action="store_true", help="debug logging on stderr"
    )
    common.add_argument(
        "--manifest",
        type=pathlib.Path,
        default=None,
        help="write the run manifest to this path",
    )

    parser = argparse.ArgumentParser(
        prog="metropolis-ustcon",
        description=(
            "Metropolis-Hastings walks for undirected s-t connectivity."
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser(
        "solve", parents=[common], help="answer one connectivity query"
    )
    source = solve.add_mutually_exclusive_group(required=True)
    source.add_argument("--graph", type=pathlib.Path, help="edge-list file")
    source.add_argument("--gen", help="generator spec, e.g. glitter:50")
    solve.add_argument("--s", type=int, default=None, help="source node")
    solve.add_argument("--t", type=int, default=None, help="target node")
    solve.add_argument("--solver", choices=solver.SOLVERS, default="landmark")
    solve.add_argument("--p", type=int, default=8, help="number of landmarks")
    solve.add_argument(
        "--c-scale", type=float, default=1.0, help="walk length multiplier"
    )
    solve.add_argument("--gamma", type=float, default=solver.GAMMA)
    solve.add_argument("--beta", type=float, default=solver.BETA)
    solve.add_argument(
        "--split",
        type=int,
        default=None,
        help="override the split parameter D",
    )
    solve.add_argument(
        "--early-exit", action=argparse.BooleanOptionalAction, default=True
    )
    solve.set_defaults(handler=cmd_solve)

    generate = commands.add_parser(
        "generate", parents=[common], help="write a generated graph"
    )
    generate.add_argument(
        "spec", help="generator spec, e.g. random:100:300:seed7"
    )
    generate.add_argument(
        "--output", "-o", default="-", help="edge-list file, '-' for stdout"
    )
    generate.set_defaults(handler=cmd_generate)

    bench = commands.add_parser(
        "bench", parents=[common], help="cover-time sweep as CSV"
    )
    bench.add_argument(
        "--family",
        default="glitter",
        help="generator family, the size is appended or substituted for {n}",
    )
    bench.add_argument(
        "--sizes", type=parse_int_list, default=[25, 50, 100, 200]
    )
    bench.add_argument(
        "--kernels",
        type=parse_name_list,
        default=["unit", "unbiased", "finetuned"],
        help="comma-separated: unit, unbiased, finetuned, hybrid",
    )
    bench.add_argument("--trials", type=int, default=100)
    bench.add_argument(
        "--step-cap-factor",
        type=float,
        default=100.0,
        help="per-trial step cap as a multiple of n^2",
    )
    bench.add_argument("--start", type=int, default=0, help="start node")
    bench.add_argument(
        "--jobs", type=int, default=1, help="worker processes for trials"
    )
    bench.set_defaults(handler=cmd_bench)

    check = commands.add_parser(
        "validate", parents=[common], help="run invariant suites"
    )
    check.add_argument(
        "--suite", choices=[*validation.SUITES, "all"], default="all"
    )
    check.add_argument(
        "--budget", choices=list(validation.BUDGETS), default="small"
    )
    check.set_defaults(handler=cmd_validate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of the ``metropolis-ustcon`` command

    Returns
    -------
    int
        0 for CONNECTED or success, 1 for PROBABLY NOT CONNECTED or failed
        checks, 2 for usage errors
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )

    try:
        return args.handler(args)
    except (WalkError, OSError) as exc:
        sys.stderr.write(f"metropolis-ustcon: error: {exc}\n")
        return EXIT_USAGE
