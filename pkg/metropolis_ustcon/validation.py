import dataclasses
import logging
import math
from typing import Callable, Dict, Iterator, List

import numpy

from . import chains, lab, solver
from .exceptions import InfeasibleParameterError
from .generators import (
    gen_disconnected_pair,
    gen_glitter_star,
    gen_lollipop,
    gen_random_connected_graph,
    gen_random_graph,
)
from .graph import (
    ConnectivityQuery,
    Graph,
    bfs_connected,
    connected_components,
    validate_graph,
)
from .split import SplitView
from .walks import (
    POTENTIALS,
    RandomStream,
    UnitPotential,
    next_state,
    stationary_distribution,
    transition_matrix,
)

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class ValidationBudget:
    """Sizes of a validation run

    Attributes
    ----------
    graphs : int
        Fuzzed graphs per check
    samples : int
        One-step samples per state in the kernel comparisons
    trials : int
        Monte-Carlo trials per estimator cell
    """

    graphs: int
    samples: int
    trials: int


BUDGETS: Dict[str, ValidationBudget] = {
    "small": ValidationBudget(graphs=4, samples=2000, trials=200),
    "medium": ValidationBudget(graphs=10, samples=20000, trials=1000),
    "large": ValidationBudget(graphs=25, samples=200000, trials=2000),
}


@dataclasses.dataclass
class CheckResult:
    suite: str
    check: str
    passed: bool
    detail: str = ""


def _seeds(rng: RandomStream, count: int) -> List[int]:
    return rng.generator.integers(0, 2**31, size=count).tolist()


def fuzz_graphs(
    rng: RandomStream, count: int, max_nodes: int, connected: bool = False
) -> Iterator[Graph]:
    """Random graphs with ``2 <= n <= max_nodes``, optionally connected"""
    for seed in _seeds(rng, count):
        local = numpy.random.default_rng(seed)
        n = int(local.integers(2, max_nodes + 1))
        pairs = n * (n - 1) // 2
        if connected:
            m = int(local.integers(n - 1, pairs + 1))
            yield gen_random_connected_graph(n, m, seed)
        else:
            m = int(local.integers(0, pairs + 1))
            yield gen_random_graph(n, m, seed)


def _within_sampling_error(
    counts: numpy.ndarray, probabilities: numpy.ndarray, sigmas: float = 5.0
) -> bool:
    samples = counts.sum()
    frequencies = counts / samples
    spread = numpy.sqrt(probabilities * (1 - probabilities) / samples)
    error = numpy.abs(frequencies - probabilities)
    return bool(numpy.all(error <= sigmas * spread + 1.0 / samples))


def check_graph(
    budget: ValidationBudget, rng: RandomStream
) -> List[CheckResult]:
    results = []
    families = {
        "glitter:7": gen_glitter_star(7),
        "lollipop:5:4": gen_lollipop(5, 4),
    }
    for name, g in families.items():
        problems = validate_graph(g)
        results.append(
            CheckResult(
                "graph", f"valid {name}", not problems, "; ".join(problems)
            )
        )

    for k, g in enumerate(fuzz_graphs(rng, budget.graphs, 30)):
        problems = validate_graph(g)
        labels = connected_components(g)
        agrees = all(
            bfs_connected(g, ConnectivityQuery(u, v))
            == (labels[u] == labels[v])
            for u in range(g.node_count)
            for v in range(u + 1, g.node_count)
        )
        results.append(
            CheckResult(
                "graph",
                f"fuzz {k} ({g!r})",
                not problems and agrees,
                "; ".join(problems),
            )
        )
    return results


def check_kernel(
    budget: ValidationBudget, rng: RandomStream
) -> List[CheckResult]:
    results = []
    for k, g in enumerate(fuzz_graphs(rng, budget.graphs, 6)):
        for name, f in POTENTIALS.items():
            matrix = transition_matrix(g, f)
            passed = chains.is_row_stochastic(matrix)
            for v in range(g.node_count):
                counts = numpy.zeros(g.node_count)
                for _ in range(budget.samples):
                    counts[next_state(g, f, v, rng)] += 1
                passed = passed and _within_sampling_error(counts, matrix[v])
            check = f"{name} sampled vs matrix, graph {k}"
            results.append(CheckResult("kernel", check, passed))
    return results


def check_stationarity(
    budget: ValidationBudget, rng: RandomStream
) -> List[CheckResult]:
    results = []
    graphs = fuzz_graphs(rng, budget.graphs * 5, 50, connected=True)
    for k, g in enumerate(graphs):
        unit = transition_matrix(g, UnitPotential())
        uniform = numpy.full(g.node_count, 1.0 / g.node_count)
        passed = chains.is_stationary(unit, uniform)
        for f in POTENTIALS.values():
            pi = stationary_distribution(g, f)
            passed = passed and chains.satisfies_detailed_balance(
                transition_matrix(g, f), pi
            )
        results.append(
            CheckResult("stationarity", f"graph {k} ({g!r})", passed)
        )
    return results


def check_reversal(
    budget: ValidationBudget, rng: RandomStream
) -> List[CheckResult]:
    results = []
    t = 40
    for k, g in enumerate(fuzz_graphs(rng, budget.graphs * 2, 10)):
        n = g.node_count
        visits = numpy.array(
            [
                lab.exact_visit_counts(g, "unit", numpy.eye(n)[i], t)
                for i in range(n)
            ]
        )
        symmetric = bool(numpy.allclose(visits, visits.T, rtol=0.0, atol=1e-9))
        uniform = numpy.full(n, 1.0 / n)
        stationary = lab.exact_visit_counts(g, "unit", uniform, t)
        balanced = bool(numpy.allclose(stationary, t / n, rtol=0.0, atol=1e-9))
        results.append(
            CheckResult(
                "reversal", f"graph {k} ({g!r})", symmetric and balanced
            )
        )
    return results


def check_split(
    budget: ValidationBudget, rng: RandomStream
) -> List[CheckResult]:
    results = []
    for k, g in enumerate(fuzz_graphs(rng, budget.graphs, 8)):
        for split in (1, 2):
            view = SplitView(g, split)
            limit = g.node_count + 2 * g.edge_count / split
            bound = g.edge_count == 0 or view.node_count < limit
            degrees_ok = all(
                view.get_degree_star(node) <= split + 2
                for node in view.iter_nodes()
            )

            materialized = view.materialize()
            labels = connected_components(materialized)
            base = connected_components(g)
            owners = [view.node_at(a).vertex for a in range(view.node_count)]
            lifted = base[owners]
            same = bool(
                numpy.array_equal(
                    labels[:, None] == labels[None, :],
                    lifted[:, None] == lifted[None, :],
                )
            )

            matrix = transition_matrix(materialized, UnitPotential())
            sampled = True
            for node in view.iter_nodes():
                counts = numpy.zeros(view.node_count)
                for _ in range(budget.samples):
                    counts[view.node_id(view.next_state_star(node, rng))] += 1
                sampled = sampled and _within_sampling_error(
                    counts, matrix[view.node_id(node)]
                )

            passed = bound and degrees_ok and same and sampled
            detail = (
                f"n* bound={bound} degrees={degrees_ok} "
                f"components={same} kernel={sampled}"
            )
            results.append(
                CheckResult("split", f"graph {k} D={split}", passed, detail)
            )
    return results


def check_returns(
    budget: ValidationBudget, rng: RandomStream
) -> List[CheckResult]:
    results = []
    graphs = fuzz_graphs(rng, budget.graphs * 2, 20, connected=True)
    for k, g in enumerate(graphs):
        low, high = g.max_degree**2, 6 * g.node_count**2
        if low >= high:
            continue
        t = int(rng.generator.integers(low, high))
        i = int(rng.generator.integers(0, g.node_count))
        report = lab.measure_return_counts(g, "unit", i, t, budget.trials, rng)
        results.append(
            CheckResult(
                "returns",
                f"graph {k} node {i} t={t}",
                report.upper(3.0) < report.bound,
                f"{report.upper(3.0):.3f} vs {report.bound:.3f}",
            )
        )
    return results


def check_solver(
    budget: ValidationBudget, rng: RandomStream
) -> List[CheckResult]:
    results = []
    graphs = list(fuzz_graphs(rng, budget.graphs * 2, 12, connected=True))

    sound = True
    for g in graphs:
        doubled, query = gen_disconnected_pair(g)
        config = solver.LandmarkConfig(p=4, c_scale=0.01)
        landmark = solver.test_connectivity(doubled, query, config, rng)
        logspace = solver.solve_logspace(doubled, query, rng, 0.01)
        sound = sound and not landmark.connected and not logspace.connected
    results.append(
        CheckResult("solver", "never connected across components", sound)
    )

    complete = 0
    for g in graphs:
        query = ConnectivityQuery(0, g.node_count - 1)
        if bfs_connected(g, query):
            result = solver.test_connectivity(
                g, query, solver.LandmarkConfig(p=8), rng
            )
            complete += result.connected
    results.append(
        CheckResult(
            "solver",
            "landmark solver connects connected pairs",
            complete >= math.floor(0.95 * len(graphs)),
            f"{complete} of {len(graphs)}",
        )
    )
    return results


Suite = Callable[[ValidationBudget, RandomStream], List[CheckResult]]

SUITES: Dict[str, Suite] = {
    "graph": check_graph,
    "kernel": check_kernel,
    "stationarity": check_stationarity,
    "reversal": check_reversal,
    "split": check_split,
    "returns": check_returns,
    "solver": check_solver,
}


def run_suite(name: str, budget: str, rng: RandomStream) -> List[CheckResult]:
    """Run one suite, or every suite for ``name == "all"``

    Each suite draws from its own stream spawned from ``rng``.
    """
    if budget not in BUDGETS:
        raise InfeasibleParameterError(f"unknown budget '{budget}'")
    if name != "all" and name not in SUITES:
        raise InfeasibleParameterError(f"unknown suite '{name}'")

    names = list(SUITES) if name == "all" else [name]
    streams = dict(zip(SUITES, rng.spawn(len(SUITES))))
    results = []
    for suite in names:
        logger.info("running suite %s with budget %s", suite, budget)
        results += SUITES[suite](BUDGETS[budget], streams[suite])
    return results
