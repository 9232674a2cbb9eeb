import dataclasses
import functools
import json
import logging
import math
import multiprocessing
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy
import pandas
import scipy.sparse
import scipy.sparse.linalg
import scipy.stats

from .exceptions import CapacityError, InfeasibleParameterError
from .generators import graph_from_spec
from .graph import (
    Graph,
    bfs_ball,
    component_of,
    connected_components,
    describe,
)
from .walks import (
    DENSE_CAP,
    KernelSpec,
    Potential,
    RandomStream,
    Walker,
    make_walker,
    potential_from_name,
    sparse_transition_matrix,
    stationary_distribution,
)

logger = logging.getLogger(__name__)

# Largest t accepted by the exact visit oracle
EXACT_STEP_CAP = 10**5

# Per-trial cap on hitting and exit times, as a multiple of n^2
HITTING_CAP_FACTOR = 100

Trial = Callable[[RandomStream], Tuple[float, bool]]


@dataclasses.dataclass
class EstimatorReport:
    """Monte-Carlo estimate of one quantity with its per-trial samples

    Attributes
    ----------
    quantity : str
        Name of the estimated quantity, e.g. ``"cover_time"``
    estimate : float
        Mean of the samples
    trials : int
        Number of trials
    standard_error : float, optional
        Sample standard deviation over sqrt(trials); ``None`` for one trial
    samples : numpy.ndarray
        Per-trial values, censored trials holding their cap
    graph : str
        Graph descriptor
    kernel : str
        Kernel descriptor
    seed : int, optional
        Master seed the per-trial streams were spawned from
    censored : int
        Number of trials that reached their step cap
    bound : float, optional
        Theoretical bound the estimate is compared against
    out_of_range : bool
        True when the parameters lie outside the range ``bound`` holds for
    """

    quantity: str
    estimate: float
    trials: int
    standard_error: Optional[float]
    samples: numpy.ndarray
    graph: str
    kernel: str
    seed: Optional[int] = None
    censored: int = 0
    bound: Optional[float] = None
    out_of_range: bool = False

    @classmethod
    def from_samples(
        cls,
        quantity: str,
        samples: Sequence[float],
        graph: str,
        kernel: str,
        seed: Optional[int] = None,
        censored: int = 0,
        bound: Optional[float] = None,
        out_of_range: bool = False,
    ) -> "EstimatorReport":
        samples = numpy.asarray(samples, dtype=numpy.float64)
        trials = len(samples)
        error = None
        if trials >= 2:
            error = float(samples.std(ddof=1) / math.sqrt(trials))
        return cls(
            quantity=quantity,
            estimate=float(samples.mean()) if trials else float("nan"),
            trials=trials,
            standard_error=error,
            samples=samples,
            graph=graph,
            kernel=kernel,
            seed=seed,
            censored=censored,
            bound=bound,
            out_of_range=out_of_range,
        )

    @property
    def is_censored(self) -> bool:
        return self.censored > 0

    def upper(self, sigmas: float = 3.0) -> float:
        """Estimate plus ``sigmas`` standard errors"""
        return self.estimate + sigmas * (self.standard_error or 0.0)

    def summary(self) -> Dict[str, Any]:
        return {
            "quantity": self.quantity,
            "graph": self.graph,
            "kernel": self.kernel,
            "seed": self.seed,
            "trials": self.trials,
            "estimate": self.estimate,
            "standard_error": self.standard_error,
            "censored": self.censored,
            "bound": self.bound,
            "out_of_range": self.out_of_range,
        }

    def to_frame(self) -> pandas.DataFrame:
        """One row per trial followed by a summary row"""
        rows = pandas.DataFrame(
            {
                "row": "trial",
                "trial": numpy.arange(self.trials),
                "value": self.samples,
            }
        )
        summary = pandas.DataFrame(
            [
                {
                    "row": "summary",
                    "trial": None,
                    "value": self.estimate,
                    "standard_error": self.standard_error,
                    "censored": self.censored,
                    "bound": self.bound,
                    "out_of_range": self.out_of_range,
                }
            ]
        )
        frame = pandas.concat([rows, summary], ignore_index=True)
        frame["trial"] = frame["trial"].astype("Int64")
        for name in ("quantity", "graph", "kernel", "seed"):
            frame.insert(0, name, getattr(self, name))
        return frame.reindex(
            columns=[
                "seed",
                "kernel",
                "graph",
                "quantity",
                "row",
                "trial",
                "value",
                "standard_error",
                "censored",
                "bound",
                "out_of_range",
            ]
        )

    def to_csv(self, path_or_buf=None) -> Optional[str]:
        return self.to_frame().to_csv(path_or_buf, index=False)

    def to_json(self) -> str:
        payload = self.summary()
        payload["samples"] = self.samples.tolist()
        return json.dumps(payload, sort_keys=True)


def _kernel_name(kernel: KernelSpec) -> str:
    if isinstance(kernel, (Potential, Walker)):
        return kernel.name
    return str(kernel)


def _as_potential(kernel: Union[str, Potential]) -> Potential:
    if isinstance(kernel, Potential):
        return kernel
    if kernel == "hybrid":
        raise InfeasibleParameterError(
            "the hybrid walk has no fixed transition matrix"
        )
    return potential_from_name(kernel)


def _check_trials(trials: int, jobs: int) -> None:
    if trials < 1:
        raise InfeasibleParameterError(f"trials must be >= 1, got {trials}")
    if jobs < 1:
        raise InfeasibleParameterError(f"jobs must be >= 1, got {jobs}")


def _run_trials(
    trial: Trial, rng: RandomStream, trials: int, jobs: int = 1
) -> Tuple[List[float], int]:
    """Run ``trial`` once per child stream of ``rng``

    Results come back in stream order whatever ``jobs`` is, so the samples
    depend only on the master seed.
    """
    streams = rng.spawn(trials)
    if jobs > 1 and trials > 1:
        with multiprocessing.Pool(processes=min(jobs, trials)) as pool:
            results = pool.map(trial, streams)
    else:
        results = [trial(stream) for stream in streams]

    samples = [value for value, _ in results]
    censored = sum(1 for _, capped in results if capped)
    return samples, censored


def _report(
    quantity: str,
    g: Graph,
    kernel: KernelSpec,
    rng: RandomStream,
    samples: List[float],
    censored: int,
    bound: Optional[float] = None,
    out_of_range: bool = False,
) -> EstimatorReport:
    if out_of_range:
        logger.warning(
            "%s on %s: parameters outside the range of the bound",
            quantity,
            describe(g),
        )
    if censored:
        logger.warning(
            "%s on %s: %d of %d trials censored at their step cap",
            quantity,
            describe(g),
            censored,
            len(samples),
        )
    return EstimatorReport.from_samples(
        quantity,
        samples,
        graph=describe(g),
        kernel=_kernel_name(kernel),
        seed=rng.entropy,
        censored=censored,
        bound=bound,
        out_of_range=out_of_range,
    )


def _cover_trial(
    g: Graph,
    kernel: KernelSpec,
    start: int,
    targets: List[int],
    cap: int,
    stream,
):
    trace = make_walker(g, kernel).walk(
        start, cap, targets, stream, stop="all", count_visits=False
    )
    if trace.all_hit():
        return float(trace.last_hit()), False
    return float(cap), True


def estimate_cover_time(
    g: Graph,
    kernel: KernelSpec,
    start: int,
    trials: int,
    step_cap: int,
    rng: RandomStream,
    jobs: int = 1,
) -> EstimatorReport:
    """Expected time for a walk from ``start`` to visit its whole component

    Parameters
    ----------
    g : Graph
        The graph
    kernel : KernelSpec
        Potential name, potential, ``"hybrid"`` or a walker
    start : int
        Starting node
    trials : int
        Number of independent walks
    step_cap : int
        Per-trial step cap; trials reaching it are counted as censored and
        contribute the cap
    rng : RandomStream
        Master stream, one child stream is spawned per trial
    jobs : int, optional
        Worker processes, by default 1

    Returns
    -------
    EstimatorReport
        Report with quantity ``"cover_time"``
    """
    _check_trials(trials, jobs)
    if step_cap < 1:
        raise InfeasibleParameterError(
            f"step_cap must be >= 1, got {step_cap}"
        )

    targets = [int(v) for v in component_of(g, start) if v != start]
    if not targets:
        return _report("cover_time", g, kernel, rng, [0.0] * trials, 0)

    trial = functools.partial(
        _cover_trial, g, kernel, start, targets, step_cap
    )
    samples, censored = _run_trials(trial, rng, trials, jobs)
    return _report("cover_time", g, kernel, rng, samples, censored)


def _hitting_trial(
    g: Graph, kernel: KernelSpec, u: int, v: int, cap: int, stream
):
    trace = make_walker(g, kernel).walk(
        u, cap, [v], stream, stop="any", count_visits=False
    )
    hit = trace.first_hits[v]
    if hit is None:
        return float(cap), True
    return float(hit), False


def _same_component(g: Graph, u: int, v: int) -> None:
    g.check_node(u)
    g.check_node(v)
    labels = connected_components(g)
    if labels[u] != labels[v]:
        raise InfeasibleParameterError(
            f"nodes {u} and {v} lie in different components, "
            "the time is infinite"
        )


def estimate_hitting_time(
    g: Graph,
    kernel: KernelSpec,
    u: int,
    v: int,
    trials: int,
    rng: RandomStream,
    step_cap: Optional[int] = None,
    jobs: int = 1,
) -> EstimatorReport:
    """E_u T_v, the mean first time t > 0 a walk from ``u`` is at ``v``

    With ``u == v`` this is the mean return time. Trials are capped at
    ``100 n^2`` steps by default.
    """
    _check_trials(trials, jobs)
    _same_component(g, u, v)
    cap = step_cap or HITTING_CAP_FACTOR * g.node_count**2

    trial = functools.partial(_hitting_trial, g, kernel, u, v, cap)
    samples, censored = _run_trials(trial, rng, trials, jobs)
    quantity = "return_time" if u == v else "hitting_time"
    return _report(quantity, g, kernel, rng, samples, censored)


def estimate_commute_time(
    g: Graph,
    kernel: KernelSpec,
    u: int,
    v: int,
    trials: int,
    rng: RandomStream,
    step_cap: Optional[int] = None,
    jobs: int = 1,
) -> EstimatorReport:
    """Com(u, v) = E_u T_v + E_v T_u

    Each trial is the sum of one walk from ``u`` to ``v`` and an independent
    walk back. For ``u == v`` the report holds the mean return time
    E_u T_u, not zero.
    """
    if u == v:
        return estimate_hitting_time(
            g, kernel, u, v, trials, rng, step_cap, jobs
        )

    _check_trials(trials, jobs)
    _same_component(g, u, v)
    cap = step_cap or HITTING_CAP_FACTOR * g.node_count**2
    forward, backward = rng.spawn(2)

    outward = functools.partial(_hitting_trial, g, kernel, u, v, cap)
    inward = functools.partial(_hitting_trial, g, kernel, v, u, cap)
    there, censored_there = _run_trials(outward, forward, trials, jobs)
    back, censored_back = _run_trials(inward, backward, trials, jobs)
    samples = [a + b for a, b in zip(there, back)]
    return _report(
        "commute_time", g, kernel, rng, samples, censored_there + censored_back
    )


def _return_trial(g: Graph, kernel: KernelSpec, i: int, t: int, stream):
    trace = make_walker(g, kernel).walk(i, t - 1, None, stream)
    return float(trace.visit_counts[i]), False


def return_count_bound(g: Graph, t: int) -> float:
    """5 sqrt(t) + 2 Delta"""
    return 5.0 * math.sqrt(t) + 2.0 * g.max_degree


def measure_return_counts(
    g: Graph,
    kernel: KernelSpec,
    i: int,
    t: int,
    trials: int,
    rng: RandomStream,
    jobs: int = 1,
) -> EstimatorReport:
    """E_i N_i(t), the mean number of times in [0, t) a walk is at its start

    The start counts as a visit, so ``t = 1`` gives exactly 1. The bound
    ``5 sqrt(t) + 2 Delta`` is attached to the report and holds for
    ``0 < t < 6 n^2``; reports outside that range carry ``out_of_range``.
    """
    _check_trials(trials, jobs)
    g.check_node(i)
    if t < 1:
        raise InfeasibleParameterError(f"t must be >= 1, got {t}")

    trial = functools.partial(_return_trial, g, kernel, i, t)
    samples, censored = _run_trials(trial, rng, trials, jobs)
    return _report(
        "return_count",
        g,
        kernel,
        rng,
        samples,
        censored,
        return_count_bound(g, t),
        out_of_range=not t < 6 * g.node_count**2,
    )


def exact_visit_counts(
    g: Graph,
    kernel: Union[str, Potential],
    initial: numpy.ndarray,
    t: int,
    cap: int = DENSE_CAP,
    step_cap: int = EXACT_STEP_CAP,
) -> numpy.ndarray:
    """Expected visits in [0, t) to every node from the ``initial`` law

    Sums ``initial P^tau`` over ``tau = 0 .. t - 1`` with sparse
    vector-matrix products.

    Raises
    ------
    CapacityError
        If ``n > cap`` or ``t > step_cap``
    """
    if g.node_count > cap:
        raise CapacityError(
            f"exact oracle capped at {cap} nodes, got {g.node_count}"
        )
    if t > step_cap:
        raise CapacityError(f"exact oracle capped at t={step_cap}, got {t}")
    if t < 0:
        raise InfeasibleParameterError(f"t must be >= 0, got {t}")

    transposed = sparse_transition_matrix(g, _as_potential(kernel)).T.tocsr()
    state = numpy.asarray(initial, dtype=numpy.float64).copy()
    total = numpy.zeros(g.node_count)
    for _ in range(t):
        total += state
        state = transposed @ state
    return total


def exact_expected_visits(
    g: Graph,
    kernel: Union[str, Potential],
    i: int,
    j: int,
    t: int,
    cap: int = DENSE_CAP,
    step_cap: int = EXACT_STEP_CAP,
) -> float:
    """E_i N_j(t) computed from powers of the transition matrix"""
    g.check_node(i)
    g.check_node(j)
    initial = numpy.zeros(g.node_count)
    initial[i] = 1.0
    return float(exact_visit_counts(g, kernel, initial, t, cap, step_cap)[j])


def exact_hitting_times(
    g: Graph, kernel: Union[str, Potential], target: int, cap: int = DENSE_CAP
) -> numpy.ndarray:
    """E_i T_target for every node i

    Solves ``(I - P) h = 1`` on the component of ``target`` with
    ``h[target] = 0``; nodes in other components get ``inf``.
    """
    if g.node_count > cap:
        raise CapacityError(
            f"exact oracle capped at {cap} nodes, got {g.node_count}"
        )

    component = component_of(g, target)
    others = component[component != target]
    hitting = numpy.full(g.node_count, numpy.inf)
    hitting[target] = 0.0
    if others.size == 0:
        return hitting

    matrix = sparse_transition_matrix(g, _as_potential(kernel))
    block = matrix[others][:, others]
    system = scipy.sparse.identity(others.size, format="csc") - block.tocsc()
    solution = scipy.sparse.linalg.spsolve(system, numpy.ones(others.size))
    hitting[others] = numpy.atleast_1d(solution)
    return hitting


def exact_return_time(
    g: Graph, kernel: Union[str, Potential], j: int, cap: int = DENSE_CAP
) -> float:
    """E_j T_j = 1 + sum_u P[j, u] E_u T_j"""
    hitting = exact_hitting_times(g, kernel, j, cap)
    row = sparse_transition_matrix(g, _as_potential(kernel)).getrow(j)
    return float(1.0 + numpy.dot(row.data, hitting[row.indices]))


def exit_time_bound(size: int, max_degree: int) -> float:
    """(|A| + 1)(6 |A| + 2 Delta)"""
    return (size + 1.0) * (6.0 * size + 2.0 * max_degree)


def _exit_trial(
    g: Graph, kernel: KernelSpec, i: int, outside: List[int], cap: int, stream
):
    trace = make_walker(g, kernel).walk(
        i, cap, outside, stream, stop="any", count_visits=False
    )
    if trace.stopped:
        return float(trace.steps_taken), False
    return float(cap), True


def estimate_exit_time(
    g: Graph,
    kernel: KernelSpec,
    i: int,
    radius: int,
    trials: int,
    rng: RandomStream,
    step_cap: Optional[int] = None,
    jobs: int = 1,
) -> EstimatorReport:
    """E_i T_{V \\ A} for A the ball of hop radius ``radius`` around ``i``

    The report carries the bound ``(|A| + 1)(6 |A| + 2 Delta)``.

    Raises
    ------
    InfeasibleParameterError
        If the ball covers the whole component of ``i``, so the walk can
        never leave it
    """
    _check_trials(trials, jobs)
    if radius < 0:
        raise InfeasibleParameterError(f"radius must be >= 0, got {radius}")

    ball = set(bfs_ball(g, i, radius).tolist())
    outside = [int(v) for v in component_of(g, i) if v not in ball]
    if not outside:
        raise InfeasibleParameterError(
            f"the radius-{radius} ball around {i} covers its whole component"
        )

    cap = step_cap or HITTING_CAP_FACTOR * g.node_count**2
    trial = functools.partial(_exit_trial, g, kernel, i, outside, cap)
    samples, censored = _run_trials(trial, rng, trials, jobs)
    bound = exit_time_bound(len(ball), g.max_degree)
    return _report("exit_time", g, kernel, rng, samples, censored, bound)


def hit_probability_bound(g: Graph, t: int) -> float:
    """0.1 sqrt(t) / n"""
    return 0.1 * math.sqrt(t) / g.node_count


def _in_hit_range(g: Graph, t: int) -> bool:
    return g.max_degree**2 <= t < 6 * g.node_count**2


def _require_connected(g: Graph) -> None:
    if g.node_count and connected_components(g).max() > 0:
        raise InfeasibleParameterError("the graph must be connected")


def _draw(cdf: numpy.ndarray, stream: RandomStream) -> int:
    k = int(numpy.searchsorted(cdf, stream.random(), side="right"))
    return min(k, len(cdf) - 1)


def _arc_trial(
    g: Graph, kernel: KernelSpec, arc: Tuple[int, int], t: int, cdf, stream
):
    start = _draw(cdf, stream)
    trace = make_walker(g, kernel).walk(
        start, t - 1, None, stream, count_visits=False, count_arcs=True
    )
    return float(trace.arc_counts.get(arc, 0) > 0), False


def estimate_arc_hit_probability(
    g: Graph,
    arc: Tuple[int, int],
    t: int,
    trials: int,
    rng: RandomStream,
    kernel: Union[str, Potential] = "unit",
    jobs: int = 1,
) -> EstimatorReport:
    """Pr_pi[T_e < t] for a fixed non-loop arc ``e = (i, j)``

    Each trial starts from a node drawn from the stationary distribution and
    succeeds if the walk moves from ``i`` to ``j`` at some time before
    ``t``. The bound ``0.1 sqrt(t) / n`` applies for a connected graph with
    ``Delta^2 <= t < 6 n^2``.
    """
    _check_trials(trials, jobs)
    _require_connected(g)
    tail, head = int(arc[0]), int(arc[1])
    g.port_of(tail, head)
    if t < 1:
        raise InfeasibleParameterError(f"t must be >= 1, got {t}")

    cdf = numpy.cumsum(stationary_distribution(g, _as_potential(kernel)))
    trial = functools.partial(_arc_trial, g, kernel, (tail, head), t, cdf)
    samples, censored = _run_trials(trial, rng, trials, jobs)
    return _report(
        "arc_hit_probability",
        g,
        kernel,
        rng,
        samples,
        censored,
        hit_probability_bound(g, t),
        out_of_range=not _in_hit_range(g, t),
    )


def _landmark_trial(g: Graph, kernel: KernelSpec, i: int, t: int, cdf, stream):
    landmark = _draw(cdf, stream)
    trace = make_walker(g, kernel).walk(
        i, t - 1, [landmark], stream, stop="any", count_visits=False
    )
    return float(trace.first_hits[landmark] is not None), False


def estimate_landmark_hit_probability(
    g: Graph,
    i: int,
    t: int,
    trials: int,
    rng: RandomStream,
    kernel: Union[str, Potential] = "unit",
    jobs: int = 1,
) -> EstimatorReport:
    """Pr_i[T_j < t] with the landmark ``j`` drawn from the stationary law

    A fresh landmark is drawn in every trial. The bound ``0.1 sqrt(t) / n``
    applies for a connected graph with ``Delta^2 <= t < 6 n^2``.
    """
    _check_trials(trials, jobs)
    _require_connected(g)
    g.check_node(i)
    if t < 1:
        raise InfeasibleParameterError(f"t must be >= 1, got {t}")

    cdf = numpy.cumsum(stationary_distribution(g, _as_potential(kernel)))
    trial = functools.partial(_landmark_trial, g, kernel, i, t, cdf)
    samples, censored = _run_trials(trial, rng, trials, jobs)
    return _report(
        "landmark_hit_probability",
        g,
        kernel,
        rng,
        samples,
        censored,
        hit_probability_bound(g, t),
        out_of_range=not _in_hit_range(g, t),
    )


def fit_scaling_exponent(
    sizes: Sequence[int], estimates: Sequence[float]
) -> Tuple[float, float]:
    """Least-squares slope of log(estimate) against log(size)

    Parameters
    ----------
    sizes : Sequence[int]
        Problem sizes, at least three
    estimates : Sequence[float]
        Positive measurements, one per size

    Returns
    -------
    Tuple[float, float]
        The fitted exponent and the r^2 of the fit
    """
    sizes = numpy.asarray(sizes, dtype=numpy.float64)
    estimates = numpy.asarray(estimates, dtype=numpy.float64)
    if sizes.shape != estimates.shape or sizes.ndim != 1:
        raise InfeasibleParameterError(
            "sizes and estimates must be equal-length lists"
        )
    if len(sizes) < 3:
        raise InfeasibleParameterError(
            f"need at least 3 sizes, got {len(sizes)}"
        )
    if numpy.any(sizes <= 0) or numpy.any(estimates <= 0):
        raise InfeasibleParameterError("sizes and estimates must be positive")
    if numpy.unique(sizes).size < 2:
        raise InfeasibleParameterError("sizes must not all be equal")

    fit = scipy.stats.linregress(numpy.log(sizes), numpy.log(estimates))
    return float(fit.slope), float(fit.rvalue**2)


def family_spec(family: str, size: int) -> str:
    """Generator spec for one member of a family

    ``{n}`` in ``family`` is replaced by ``size``; otherwise ``size`` is
    appended as the first parameter, so ``"glitter"`` gives ``"glitter:25"``.
    """
    if "{n}" in family:
        return family.replace("{n}", str(size))
    return f"{family}:{size}"


def cover_time_sweep(
    family: str,
    sizes: Sequence[int],
    kernels: Sequence[KernelSpec],
    trials: int,
    rng: RandomStream,
    step_cap_factor: float = 100.0,
    start: int = 0,
    jobs: int = 1,
) -> Dict[str, Dict[int, EstimatorReport]]:
    """Cover times of every kernel on every member of a graph family

    Each (kernel, size) cell gets its own stream spawned from ``rng`` in
    kernel-major order and a step cap of ``step_cap_factor * n^2``.

    Returns
    -------
    Dict[str, Dict[int, EstimatorReport]]
        Reports keyed by kernel name, then by node count n
    """
    if not sizes:
        raise InfeasibleParameterError("at least one size is required")
    graphs = [graph_from_spec(family_spec(family, size))[0] for size in sizes]
    streams = iter(rng.spawn(len(kernels) * len(graphs)))

    sweep: Dict[str, Dict[int, EstimatorReport]] = {}
    for kernel in kernels:
        name = _kernel_name(kernel)
        cells = sweep.setdefault(name, {})
        for g in graphs:
            cap = max(1, math.ceil(step_cap_factor * g.node_count**2))
            report = estimate_cover_time(
                g, kernel, start, trials, cap, next(streams), jobs
            )
            cells[g.node_count] = report
            logger.debug(
                "cover %s n=%d: %.1f", name, g.node_count, report.estimate
            )
    return sweep
