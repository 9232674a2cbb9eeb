import abc
import collections
import dataclasses
import functools
import logging
from typing import Callable, Dict, Iterable, List, Optional, Tuple, Union

import numpy
import pandas
import scipy.sparse

from .exceptions import CapacityError, InfeasibleParameterError, WalkError
from .graph import Graph

# Largest node count for which dense matrices are built
DENSE_CAP = 2000

STOP_MODES = (None, "any", "all")


class RandomStream:
    """Seeded source of uniforms for step-by-step simulation

    Wraps a PCG64 ``numpy.random.Generator`` and hands out uniforms from a
    pre-drawn block, so that per-step draws from python loops stay cheap.
    Child streams derived with :meth:`spawn` are independent and depend only
    on the master seed, which keeps trial-level parallelism reproducible.

    Parameters
    ----------
    seed : Union[int, numpy.random.SeedSequence, None]
        Master seed, ``None`` draws fresh OS entropy
    block : int, optional
        Number of uniforms drawn per refill, by default 4096
    """

    def __init__(
        self,
        seed: Union[int, numpy.random.SeedSequence, None] = None,
        block: int = 4096,
    ):
        if isinstance(seed, numpy.random.SeedSequence):
            self.seed_sequence = seed
        else:
            self.seed_sequence = numpy.random.SeedSequence(seed)
        self.generator = numpy.random.Generator(
            numpy.random.PCG64(self.seed_sequence)
        )
        self._block = block
        self._buffer: List[float] = []
        self._index = 0

    @property
    def entropy(self) -> int:
        """The root entropy, i.e. the seed to log or echo"""
        return self.seed_sequence.entropy

    def random(self) -> float:
        """A uniform float in [0, 1)"""
        if self._index == len(self._buffer):
            self._buffer = self.generator.random(self._block).tolist()
            self._index = 0
        value = self._buffer[self._index]
        self._index += 1
        return value

    def below(self, n: int) -> int:
        """A uniform integer in [0, n)"""
        k = int(self.random() * n)
        return k if k < n else n - 1

    def spawn(self, count: int) -> List["RandomStream"]:
        """Independent child streams derived from this stream's seed"""
        return [
            RandomStream(child, self._block)
            for child in self.seed_sequence.spawn(count)
        ]


def average_degree(g: Graph) -> float:
    """d = 2m / n, taken as 1 for an edgeless graph"""
    if g.edge_count == 0:
        return 1.0
    return 2.0 * g.edge_count / g.node_count


class Potential(abc.ABC):
    """Node potential f defining the Metropolis-Hastings walk RW(G_f)

    Subclasses implement :meth:`_evaluate`; :meth:`values` checks that the
    result is strictly positive.
    """

    name: str = "potential"

    @abc.abstractmethod
    def _evaluate(self, g: Graph) -> numpy.ndarray:
        """Potential of every node of ``g``"""
        raise NotImplementedError

    def values(self, g: Graph) -> numpy.ndarray:
        """Potential of every node of ``g`` as float64

        Raises
        ------
        InfeasibleParameterError
            If some node gets a non-positive potential
        """
        f = numpy.asarray(self._evaluate(g), dtype=numpy.float64)
        if f.shape != (g.node_count,):
            raise InfeasibleParameterError(
                f"potential '{self.name}' returned shape {f.shape}"
            )
        if not numpy.all(f > 0):
            raise InfeasibleParameterError(
                f"potential '{self.name}' must be strictly positive"
            )
        return f


@dataclasses.dataclass(frozen=True)
class UnitPotential(Potential):
    """f(v) = 1, the walk RW(G_1) with uniform stationary distribution"""

    name: str = "unit"

    def _evaluate(self, g: Graph) -> numpy.ndarray:
        return numpy.ones(g.node_count)


@dataclasses.dataclass(frozen=True)
class UnbiasedPotential(Potential):
    """f(v) = deg(v) / d, which reproduces the simple random walk

    Isolated nodes get f(v) = 1 / d so that f stays positive.
    """

    name: str = "unbiased"

    def _evaluate(self, g: Graph) -> numpy.ndarray:
        return numpy.maximum(g.degrees, 1) / average_degree(g)


@dataclasses.dataclass(frozen=True)
class FineTunedPotential(Potential):
    """f(v) = deg(v) / d + 1

    Its commute times are within a constant factor of the better of the
    simple random walk and the unit-potential walk.
    """

    name: str = "finetuned"

    def _evaluate(self, g: Graph) -> numpy.ndarray:
        return g.degrees / average_degree(g) + 1.0


@dataclasses.dataclass(frozen=True, eq=False)
class CustomPotential(Potential):
    """User supplied potential

    Attributes
    ----------
    function : Callable[[Graph], numpy.ndarray]
        Maps a graph to the potential of each of its nodes
    name : str
        Label used in traces and reports
    """

    function: Callable[[Graph], numpy.ndarray] = None
    name: str = "custom"

    def _evaluate(self, g: Graph) -> numpy.ndarray:
        if self.function is None:
            raise InfeasibleParameterError("CustomPotential needs a function")
        return self.function(g)


POTENTIALS: Dict[str, Potential] = {
    "unit": UnitPotential(),
    "unbiased": UnbiasedPotential(),
    "finetuned": FineTunedPotential(),
}


def potential_from_name(name: str) -> Potential:
    try:
        return POTENTIALS[name]
    except KeyError:
        raise InfeasibleParameterError(
            f"unknown potential '{name}', expected one of {sorted(POTENTIALS)}"
        ) from None


def _arc_arrays(g: Graph, f: Potential) -> Tuple[numpy.ndarray, ...]:
    """(tails, heads, arc weights, potential values) over all arcs of g"""
    values = f.values(g)
    tails = numpy.repeat(
        numpy.arange(g.node_count, dtype=numpy.int64), g.degrees
    )
    heads = g.neighbors_array
    ratio = numpy.divide(
        values,
        g.degrees,
        out=numpy.full(g.node_count, numpy.inf),
        where=g.degrees > 0,
    )
    weights = numpy.minimum(ratio[tails], ratio[heads])
    return tails, heads, weights, values


def arc_weight(g: Graph, f: Potential, v: int, u: int) -> float:
    """w_f(e_vu) = min{f(v)/deg(v), f(u)/deg(u)} for an edge {v, u}"""
    g.port_of(v, u)
    values = f.values(g)
    return min(values[v] / g.degree(v), values[u] / g.degree(u))


def self_loop_weight(g: Graph, f: Potential, v: int) -> float:
    """w_f(e_vv) = f(v) minus the weights of the arcs leaving v"""
    values = f.values(g)
    total = sum(arc_weight(g, f, v, int(u)) for u in g.neighbors(v))
    return float(values[v] - total)


def stationary_distribution(g: Graph, f: Potential) -> numpy.ndarray:
    """pi proportional to f"""
    values = f.values(g)
    return values / values.sum()


def _kernel_entries(g: Graph, f: Potential):
    tails, heads, weights, values = _arc_arrays(g, f)
    out_weight = numpy.bincount(tails, weights=weights, minlength=g.node_count)
    loops = numpy.maximum(values - out_weight, 0.0)
    nodes = numpy.arange(g.node_count, dtype=numpy.int64)
    rows = numpy.concatenate([tails, nodes])
    cols = numpy.concatenate([heads, nodes])
    data = numpy.concatenate([weights / values[tails], loops / values])
    return rows, cols, data


def transition_matrix(
    g: Graph, f: Potential, cap: int = DENSE_CAP
) -> numpy.ndarray:
    """Dense transition matrix of RW(G_f)

    Parameters
    ----------
    g : Graph
        The graph
    f : Potential
        The node potential
    cap : int, optional
        Largest accepted node count, by default 2000

    Returns
    -------
    numpy.ndarray
        Row-stochastic matrix with P[v, u] = w_f(e_vu) / f(v) for u in
        Gamma(v), the self-loop mass on the diagonal and zeros elsewhere
    """
    if g.node_count > cap:
        raise CapacityError(
            f"dense transition matrix capped at {cap} nodes, "
            f"got {g.node_count}"
        )
    rows, cols, data = _kernel_entries(g, f)
    matrix = numpy.zeros((g.node_count, g.node_count))
    numpy.add.at(matrix, (rows, cols), data)
    return matrix


def sparse_transition_matrix(
    g: Graph, f: Potential
) -> scipy.sparse.csr_matrix:
    """The same kernel as :func:`transition_matrix` in CSR form"""
    rows, cols, data = _kernel_entries(g, f)
    return scipy.sparse.csr_matrix(
        (data, (rows, cols)), shape=(g.node_count, g.node_count)
    )


@dataclasses.dataclass
class WalkTrace:
    """Statistics gathered along one simulated walk

    ``visit_counts[v]`` counts the times ``0 .. steps_taken`` (both ends
    included) at which the walk stood at ``v``, so the counts sum to
    ``steps_taken + 1``; the position at time ``steps_taken`` is also kept as
    ``final_node``. ``first_hits[v]`` is the smallest time strictly greater
    than zero at which a tracked node ``v`` was occupied, ``None`` if never.

    Attributes
    ----------
    start : int
        Node occupied at time 0
    kernel : str
        Name of the walk that produced the trace
    steps_taken : int
        Number of transitions simulated
    final_node : int
        Node occupied at time ``steps_taken``
    visit_counts : numpy.ndarray, optional
        Dense occupancy counts, ``None`` when not requested
    first_hits : Dict[int, Optional[int]]
        First hitting times of the tracked nodes
    arc_counts : Dict[Tuple[int, int], int], optional
        Number of transitions along each arc, self-loops included
    phases : List[Tuple[str, int]]
        (kernel name, length) of every phase that ran
    stopped : bool
        Whether the walk ended early on its stop condition
    """

    start: int
    kernel: str
    steps_taken: int = 0
    final_node: int = -1
    visit_counts: Optional[numpy.ndarray] = None
    first_hits: Dict[int, Optional[int]] = dataclasses.field(
        default_factory=dict
    )
    arc_counts: Optional[Dict[Tuple[int, int], int]] = None
    phases: List[Tuple[str, int]] = dataclasses.field(default_factory=list)
    stopped: bool = False

    def visits_before(self) -> numpy.ndarray:
        """N_v(t) over the half-open interval [0, steps_taken)"""
        if self.visit_counts is None:
            raise WalkError("visit counting was not enabled for this walk")
        counts = self.visit_counts.copy()
        counts[self.final_node] -= 1
        return counts

    def all_hit(self) -> bool:
        return all(time is not None for time in self.first_hits.values())

    def last_hit(self) -> Optional[int]:
        """Latest first-hit time among tracked nodes, None if one was missed"""
        if not self.all_hit():
            return None
        return max(self.first_hits.values(), default=0)

    def to_frame(self, kind: str = "visits") -> pandas.DataFrame:
        """Export counters as a DataFrame

        Parameters
        ----------
        kind : str, optional
            ``"visits"`` (node, count), ``"hits"`` (node, first hit time) or
            ``"arcs"`` (tail, head, count), by default ``"visits"``
        """
        if kind == "visits":
            if self.visit_counts is None:
                raise WalkError("visit counting was not enabled for this walk")
            return pandas.DataFrame(
                {
                    "time_or_node": numpy.arange(len(self.visit_counts)),
                    "counter": self.visit_counts,
                }
            )
        if kind == "hits":
            return pandas.DataFrame(
                {
                    "time_or_node": list(self.first_hits),
                    "counter": pandas.array(
                        list(self.first_hits.values()), dtype="Int64"
                    ),
                }
            )
        if kind == "arcs":
            if self.arc_counts is None:
                raise WalkError("arc counting was not enabled for this walk")
            rows = [(a, b, c) for (a, b), c in sorted(self.arc_counts.items())]
            return pandas.DataFrame(rows, columns=["tail", "head", "counter"])
        raise WalkError(f"unknown trace export '{kind}'")


class Walker(abc.ABC):
    """A walk on a fixed graph that can extend a :class:`WalkTrace`"""

    name: str = "walker"

    def __init__(self, graph: Graph):
        self.logger = logging.getLogger(self.__class__.__name__)
        self.graph = graph

    @abc.abstractmethod
    def advance(
        self,
        trace: WalkTrace,
        steps: int,
        rng: RandomStream,
        pending: set,
        stop: Optional[str],
    ) -> None:
        """Run up to ``steps`` transitions from ``trace.final_node``"""
        raise NotImplementedError

    def walk(
        self,
        start: int,
        steps: int,
        tracked: Optional[Iterable[int]],
        rng: RandomStream,
        stop: Optional[str] = None,
        count_visits: bool = True,
        count_arcs: bool = False,
    ) -> WalkTrace:
        """Start a fresh walk at ``start`` and run it

        Parameters
        ----------
        start : int
            Node occupied at time 0
        steps : int
            Maximum number of transitions
        tracked : Iterable[int], optional
            Nodes whose first hitting times are recorded
        rng : RandomStream
            Source of randomness
        stop : str, optional
            ``"any"`` stops at the first hit of a tracked node, ``"all"`` once
            every tracked node has been hit, ``None`` runs all steps
        count_visits : bool, optional
            Keep dense occupancy counts, by default True
        count_arcs : bool, optional
            Keep arc traversal counts, by default False
        """
        self.graph.check_node(start)
        if steps < 0:
            raise InfeasibleParameterError(f"steps must be >= 0, got {steps}")
        if stop not in STOP_MODES:
            raise InfeasibleParameterError(f"unknown stop mode '{stop}'")

        tracked = sorted(set(tracked or ()))
        for v in tracked:
            self.graph.check_node(v)

        trace = WalkTrace(
            start=start,
            kernel=self.name,
            final_node=start,
            first_hits={v: None for v in tracked},
            arc_counts={} if count_arcs else None,
        )
        if count_visits:
            trace.visit_counts = numpy.zeros(
                self.graph.node_count, dtype=numpy.int64
            )
            trace.visit_counts[start] = 1

        pending = set(tracked)
        if stop == "all" and not pending:
            trace.stopped = True
            return trace

        self.advance(trace, steps, rng, pending, stop)
        return trace


class MetropolisKernel(Walker):
    """The Metropolis-Hastings walk RW(G_f)

    One step proposes a uniform neighbour ``u`` of the current node ``v`` and
    accepts it with probability ``min{deg(v) f(u) / (deg(u) f(v)), 1}``.
    Isolated nodes absorb the walk.
    """

    def __init__(self, graph: Graph, potential: Potential):
        super().__init__(graph)
        self.potential = potential
        self.name = potential.name
        self._f = potential.values(graph).tolist()
        self._deg = graph.degrees.tolist()
        self._offsets, self._neighbors, _ = graph.adjacency_lists()

    def step(self, v: int, rng: RandomStream) -> int:
        """One transition of the walk from ``v``"""
        deg_v = self._deg[v]
        if deg_v == 0:
            return v
        u = self._neighbors[self._offsets[v] + rng.below(deg_v)]
        accept = (deg_v * self._f[u]) / (self._deg[u] * self._f[v])
        if accept >= 1.0 or rng.random() < accept:
            return u
        return v

    def advance(self, trace, steps, rng, pending, stop):
        f, deg = self._f, self._deg
        offsets, neighbors = self._offsets, self._neighbors
        visits = None
        if trace.visit_counts is not None:
            visits = trace.visit_counts.tolist()
        arcs = trace.arc_counts
        hits = trace.first_hits
        draw = rng.random

        v = trace.final_node
        time = trace.steps_taken
        done = 0

        while done < steps:
            deg_v = deg[v]
            u = v
            if deg_v:
                k = int(draw() * deg_v)
                w = neighbors[offsets[v] + (k if k < deg_v else deg_v - 1)]
                accept = (deg_v * f[w]) / (deg[w] * f[v])
                if accept >= 1.0 or draw() < accept:
                    u = w
            done += 1
            time += 1
            if arcs is not None:
                arcs[(v, u)] = arcs.get((v, u), 0) + 1
            if visits is not None:
                visits[u] += 1
            v = u
            if v in pending:
                hits[v] = time
                pending.discard(v)
                if stop == "any" or (stop == "all" and not pending):
                    trace.stopped = True
                    break

        trace.steps_taken = time
        trace.final_node = v
        trace.phases.append((self.name, done))
        if visits is not None:
            trace.visit_counts = numpy.asarray(visits, dtype=numpy.int64)


def hybrid_schedule(budget: int) -> List[Tuple[str, int]]:
    """Phase schedule of the doubling hybrid walk

    Phases alternate between the simple random walk and the unit-potential
    walk with lengths 1, 1, 2, 2, 4, 4, ...; the last phase is cut so that
    the lengths add up to ``budget``.
    """
    schedule = []
    length = 1
    remaining = budget
    while remaining > 0:
        for name in ("unbiased", "unit"):
            if remaining <= 0:
                break
            phase = min(length, remaining)
            schedule.append((name, phase))
            remaining -= phase
        length *= 2
    return schedule


class HybridWalker(Walker):
    """Alternating simple and unit-potential walks in doubling phases"""

    name = "hybrid"

    def __init__(self, graph: Graph):
        super().__init__(graph)
        self.kernels = {
            "unbiased": MetropolisKernel(graph, UnbiasedPotential()),
            "unit": MetropolisKernel(graph, UnitPotential()),
        }

    def advance(self, trace, steps, rng, pending, stop):
        for name, length in hybrid_schedule(steps):
            self.kernels[name].advance(trace, length, rng, pending, stop)
            if trace.stopped:
                break


KernelSpec = Union[str, Potential, Walker]


@functools.lru_cache(maxsize=64)
def _cached_kernel(g: Graph, f: Potential) -> MetropolisKernel:
    return MetropolisKernel(g, f)


def make_walker(g: Graph, kernel: KernelSpec) -> Walker:
    """Resolve a kernel name, potential or walker into a walker on ``g``"""
    if isinstance(kernel, Walker):
        return kernel
    if isinstance(kernel, Potential):
        if isinstance(kernel, CustomPotential):
            return MetropolisKernel(g, kernel)
        return _cached_kernel(g, kernel)
    if kernel == "hybrid":
        return HybridWalker(g)
    return _cached_kernel(g, potential_from_name(kernel))


def next_state(g: Graph, f: Potential, v: int, rng: RandomStream) -> int:
    """One step of RW(G_f) from ``v``, see :meth:`MetropolisKernel.step`"""
    g.check_node(v)
    return make_walker(g, f).step(v, rng)


def run_walk(
    g: Graph,
    f: Potential,
    start: int,
    t: int,
    tracked: Optional[Iterable[int]],
    rng: RandomStream,
    stop: Optional[str] = None,
    count_visits: bool = True,
    count_arcs: bool = False,
) -> WalkTrace:
    """Run ``t`` steps of RW(G_f) from ``start``

    See :meth:`Walker.walk` for the meaning of the keyword arguments.
    """
    return make_walker(g, f).walk(
        start, t, tracked, rng, stop, count_visits, count_arcs
    )


def run_hybrid_walk(
    g: Graph,
    start: int,
    budget: int,
    rng: RandomStream,
    tracked: Optional[Iterable[int]] = None,
    stop: Optional[str] = None,
    count_visits: bool = True,
) -> WalkTrace:
    """Run the doubling hybrid walk for ``budget`` steps

    Raises
    ------
    InfeasibleParameterError
        If ``budget < 2``
    """
    if budget < 2:
        raise InfeasibleParameterError(
            f"hybrid budget must be >= 2, got {budget}"
        )
    walker = HybridWalker(g)
    return walker.walk(start, budget, tracked, rng, stop, count_visits)
