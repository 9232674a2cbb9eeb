import dataclasses
import enum
import json
import logging
import math
from typing import Any, Dict, List, Optional

import numpy
import pandas

from .exceptions import InfeasibleParameterError
from .graph import ConnectivityQuery, Graph
from .split import SplitNode, SplitView
from .unionfind import DisjointSets
from .walks import RandomStream, UnitPotential, run_walk

logger = logging.getLogger(__name__)

GAMMA = 60.0
BETA = 72.0
LOGSPACE_FACTOR = 24.0

# Upper bound on the number of landmark walks run in lockstep
BATCH_WALKS = 4096


class Answer(str, enum.Enum):
    CONNECTED = "connected"
    PROBABLY_NOT_CONNECTED = "probably not connected"


@dataclasses.dataclass
class LandmarkConfig:
    """Configuration of the landmark solver

    Attributes
    ----------
    p : int
        Number of sampled landmarks
    gamma : float
        Constant in the walk length, by default 60
    beta : float
        Constant in the number of rounds, by default 72
    c_scale : float
        Multiplier applied to the walk length and the number of rounds, by
        default 1 (the constants above unchanged)
    seed : int, optional
        Seed of the solver's random stream
    early_exit : bool
        Stop as soon as (s, 0) and (t, 0) share a class, by default True
    split : int, optional
        Override of the split parameter D; ``None`` uses
        ``ceil(sqrt(m / p))``
    """

    p: int = 8
    gamma: float = GAMMA
    beta: float = BETA
    c_scale: float = 1.0
    seed: Optional[int] = None
    early_exit: bool = True
    split: Optional[int] = None

    def __post_init__(self):
        if self.p < 1:
            raise InfeasibleParameterError(f"p must be >= 1, got {self.p}")
        for name in ("gamma", "beta", "c_scale"):
            if not getattr(self, name) > 0:
                raise InfeasibleParameterError(f"{name} must be positive")
        if self.split is not None and self.split < 1:
            raise InfeasibleParameterError(
                f"split must be >= 1, got {self.split}"
            )


@dataclasses.dataclass
class LandmarkState:
    """Landmarks and their disjoint-set structure for one solver run

    Attributes
    ----------
    view : SplitView
        The split graph the walks run on
    landmarks : List[SplitNode]
        Distinct landmarks, (s, 0) and (t, 0) first
    sets : DisjointSets
        Disjoint sets over the dense ids of the landmarks
    walk_length : int
        Length of every walk
    rounds : int
        Number of walks released from each landmark
    """

    view: SplitView
    landmarks: List[SplitNode]
    sets: DisjointSets
    walk_length: int
    rounds: int

    @property
    def landmark_ids(self) -> List[int]:
        return [self.view.node_id(node) for node in self.landmarks]

    def classes(self) -> List[List[SplitNode]]:
        """Current landmark classes as lists of split nodes"""
        return [
            sorted(self.view.node_at(i) for i in group)
            for group in self.sets.partition()
        ]


@dataclasses.dataclass
class SolveResult:
    """Outcome of one solver run

    ``answer`` is CONNECTED only when an s-t path has been witnessed, so it
    is never a false positive.
    """

    answer: Answer
    solver: str
    steps_executed: int
    landmarks_used: int
    merged_class_count: int
    seed: Optional[int]
    step_budget: int
    p: Optional[int] = None
    split: Optional[int] = None
    n_star: Optional[int] = None
    walk_length: Optional[int] = None
    rounds: Optional[int] = None
    space_words: Optional[int] = None
    state: Optional[LandmarkState] = dataclasses.field(
        default=None, repr=False, compare=False
    )

    @property
    def connected(self) -> bool:
        return self.answer is Answer.CONNECTED

    def to_dict(self) -> Dict[str, Any]:
        out = {
            field.name: getattr(self, field.name)
            for field in dataclasses.fields(self)
            if field.name != "state"
        }
        out["answer"] = self.answer.value
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_frame(self) -> pandas.DataFrame:
        """One-row DataFrame, ready for CSV export"""
        return pandas.DataFrame([self.to_dict()])


def logspace_walk_length(n: int, c_scale: float = 1.0) -> int:
    """ceil(24 n^2 ln n c_scale)"""
    return max(0, math.ceil(LOGSPACE_FACTOR * n * n * math.log(n) * c_scale))


def solve_logspace(
    g: Graph, q: ConnectivityQuery, rng: RandomStream, c_scale: float = 1.0
) -> SolveResult:
    """Single unit-potential walk from s, the log-space solver

    Runs one walk RW(G_1) from s for ``ceil(24 n^2 ln n c_scale)`` steps and
    answers CONNECTED if and only if t is hit.

    Parameters
    ----------
    g : Graph
        The graph
    q : ConnectivityQuery
        The pair (s, t)
    rng : RandomStream
        Source of randomness
    c_scale : float, optional
        Multiplier on the walk length, by default 1

    Returns
    -------
    SolveResult
        The answer and the number of steps executed
    """
    q.validate(g)
    if not c_scale > 0:
        raise InfeasibleParameterError("c_scale must be positive")

    budget = logspace_walk_length(g.node_count, c_scale)
    space = math.ceil(math.log2(max(g.node_count, 2)))

    if q.source == q.target:
        answer, steps = Answer.CONNECTED, 0
    else:
        trace = run_walk(
            g,
            UnitPotential(),
            q.source,
            budget,
            [q.target],
            rng,
            stop="any",
            count_visits=False,
        )
        hit = trace.first_hits[q.target] is not None
        answer = Answer.CONNECTED if hit else Answer.PROBABLY_NOT_CONNECTED
        steps = trace.steps_taken

    logger.debug(
        "logspace walk: %d of %d steps, %s", steps, budget, answer.value
    )
    return SolveResult(
        answer=answer,
        solver="logspace",
        steps_executed=steps,
        landmarks_used=1,
        merged_class_count=1,
        seed=rng.entropy,
        step_budget=budget,
        space_words=space,
    )


def compute_split_parameter(n: int, m: int, p: int) -> int:
    """D = ceil(sqrt(m / p)), at least 1

    Computed in integer arithmetic as the least D with D^2 p >= m.
    """
    if p < 1 or m < 0:
        raise InfeasibleParameterError(
            f"need p >= 1 and m >= 0, got p={p}, m={m}"
        )
    split = math.isqrt(m // p)
    while split * split * p < m:
        split += 1
    return max(1, split)


def compute_walk_length(sv: SplitView, cfg: LandmarkConfig) -> int:
    """Length of every landmark walk

    ``ceil(max{gamma (n*/p) log2 n*, D + 2})^2`` scaled by ``c_scale`` and
    rounded up, at least 1.
    """
    n_star = sv.node_count
    base = max(cfg.gamma * (n_star / cfg.p) * math.log2(n_star), sv.max_degree)
    return max(1, math.ceil(math.ceil(base) ** 2 * cfg.c_scale))


def compute_rounds(sv: SplitView, cfg: LandmarkConfig) -> int:
    """Walks per landmark, ``ceil(beta log2 n* c_scale)``, at least 1"""
    return max(1, math.ceil(cfg.beta * math.log2(sv.node_count) * cfg.c_scale))


def sample_landmarks(
    sv: SplitView, p: int, rng: RandomStream
) -> List[SplitNode]:
    """Draw ``p`` landmarks uniformly from V*

    Ranks are drawn uniformly from ``[1, n*]`` and mapped to split nodes
    enumerated by base node id, then copy index. The result is a multiset in
    draw order.
    """
    if p < 1:
        raise InfeasibleParameterError(f"p must be >= 1, got {p}")
    ranks = rng.generator.integers(1, sv.node_count + 1, size=p)
    return [sv.node_at_rank(int(rank)) for rank in ranks]


def prepare_landmarks(
    g: Graph, q: ConnectivityQuery, cfg: LandmarkConfig, rng: RandomStream
) -> LandmarkState:
    """Build the split view and register sampled landmarks as singletons"""
    split = cfg.split or compute_split_parameter(
        g.node_count, g.edge_count, cfg.p
    )
    view = SplitView(g, split)

    drawn = [SplitNode(q.source, 0), SplitNode(q.target, 0)]
    drawn += sample_landmarks(view, cfg.p, rng)
    landmarks = list(dict.fromkeys(drawn))

    sets = DisjointSets(view.node_id(node) for node in landmarks)
    return LandmarkState(
        view=view,
        landmarks=landmarks,
        sets=sets,
        walk_length=compute_walk_length(view, cfg),
        rounds=compute_rounds(view, cfg),
    )


def merge_hits(
    sets: DisjointSets, ids: List[int], hits: numpy.ndarray
) -> None:
    """Merge each walk's origin with every landmark it stood on

    ``hits`` has shape ``(rounds, |L|, |L|)``; entry ``[r, i, k]`` marks that
    the walk of round ``r`` from ``ids[i]`` visited ``ids[k]``. Merges are
    applied in (origin, landmark) order.
    """
    for i, k in zip(*numpy.nonzero(hits.any(axis=0))):
        if i != k:
            sets.union(sets.find(ids[k]), sets.find(ids[i]))


def test_connectivity(
    g: Graph,
    q: ConnectivityQuery,
    cfg: LandmarkConfig,
    rng: Optional[RandomStream] = None,
) -> SolveResult:
    """Landmark solver on the split graph

    From every landmark, ``rounds`` unit-potential walks of ``walk_length``
    steps are run on G*; whenever a walk stands on a landmark the classes of
    that landmark and of the walk's origin are merged. The answer is
    CONNECTED if and only if (s, 0) and (t, 0) end up in the same class.

    The walks of a block of rounds run in lockstep through
    :meth:`SplitView.walk_batch`. Merges are applied between chunks of
    steps in a fixed walk order, so a fixed seed gives a fixed result. With
    ``early_exit`` the run stops at the first chunk boundary where (s, 0)
    and (t, 0) share a class.

    Parameters
    ----------
    g : Graph
        The graph
    q : ConnectivityQuery
        The pair (s, t)
    cfg : LandmarkConfig
        Solver configuration
    rng : RandomStream, optional
        Source of randomness, by default a stream seeded with ``cfg.seed``

    Returns
    -------
    SolveResult
        The answer, the work done and the derived parameters
    """
    q.validate(g)
    rng = rng or RandomStream(cfg.seed)

    state = prepare_landmarks(g, q, cfg, rng)
    view, sets = state.view, state.sets
    source = view.node_id(SplitNode(q.source, 0))
    target = view.node_id(SplitNode(q.target, 0))
    budget = (cfg.p + 2) * state.rounds * state.walk_length

    logger.debug(
        "landmark solver: D=%d n*=%d |L|=%d length=%d rounds=%d budget=%d",
        view.split,
        view.node_count,
        len(state.landmarks),
        state.walk_length,
        state.rounds,
        budget,
    )

    steps = 0
    finished = cfg.early_exit and sets.connected(source, target)
    ids = state.landmark_ids
    per_block = max(1, BATCH_WALKS // len(ids))
    remaining = state.rounds

    while remaining and not finished:
        block = min(per_block, remaining)
        remaining -= block
        chunks = view.walk_batch(ids * block, state.walk_length, rng, ids)
        for taken, seen, _ in chunks:
            steps += taken * block * len(ids)
            merge_hits(sets, ids, seen.reshape(block, len(ids), len(ids)))
            if cfg.early_exit and sets.connected(source, target):
                finished = True
                break

    connected = sets.connected(source, target)
    return SolveResult(
        answer=(
            Answer.CONNECTED
            if connected
            else Answer.PROBABLY_NOT_CONNECTED
        ),
        solver="landmark",
        steps_executed=steps,
        landmarks_used=len(state.landmarks),
        merged_class_count=sets.set_count,
        seed=rng.entropy,
        step_budget=budget,
        p=cfg.p,
        split=view.split,
        n_star=view.node_count,
        walk_length=state.walk_length,
        rounds=state.rounds,
        space_words=len(state.landmarks)
        * math.ceil(math.log2(max(view.node_count, 2))),
        state=state,
    )


# Keep pytest from collecting the solver when it is imported into a test module
test_connectivity.__test__ = False

SOLVERS = ("landmark", "logspace")
