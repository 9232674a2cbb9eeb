import logging
from typing import Iterator, NamedTuple, Optional, Sequence, Tuple

import numpy

from .exceptions import (
    CapacityError,
    InfeasibleParameterError,
    InvalidNodeError,
)
from .graph import Graph
from .walks import DENSE_CAP, RandomStream

# Uniforms drawn per refill of a lockstep batch
CHUNK_DRAWS = 1 << 18


class SplitNode(NamedTuple):
    """Copy ``copy`` of base node ``vertex`` in the split graph"""

    vertex: int
    copy: int


class SplitView:
    """Virtual split graph G* over a base graph, never materialised

    Every node ``v`` of the base graph becomes a chain of
    ``max(1, ceil(deg(v) / D))`` copies. Copy ``i`` holds the contiguous
    block of outer ports ``[i D, min((i + 1) D, deg(v)) - 1]`` and is linked
    to its neighbours in the chain through the special ports ``prev`` and
    ``next``. Every split node therefore has degree at most ``D + 2``, and
    two split nodes lie in the same component exactly when their base nodes
    do.

    Split nodes are also numbered densely in ``(vertex, copy)`` order; the
    id of ``(v, i)`` is its rank minus one.

    Port encoding: the outer ports of ``(v, i)`` keep their base port
    numbers, ``prev`` is encoded as ``deg(v)`` and ``next`` as
    ``deg(v) + 1``.

    Parameters
    ----------
    graph : Graph
        The base graph
    split : int
        The split parameter D, at least 1
    """

    def __init__(self, graph: Graph, split: int):
        if split < 1:
            raise InfeasibleParameterError(
                f"split parameter must be >= 1, got {split}"
            )

        self.logger = logging.getLogger(self.__class__.__name__)
        self.graph = graph
        self.split = int(split)

        degrees = graph.degrees
        self._copies = numpy.maximum(1, -(-degrees // self.split))
        self._first = numpy.zeros(graph.node_count + 1, dtype=numpy.int64)
        numpy.cumsum(self._copies, out=self._first[1:])

        self._deg = degrees.tolist()
        self._first_list = self._first.tolist()
        self._tables = None

        self.logger.debug(
            "split view with D=%d: n*=%d for n=%d m=%d",
            self.split,
            self.node_count,
            graph.node_count,
            graph.edge_count,
        )

    @property
    def node_count(self) -> int:
        """n*, the number of split nodes"""
        return int(self._first[-1])

    @property
    def max_degree(self) -> int:
        """Delta* = D + 2"""
        return self.split + 2

    def copies(self, v: int) -> int:
        """Number of copies of base node ``v``"""
        self.graph.check_node(v)
        return int(self._copies[v])

    def check_node(self, node: SplitNode) -> None:
        v, i = node
        self.graph.check_node(v)
        if not 0 <= i < self._copies[v]:
            raise InvalidNodeError(
                f"copy index {i} of node {v} "
                f"outside [0, {int(self._copies[v])})"
            )

    def prev_port(self, v: int) -> int:
        return self._deg[v]

    def next_port(self, v: int) -> int:
        return self._deg[v] + 1

    def _bounds(self, v: int, i: int) -> Tuple[int, int]:
        left = i * self.split
        right = min((i + 1) * self.split, self._deg[v]) - 1
        return left, right

    def get_degree_star(self, node: SplitNode) -> int:
        """Degree of ``node`` in G*

        The outer ports ``[left, right]`` plus one for ``prev`` when the
        node is not the first copy and one for ``next`` when it is not the
        last copy.
        """
        self.check_node(node)
        v, i = node
        left, right = self._bounds(v, i)
        degree = right - left + 1
        if i > 0:
            degree += 1
        if i < self._copies[v] - 1:
            degree += 1
        return degree

    def get_random_port_star(self, node: SplitNode, rng: RandomStream) -> int:
        """A uniformly random port of ``node``

        With probability (number of outer ports) / deg* a uniform outer port
        is returned, otherwise a uniform choice among the chain ports
        present.

        Raises
        ------
        InfeasibleParameterError
            If ``node`` has degree zero
        """
        degree = self.get_degree_star(node)
        if degree == 0:
            raise InfeasibleParameterError(
                f"split node {tuple(node)} has no ports"
            )

        v, i = node
        left, right = self._bounds(v, i)
        outer = right - left + 1

        if rng.random() * degree < outer:
            return left + rng.below(outer)

        chain = []
        if i > 0:
            chain.append(self.prev_port(v))
        if i < self._copies[v] - 1:
            chain.append(self.next_port(v))
        return chain[0] if len(chain) == 1 else chain[rng.below(2)]

    def next_state_star(self, node: SplitNode, rng: RandomStream) -> SplitNode:
        """One step of the unit-potential Metropolis walk on G*

        Degree-zero split nodes absorb the walk.
        """
        degree = self.get_degree_star(node)
        if degree == 0:
            return node

        v, i = node
        port = self.get_random_port_star(node, rng)
        if port == self.prev_port(v):
            proposal = SplitNode(v, i - 1)
        elif port == self.next_port(v):
            proposal = SplitNode(v, i + 1)
        else:
            u, inport = self.graph.traverse_edge(v, port)
            proposal = SplitNode(u, inport // self.split)

        ratio = degree / self.get_degree_star(proposal)
        if ratio >= 1.0 or rng.random() < ratio:
            return proposal
        return node

    def node_id(self, node: SplitNode) -> int:
        """Dense id of ``node`` in (vertex, copy) order"""
        self.check_node(node)
        return self._first_list[node[0]] + node[1]

    def node_at(self, node_id: int) -> SplitNode:
        """Inverse of :meth:`node_id`"""
        if not 0 <= node_id < self.node_count:
            raise InvalidNodeError(
                f"split id {node_id} outside [0, {self.node_count})"
            )
        v = int(numpy.searchsorted(self._first, node_id, side="right")) - 1
        return SplitNode(v, node_id - self._first_list[v])

    def node_at_rank(self, rank: int) -> SplitNode:
        """Split node with 1-based rank ``rank`` in enumeration order"""
        return self.node_at(rank - 1)

    def iter_nodes(self) -> Iterator[SplitNode]:
        for v in range(self.graph.node_count):
            for i in range(int(self._copies[v])):
                yield SplitNode(v, i)

    def materialize(self, cap: int = DENSE_CAP) -> Graph:
        """Build G* explicitly, node ``k`` being ``self.node_at(k)``

        Raises
        ------
        CapacityError
            If n* exceeds ``cap``
        """
        if self.node_count > cap:
            raise CapacityError(
                f"materialisation capped at {cap} split nodes, "
                f"n*={self.node_count}"
            )

        edges = []
        offsets, neighbors, reverse = self.graph.adjacency_lists()
        for v in range(self.graph.node_count):
            for port in range(self._deg[v]):
                u = neighbors[offsets[v] + port]
                if v < u:
                    inport = reverse[offsets[v] + port]
                    edges.append(
                        (
                            self._first_list[v] + port // self.split,
                            self._first_list[u] + inport // self.split,
                        )
                    )
            for i in range(int(self._copies[v]) - 1):
                first = self._first_list[v]
                edges.append((first + i, first + i + 1))

        return Graph(self.node_count, edges)

    def step_tables(self) -> Tuple[numpy.ndarray, numpy.ndarray]:
        """Degree and port targets of every split id

        Row ``a`` of the target table lists the split ids behind the ports
        of ``a`` in port order (outer ports, then ``prev``, then ``next``),
        padded with ``a`` itself up to ``D + 2`` columns.
        """
        if self._tables is None:
            offsets, neighbors, reverse = self.graph.adjacency_lists()
            first, split = self._first_list, self.split
            targets = numpy.repeat(
                numpy.arange(self.node_count, dtype=numpy.int64)[:, None],
                self.max_degree,
                axis=1,
            )
            degree = numpy.zeros(self.node_count, dtype=numpy.int64)
            for v in range(self.graph.node_count):
                copies = int(self._copies[v])
                for i in range(copies):
                    a = first[v] + i
                    left, right = self._bounds(v, i)
                    arcs = range(offsets[v] + left, offsets[v] + right + 1)
                    ports = [
                        first[neighbors[arc]] + reverse[arc] // split
                        for arc in arcs
                    ]
                    if i > 0:
                        ports.append(a - 1)
                    if i < copies - 1:
                        ports.append(a + 1)
                    degree[a] = len(ports)
                    targets[a, : len(ports)] = ports
            self._tables = (degree, targets)
        return self._tables

    def walk_batch(
        self,
        starts: Sequence[int],
        steps: int,
        rng: RandomStream,
        marked: Sequence[int],
        chunk: Optional[int] = None,
    ) -> Iterator[Tuple[int, numpy.ndarray, numpy.ndarray]]:
        """Run one unit-potential walk on G* per start, all in lockstep

        Every walk follows the kernel of :meth:`next_state_star`: a uniform
        port is proposed and accepted with probability
        ``min(1, deg*(x) / deg*(y))``. The walks are independent; the caller
        may stop consuming between chunks.

        Parameters
        ----------
        starts : Sequence[int]
            Split ids the walks start from, one walk each
        steps : int
            Number of steps of every walk
        rng : RandomStream
            Source of randomness
        marked : Sequence[int]
            Distinct split ids whose occupancy is recorded
        chunk : int, optional
            Steps per yielded chunk, by default sized from ``CHUNK_DRAWS``

        Yields
        ------
        Tuple[int, numpy.ndarray, numpy.ndarray]
            Steps taken by every walk in the chunk, a boolean matrix whose
            entry ``[b, k]`` is set when walk ``b`` stood on ``marked[k]``
            after some step of the chunk, and the current positions
        """
        degree, targets = self.step_tables()
        x = numpy.asarray(starts, dtype=numpy.int64)
        width = len(x)
        walks = numpy.arange(width)
        slot = numpy.full(self.node_count, len(marked), dtype=numpy.int64)
        slot[numpy.asarray(marked, dtype=numpy.int64)] = numpy.arange(
            len(marked)
        )
        chunk = chunk or max(1, CHUNK_DRAWS // (2 * max(width, 1)))

        done = 0
        while done < steps:
            taken = min(chunk, steps - done)
            draws = rng.generator.random((taken, 2, width))
            seen = numpy.zeros((width, len(marked) + 1), dtype=bool)
            for port_draw, accept_draw in draws:
                d = degree[x]
                y = targets[x, (port_draw * d).astype(numpy.int64)]
                x = numpy.where(accept_draw * degree[y] < d, y, x)
                seen[walks, slot[x]] = True
            done += taken
            yield taken, seen[:, :-1], x
