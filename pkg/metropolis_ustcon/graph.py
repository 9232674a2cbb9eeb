import bisect
import collections
import dataclasses
import io
import logging
import pathlib
from typing import Iterable, List, Optional, Tuple, Union

import numpy
import scipy.sparse
import scipy.sparse.csgraph

from .exceptions import (
    GraphFormatError,
    InfeasibleParameterError,
    InvalidNodeError,
)

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]
PathOrBuffer = Union[str, pathlib.Path, io.TextIOBase]


class Graph:
    """Immutable port-labelled undirected simple graph

    The adjacency is stored in compressed sparse row form: the neighbours of
    node ``v`` are ``neighbors[offsets[v]:offsets[v + 1]]`` in increasing
    order, and the position of a neighbour within that slice is its port, so
    ``PORT_v`` is deterministic. A parallel array of reverse ports holds, for
    each arc ``v -> u``, the port of ``v`` at ``u``, which lets
    :meth:`traverse_edge` answer in constant time.

    Disconnected graphs and isolated nodes are allowed.

    Parameters
    ----------
    node_count : int
        Number of nodes, node ids are ``0 .. node_count - 1``
    edges : Iterable[Tuple[int, int]]
        Undirected edges, each listed once in either orientation
    """

    def __init__(self, node_count: int, edges: Iterable[Edge] = ()):
        if node_count < 1:
            raise InfeasibleParameterError(
                f"a graph needs at least one node, got {node_count}"
            )

        pairs = numpy.asarray(list(edges), dtype=numpy.int64).reshape(-1, 2)

        if pairs.size and (pairs.min() < 0 or pairs.max() >= node_count):
            raise InvalidNodeError(
                f"edge endpoints must lie in [0, {node_count})"
            )
        if numpy.any(pairs[:, 0] == pairs[:, 1]):
            raise InfeasibleParameterError("self-loops are not allowed")

        src = numpy.concatenate([pairs[:, 0], pairs[:, 1]])
        dst = numpy.concatenate([pairs[:, 1], pairs[:, 0]])
        order = numpy.lexsort((dst, src))
        src, dst = src[order], dst[order]

        keys = src * node_count + dst
        if keys.size and numpy.any(keys[1:] == keys[:-1]):
            raise InfeasibleParameterError("duplicate edges are not allowed")

        degrees = numpy.bincount(src, minlength=node_count)
        offsets = numpy.zeros(node_count + 1, dtype=numpy.int64)
        numpy.cumsum(degrees, out=offsets[1:])

        # Position of the reverse arc u -> v, expressed as a port of u
        reverse = numpy.searchsorted(keys, dst * node_count + src)
        reverse_ports = reverse - offsets[dst]

        for array in (offsets, dst, reverse_ports, degrees):
            array.flags.writeable = False

        self._node_count = int(node_count)
        self._offsets = offsets
        self._neighbors = dst
        self._reverse_ports = reverse_ports
        self._degrees = degrees
        self._lists = None
        self._hash = None

    @property
    def node_count(self) -> int:
        """Number of nodes n"""
        return self._node_count

    @property
    def edge_count(self) -> int:
        """Number of undirected edges m"""
        return len(self._neighbors) // 2

    @property
    def max_degree(self) -> int:
        """Maximum degree, zero for an edgeless graph"""
        return int(self._degrees.max()) if self._node_count else 0

    @property
    def degrees(self) -> numpy.ndarray:
        """Read-only array of node degrees"""
        return self._degrees

    @property
    def offsets(self) -> numpy.ndarray:
        return self._offsets

    @property
    def neighbors_array(self) -> numpy.ndarray:
        return self._neighbors

    @property
    def reverse_ports(self) -> numpy.ndarray:
        return self._reverse_ports

    def adjacency_lists(self) -> Tuple[List[int], List[int], List[int]]:
        """Cached plain-list copies of (offsets, neighbors, reverse ports)

        Used by the per-step walk loops.
        """
        if self._lists is None:
            self._lists = (
                self._offsets.tolist(),
                self._neighbors.tolist(),
                self._reverse_ports.tolist(),
            )
        return self._lists

    def check_node(self, v: int) -> None:
        if not 0 <= v < self._node_count:
            raise InvalidNodeError(
                f"node {v} is outside [0, {self._node_count})"
            )

    def degree(self, v: int) -> int:
        """Degree of node ``v``"""
        self.check_node(v)
        return int(self._degrees[v])

    def neighbors(self, v: int) -> numpy.ndarray:
        """Neighbours of ``v`` in port order"""
        self.check_node(v)
        return self._neighbors[self._offsets[v] : self._offsets[v + 1]]

    def neighbor(self, v: int, port: int) -> int:
        """PORT_v^-1(port)"""
        return self.traverse_edge(v, port)[0]

    def port_of(self, v: int, u: int) -> int:
        """PORT_v(u)

        Raises
        ------
        InvalidNodeError
            If ``u`` is not a neighbour of ``v``
        """
        self.check_node(u)
        row = self.neighbors(v).tolist()
        port = bisect.bisect_left(row, u)
        if port == len(row) or row[port] != u:
            raise InvalidNodeError(f"{u} is not a neighbour of {v}")
        return port

    def traverse_edge(self, v: int, port: int) -> Tuple[int, int]:
        """Follow port ``port`` out of ``v``

        Parameters
        ----------
        v : int
            Current node
        port : int
            A port of ``v`` in ``[0, deg(v))``

        Returns
        -------
        Tuple[int, int]
            The pair ``(u, inport)`` with ``u = PORT_v^-1(port)`` and
            ``inport = PORT_u(v)``
        """
        self.check_node(v)
        if not 0 <= port < self._degrees[v]:
            raise InvalidNodeError(
                f"port {port} is outside [0, {int(self._degrees[v])}) at {v}"
            )
        arc = self._offsets[v] + port
        return int(self._neighbors[arc]), int(self._reverse_ports[arc])

    def edges(self) -> numpy.ndarray:
        """Edges as an (m, 2) array of rows ``u < v`` in sorted order"""
        src = numpy.repeat(
            numpy.arange(self._node_count, dtype=numpy.int64), self._degrees
        )
        mask = src < self._neighbors
        return numpy.column_stack([src[mask], self._neighbors[mask]])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._node_count == other._node_count and numpy.array_equal(
            self._neighbors, other._neighbors
        ) and numpy.array_equal(self._offsets, other._offsets)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._node_count, self._neighbors.tobytes()))
        return self._hash

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_lists"] = None
        state["_hash"] = None
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)

    def __repr__(self) -> str:
        return (
            f"Graph(n={self.node_count}, m={self.edge_count}, "
            f"max_degree={self.max_degree})"
        )


@dataclasses.dataclass(frozen=True)
class ConnectivityQuery:
    """An s-t connectivity question

    Attributes
    ----------
    source : int
        The node s
    target : int
        The node t
    """

    source: int
    target: int

    def validate(self, g: Graph) -> None:
        g.check_node(self.source)
        g.check_node(self.target)


def bfs_connected(g: Graph, q: ConnectivityQuery) -> bool:
    """Deterministic ground truth: are s and t in the same component?"""
    q.validate(g)
    if q.source == q.target:
        return True

    offsets, neighbors, _ = g.adjacency_lists()
    seen = bytearray(g.node_count)
    seen[q.source] = 1
    queue = collections.deque([q.source])

    while queue:
        v = queue.popleft()
        for u in neighbors[offsets[v] : offsets[v + 1]]:
            if not seen[u]:
                if u == q.target:
                    return True
                seen[u] = 1
                queue.append(u)
    return False


def adjacency_matrix(g: Graph) -> scipy.sparse.csr_matrix:
    """Symmetric 0/1 adjacency matrix sharing the graph's port layout"""
    return scipy.sparse.csr_matrix(
        (
            numpy.ones(len(g.neighbors_array), dtype=numpy.int8),
            numpy.array(g.neighbors_array),
            numpy.array(g.offsets),
        ),
        shape=(g.node_count, g.node_count),
    )


def connected_components(g: Graph) -> numpy.ndarray:
    """Component label of every node, labels numbered in order of first node"""
    _, labels = scipy.sparse.csgraph.connected_components(
        adjacency_matrix(g), directed=False
    )
    _, first = numpy.unique(labels, return_index=True)
    order = numpy.empty(len(first), dtype=numpy.int64)
    order[numpy.argsort(first)] = numpy.arange(len(first))
    return order[labels]


def component_of(g: Graph, v: int) -> numpy.ndarray:
    """Sorted node ids of the component containing ``v``"""
    g.check_node(v)
    labels = connected_components(g)
    return numpy.flatnonzero(labels == labels[v])


def bfs_ball(g: Graph, v: int, radius: int) -> numpy.ndarray:
    """Nodes at hop distance at most ``radius`` from ``v``"""
    g.check_node(v)
    offsets, neighbors, _ = g.adjacency_lists()
    depth = {v: 0}
    queue = collections.deque([v])

    while queue:
        x = queue.popleft()
        if depth[x] == radius:
            continue
        for u in neighbors[offsets[x] : offsets[x + 1]]:
            if u not in depth:
                depth[u] = depth[x] + 1
                queue.append(u)

    return numpy.asarray(sorted(depth), dtype=numpy.int64)


def validate_graph(g: Graph) -> List[str]:
    """Check the Graph invariants from scratch

    Returns
    -------
    List[str]
        Human readable descriptions of violated invariants, empty if the
        graph is valid
    """
    problems = []
    offsets, neighbors, reverse = g.adjacency_lists()
    degree_sum = 0

    for v in range(g.node_count):
        row = neighbors[offsets[v] : offsets[v + 1]]
        degree_sum += len(row)

        if len(row) != g.degrees[v]:
            problems.append(
                f"node {v}: cached degree disagrees with adjacency"
            )
        if v in row:
            problems.append(f"node {v}: self-loop")
        if len(set(row)) != len(row):
            problems.append(f"node {v}: duplicate neighbour")

        for port, u in enumerate(row):
            back = reverse[offsets[v] + port]
            if not 0 <= back < offsets[u + 1] - offsets[u]:
                problems.append(f"arc {v}->{u}: reverse port out of range")
                continue
            if neighbors[offsets[u] + back] != v:
                problems.append(f"arc {v}->{u}: asymmetric or wrong inport")
            if reverse[offsets[u] + back] != port:
                problems.append(f"arc {v}->{u}: ports do not invert")

    if degree_sum != 2 * g.edge_count:
        problems.append("edge count is not half the degree sum")
    if g.node_count and g.max_degree != max(
        offsets[v + 1] - offsets[v] for v in range(g.node_count)
    ):
        problems.append("cached max degree is wrong")

    return problems


def read_edge_list(source: PathOrBuffer) -> Graph:
    """Read the plain-text edge-list format

    The first line holds ``n m``, followed by ``m`` lines ``u v`` with
    ``0 <= u < v < n``.

    Raises
    ------
    GraphFormatError
        If the file does not follow the format
    """
    try:
        if isinstance(source, (str, pathlib.Path)):
            text = pathlib.Path(source).read_text(encoding="ascii")
        else:
            text = source.read()
    except UnicodeDecodeError as exc:
        raise GraphFormatError(f"edge-list is not ASCII: {exc}") from exc

    lines = [line.strip() for line in text.splitlines()]
    lines = [line for line in lines if line]
    if not lines:
        raise GraphFormatError("empty edge-list file")

    try:
        n, m = (int(token) for token in lines[0].split())
        edges = [
            tuple(int(token) for token in line.split()) for line in lines[1:]
        ]
    except ValueError as exc:
        raise GraphFormatError(f"malformed edge-list: {exc}") from exc

    if len(edges) != m:
        raise GraphFormatError(
            f"header announces {m} edges, found {len(edges)}"
        )
    for edge in edges:
        if len(edge) != 2 or not 0 <= edge[0] < edge[1] < n:
            raise GraphFormatError(f"edge {edge} violates 0 <= u < v < {n}")
    counts = collections.Counter(edges)
    repeated = [edge for edge, count in counts.items() if count > 1]
    if repeated:
        raise GraphFormatError(f"duplicate edge {repeated[0]}")
    if n < 1:
        raise GraphFormatError(f"header announces {n} nodes")

    logger.debug("read edge list with n=%d m=%d", n, m)
    return Graph(n, edges)


def write_edge_list(g: Graph, target: PathOrBuffer) -> None:
    """Write ``g`` in the plain-text edge-list format"""
    if isinstance(target, (str, pathlib.Path)):
        with open(target, "w", encoding="ascii", newline="\n") as fh:
            write_edge_list(g, fh)
        return

    target.write(f"{g.node_count} {g.edge_count}\n")
    for u, v in g.edges().tolist():
        target.write(f"{u} {v}\n")


def edge_list_text(g: Graph) -> str:
    buffer = io.StringIO()
    write_edge_list(g, buffer)
    return buffer.getvalue()


def describe(g: Graph, name: Optional[str] = None) -> str:
    """Short descriptor used in reports and manifests"""
    prefix = f"{name} " if name else ""
    return (
        f"{prefix}n={g.node_count} m={g.edge_count} "
        f"max_degree={g.max_degree}"
    )
