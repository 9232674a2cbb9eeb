import logging
from typing import List, Optional, Tuple

import numpy

from .exceptions import GraphFormatError, InfeasibleParameterError
from .graph import ConnectivityQuery, Graph, component_of

logger = logging.getLogger(__name__)

# Edge-rank sampling goes through numpy.triu_indices below this many pairs,
# and through rejection sampling above it.
DENSE_PAIR_LIMIT = 2_000_000


def gen_path(n: int) -> Graph:
    """Path P_n on nodes 0 - 1 - ... - (n - 1)"""
    if n < 1:
        raise InfeasibleParameterError(f"path needs n >= 1, got {n}")
    return Graph(n, [(v, v + 1) for v in range(n - 1)])


def gen_cycle(n: int) -> Graph:
    """Cycle C_n"""
    if n < 3:
        raise InfeasibleParameterError(f"cycle needs n >= 3, got {n}")
    return Graph(n, [(v, (v + 1) % n) for v in range(n)])


def gen_complete(n: int) -> Graph:
    """Complete graph K_n"""
    if n < 1:
        raise InfeasibleParameterError(f"complete graph needs n >= 1, got {n}")
    return Graph(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def gen_glitter_star(l: int) -> Graph:
    """Glitter star on 2l + 1 nodes

    Node 0 is the centre of degree ``l``; nodes ``1 .. l`` are the middles of
    degree 2 and node ``l + k`` is the leaf hanging off middle ``k``.

    Parameters
    ----------
    l : int
        Number of arms, at least 1

    Returns
    -------
    Graph
        A tree with n = 2l + 1 and m = 2l
    """
    if l < 1:
        raise InfeasibleParameterError(f"glitter star needs l >= 1, got {l}")
    edges = [(0, k) for k in range(1, l + 1)]
    edges += [(k, l + k) for k in range(1, l + 1)]
    return Graph(2 * l + 1, edges)


def gen_lollipop(clique: int, tail: int) -> Graph:
    """Clique K_clique with a path of ``tail`` extra nodes attached to node 0

    The tail nodes are ``clique .. clique + tail - 1`` and the far end of the
    tail is the last node.
    """
    if clique < 1 or tail < 0:
        raise InfeasibleParameterError(
            f"lollipop needs clique >= 1 and tail >= 0, got {clique}, {tail}"
        )
    edges = [(u, v) for u in range(clique) for v in range(u + 1, clique)]
    previous = 0
    for v in range(clique, clique + tail):
        edges.append((previous, v))
        previous = v
    return Graph(clique + tail, edges)


def gen_random_graph(n: int, m: int, seed: Optional[int] = None) -> Graph:
    """Uniformly random simple graph with exactly ``m`` edges

    Parameters
    ----------
    n : int
        Number of nodes
    m : int
        Number of edges, ``0 <= m <= n(n-1)/2``
    seed : int, optional
        Seed for ``numpy.random.default_rng``, fixed seeds give identical
        graphs

    Returns
    -------
    Graph
        A graph whose edge set is a uniform m-subset of all node pairs
    """
    if n < 1:
        raise InfeasibleParameterError(f"random graph needs n >= 1, got {n}")
    pairs = n * (n - 1) // 2
    if not 0 <= m <= pairs:
        raise InfeasibleParameterError(
            f"m must lie in [0, {pairs}] for n = {n}, got {m}"
        )

    rng = numpy.random.default_rng(seed)

    if pairs <= DENSE_PAIR_LIMIT:
        rows, cols = numpy.triu_indices(n, k=1)
        ranks = numpy.sort(rng.choice(pairs, size=m, replace=False))
        edges = numpy.column_stack([rows[ranks], cols[ranks]])
        return Graph(n, edges.tolist())

    chosen = set()
    while len(chosen) < m:
        u, v = rng.integers(0, n, size=2).tolist()
        if u != v:
            chosen.add((min(u, v), max(u, v)))
    return Graph(n, sorted(chosen))


def gen_random_connected_graph(
    n: int, m: int, seed: Optional[int] = None
) -> Graph:
    """Random connected simple graph with exactly ``m`` edges

    A random recursive tree over a random node order is completed with
    ``m - n + 1`` further edges drawn uniformly from the remaining pairs.

    Parameters
    ----------
    n : int
        Number of nodes
    m : int
        Number of edges, ``n - 1 <= m <= n(n-1)/2``
    seed : int, optional
        Seed for ``numpy.random.default_rng``

    Returns
    -------
    Graph
        A connected graph
    """
    if n < 1:
        raise InfeasibleParameterError(f"random graph needs n >= 1, got {n}")
    pairs = n * (n - 1) // 2
    if not n - 1 <= m <= pairs:
        raise InfeasibleParameterError(
            f"m must lie in [{n - 1}, {pairs}] "
            f"for a connected graph on {n} nodes"
        )

    rng = numpy.random.default_rng(seed)
    order = rng.permutation(n).tolist()
    chosen = set()
    for i in range(1, n):
        u, v = order[i], order[int(rng.integers(0, i))]
        chosen.add((min(u, v), max(u, v)))

    extra = m - len(chosen)
    if pairs <= DENSE_PAIR_LIMIT:
        rows, cols = numpy.triu_indices(n, k=1)
        pairs_upper = zip(rows.tolist(), cols.tolist())
        free = numpy.flatnonzero(
            [(u, v) not in chosen for u, v in pairs_upper]
        )
        ranks = rng.choice(free, size=extra, replace=False)
        chosen.update(zip(rows[ranks].tolist(), cols[ranks].tolist()))
    else:
        while len(chosen) < m:
            u, v = rng.integers(0, n, size=2).tolist()
            if u != v:
                chosen.add((min(u, v), max(u, v)))

    return Graph(n, sorted(chosen))


def gen_disconnected_pair(h: Graph) -> Tuple[Graph, ConnectivityQuery]:
    """Two disjoint copies of ``h`` and a query across them

    Parameters
    ----------
    h : Graph
        A connected graph

    Returns
    -------
    Tuple[Graph, ConnectivityQuery]
        The doubled graph and the query ``(0, n_h)`` linking node 0 of the
        first copy to node 0 of the second copy
    """
    if len(component_of(h, 0)) != h.node_count:
        raise InfeasibleParameterError(
            "gen_disconnected_pair needs a connected h"
        )

    n = h.node_count
    edges = h.edges()
    g = Graph(2 * n, numpy.vstack([edges, edges + n]).tolist())
    return g, ConnectivityQuery(0, n)


def _parse_seed(token: str) -> int:
    token = token.strip()
    if token.startswith("seed"):
        token = token[len("seed") :]
    return int(token)


def _parse_ints(family: str, tokens: List[str], count: int) -> List[int]:
    if len(tokens) != count:
        raise GraphFormatError(
            f"'{family}' expects {count} parameter(s), got {len(tokens)}"
        )
    try:
        return [int(token) for token in tokens]
    except ValueError as exc:
        raise GraphFormatError(f"bad parameter for '{family}': {exc}") from exc


def graph_from_spec(spec: str) -> Tuple[Graph, Optional[ConnectivityQuery]]:
    """Build a graph from a colon-separated generator spec

    Supported families are ``glitter:l``, ``random:n:m[:seed]`` (the seed may
    be written ``7`` or ``seed7``), ``random-connected:n:m[:seed]``,
    ``complete:n``, ``cycle:n``, ``path:n``,
    ``lollipop:clique:tail`` and ``disconnected-pair:<spec>``.

    Returns
    -------
    Tuple[Graph, Optional[ConnectivityQuery]]
        The graph and, for ``disconnected-pair``, its built-in query
    """
    family, _, rest = spec.strip().partition(":")
    tokens = rest.split(":") if rest else []

    if family == "disconnected-pair":
        if not rest:
            raise GraphFormatError("disconnected-pair needs an inner spec")
        inner, _ = graph_from_spec(rest)
        return gen_disconnected_pair(inner)

    if family == "glitter":
        (l,) = _parse_ints(family, tokens, 1)
        return gen_glitter_star(l), None
    if family == "complete":
        (n,) = _parse_ints(family, tokens, 1)
        return gen_complete(n), None
    if family == "cycle":
        (n,) = _parse_ints(family, tokens, 1)
        return gen_cycle(n), None
    if family == "path":
        (n,) = _parse_ints(family, tokens, 1)
        return gen_path(n), None
    if family == "lollipop":
        clique, tail = _parse_ints(family, tokens, 2)
        return gen_lollipop(clique, tail), None
    if family in ("random", "random-connected"):
        if len(tokens) not in (2, 3):
            raise GraphFormatError(f"'{family}' expects n:m or n:m:seed")
        n, m = _parse_ints(family, tokens[:2], 2)
        try:
            seed = _parse_seed(tokens[2]) if len(tokens) == 3 else 0
        except ValueError as exc:
            raise GraphFormatError(f"bad seed in '{spec}'") from exc
        if family == "random":
            return gen_random_graph(n, m, seed), None
        return gen_random_connected_graph(n, m, seed), None

    raise GraphFormatError(f"unknown graph family '{family}' in '{spec}'")
