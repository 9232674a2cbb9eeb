from typing import Dict, Hashable, Iterable, List, Set

from .exceptions import UnknownElementError


class DisjointSets:
    """Disjoint-set forest with union by rank and path compression

    Elements must be registered with :meth:`add` (SET) before they are
    passed to :meth:`find` (FIND) or :meth:`union` (UNION). Each set is
    identified by its root element, and both operations run in amortised
    near-constant time.

    Parameters
    ----------
    elements : Iterable[Hashable], optional
        Elements registered as singletons on construction

    Attributes
    ----------
    set_count : int
        The number of disjoint sets currently held
    """

    def __init__(self, elements: Iterable[Hashable] = ()):
        self._parent: Dict[Hashable, Hashable] = {}
        self._rank: Dict[Hashable, int] = {}
        self._size: Dict[Hashable, int] = {}
        self.set_count = 0
        for element in elements:
            self.add(element)

    def __repr__(self) -> str:
        return (
            f"DisjointSets({len(self._parent)} elements, "
            f"{self.set_count} sets)"
        )

    def __len__(self) -> int:
        return len(self._parent)

    def __contains__(self, element: Hashable) -> bool:
        return element in self._parent

    def add(self, element: Hashable) -> Hashable:
        """SET: register ``element`` as a singleton, a no-op if present

        Returns
        -------
        Hashable
            The identifier of the set holding ``element``
        """
        if element not in self._parent:
            self._parent[element] = element
            self._rank[element] = 0
            self._size[element] = 1
            self.set_count += 1
        return self.find(element)

    def find(self, element: Hashable) -> Hashable:
        """FIND: the root of the set containing ``element``

        Raises
        ------
        UnknownElementError
            If ``element`` was never registered
        """
        try:
            parent = self._parent[element]
        except KeyError:
            raise UnknownElementError(
                f"{element!r} was never registered"
            ) from None

        path = [element]
        while parent != self._parent[parent]:
            path.append(parent)
            parent = self._parent[parent]

        for node in path:
            self._parent[node] = parent
        return parent

    def union(self, a: Hashable, b: Hashable) -> Hashable:
        """UNION: merge the sets containing ``a`` and ``b``

        Returns
        -------
        Hashable
            The root of the merged set
        """
        root_a, root_b = self.find(a), self.find(b)
        if root_a == root_b:
            return root_a

        if self._rank[root_a] < self._rank[root_b]:
            root_a, root_b = root_b, root_a
        if self._rank[root_a] == self._rank[root_b]:
            self._rank[root_a] += 1

        self._parent[root_b] = root_a
        self._size[root_a] += self._size.pop(root_b)
        self.set_count -= 1
        return root_a

    def connected(self, a: Hashable, b: Hashable) -> bool:
        return self.find(a) == self.find(b)

    def size(self, element: Hashable) -> int:
        """Number of elements in the set containing ``element``"""
        return self._size[self.find(element)]

    def partition(self) -> List[Set[Hashable]]:
        """The current sets, ordered by first registered member"""
        groups: Dict[Hashable, Set[Hashable]] = {}
        for element in self._parent:
            groups.setdefault(self.find(element), set()).add(element)
        return list(groups.values())
