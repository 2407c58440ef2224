"""Undirected graphs, decomposability checks, and perfect elimination orderings.

Vertices are 0-based integers ``0..k-1`` in process; the JSON file format
(``{"k": int, "edges": [[i, j], ...]}``) uses 1-based labels.
"""

import json
from dataclasses import dataclass
from itertools import combinations


class NotDecomposable(ValueError):
    """Raised when an operation requires a decomposable (chordal) graph."""


class Graph:
    """Immutable undirected graph on vertices 0..k-1 with no self-loops."""

    __slots__ = ("k", "edges", "_adj")

    def __init__(self, k, edges=()):
        if k < 1:
            raise ValueError("vertex count must be positive")
        norm = set()
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop at vertex {a}")
            if not (0 <= a < k and 0 <= b < k):
                raise ValueError(f"edge ({a},{b}) out of range for k={k}")
            norm.add((min(a, b), max(a, b)))
        self.k = int(k)
        self.edges = frozenset(norm)
        adj = [set() for _ in range(k)]
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        self._adj = tuple(frozenset(s) for s in adj)

    def has_edge(self, i, j):
        return (min(i, j), max(i, j)) in self.edges

    def neighbors(self, i):
        return self._adj[i]

    def forward_neighbors(self, i):
        """Sorted neighbors j of i with j > i (under the current labels)."""
        return sorted(j for j in self._adj[i] if j > i)

    def forward_degree(self, i):
        return sum(1 for j in self._adj[i] if j > i)

    def relabel(self, ordering):
        """Rename the vertex at position p of `ordering` to p."""
        pos = ordering.position_of()
        return Graph(self.k, [(pos[a], pos[b]) for a, b in self.edges])

    def sorted_edges(self):
        return sorted(self.edges)

    def __eq__(self, other):
        return isinstance(other, Graph) and self.k == other.k and self.edges == other.edges

    def __hash__(self):
        return hash((self.k, self.edges))

    def __repr__(self):
        return f"Graph(k={self.k}, edges={self.sorted_edges()})"

    def to_json_dict(self):
        """1-based dict matching the on-disk graph format."""
        return {"k": self.k, "edges": [[a + 1, b + 1] for a, b in self.sorted_edges()]}

    @classmethod
    def from_json_dict(cls, d):
        k = int(d["k"])
        return cls(k, [(int(a) - 1, int(b) - 1) for a, b in d["edges"]])

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


@dataclass(frozen=True)
class EliminationOrdering:
    """Bijection from elimination positions 0..k-1 to vertices."""

    perm: tuple

    def __post_init__(self):
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError("perm is not a permutation of 0..k-1")

    @classmethod
    def identity(cls, k):
        return cls(tuple(range(k)))

    def position_of(self):
        """Inverse map: position_of()[v] is the elimination slot of vertex v."""
        pos = [0] * len(self.perm)
        for p, v in enumerate(self.perm):
            pos[v] = p
        return tuple(pos)


def _mcs_ordering(g):
    """Maximum cardinality search; first-visited vertex takes the last slot.

    Ties go to the largest vertex index, so freely orderable vertices end up
    in increasing label order (K_n maps to the identity) and rerunning on a
    graph already relabeled by this function reproduces the identity.
    """
    k = g.k
    weight = [0] * k
    visited = [False] * k
    perm = [0] * k
    for slot in range(k - 1, -1, -1):
        best = max((v for v in range(k) if not visited[v]), key=lambda v: (weight[v], v))
        visited[best] = True
        perm[slot] = best
        for u in g.neighbors(best):
            if not visited[u]:
                weight[u] += 1
    return EliminationOrdering(tuple(perm))


def verify_ordering(g, ordering):
    """True iff `ordering` is a perfect vertex elimination scheme for g.

    Checks, on the relabeled graph, that the later-eliminated neighbors of
    each vertex are mutually adjacent (zero fill-in condition).
    """
    relabeled = g.relabel(ordering)
    for i in range(relabeled.k):
        fwd = relabeled.forward_neighbors(i)
        for a, b in combinations(fwd, 2):
            if not relabeled.has_edge(a, b):
                return False
    return True


def is_decomposable(g):
    """Chordality test: MCS ordering followed by a zero-fill-in check."""
    return verify_ordering(g, _mcs_ordering(g))


def perfect_elimination_ordering(g):
    """A deterministic perfect elimination ordering of a decomposable graph.

    Raises NotDecomposable when g is not chordal.
    """
    ordering = _mcs_ordering(g)
    if not verify_ordering(g, ordering):
        raise NotDecomposable("graph has a chordless cycle of length >= 4")
    return ordering


def separates(g, i, j):
    """Whether F(i,j) = {i+1..j-1} u {j+1..k-1} separates i from j.

    Computed by reachability in the subgraph induced on the complement
    {0..i} u {j}; requires i < j.
    """
    if not i < j:
        raise ValueError("requires i < j")
    allowed = set(range(i + 1)) | {j}
    stack = [i]
    seen = {i}
    while stack:
        v = stack.pop()
        if v == j:
            return False
        for u in g.neighbors(v):
            if u in allowed and u not in seen:
                seen.add(u)
                stack.append(u)
    return True
