"""Directed (possibly cyclic) graphs with an observed/latent node partition."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Sequence

import networkx as nx
import numpy as np

NodeSet = tuple  # sorted, duplicate-free tuple of node indices


class GraphError(ValueError):
    """Raised for malformed graphs or illegal queries on a graph."""


def node_set(nodes: Iterable[int]) -> NodeSet:
    """Normalise an iterable of node indices to a sorted, duplicate-free tuple."""
    return tuple(sorted(set(int(v) for v in nodes)))


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """Immutable directed graph over dense integer nodes ``0 .. n-1``.

    Parameters
    ----------
    labels : sequence of str
        Unique node labels; ``len(labels)`` is the node count.
    edges : iterable of (int, int)
        Directed edges ``i -> j``. Self-loops are rejected; 2-cycles are allowed.
    observed : iterable of int, optional
        Observed nodes. Defaults to all nodes.
    """

    labels: tuple
    edges: frozenset
    observed: frozenset = field(default=None)

    def __post_init__(self):
        labels = tuple(str(s) for s in self.labels)
        if len(labels) == 0:
            raise GraphError("a graph needs at least one node")
        if len(set(labels)) != len(labels):
            raise GraphError("node labels must be distinct")
        n = len(labels)
        edges = frozenset((int(i), int(j)) for i, j in self.edges)
        for i, j in edges:
            if not (0 <= i < n and 0 <= j < n):
                raise GraphError(f"edge ({i}, {j}) has an endpoint out of range")
            if i == j:
                raise GraphError(f"self-loop on node {labels[i]!r} is not allowed")
        observed = frozenset(range(n)) if self.observed is None else frozenset(int(v) for v in self.observed)
        if any(not 0 <= v < n for v in observed):
            raise GraphError("observed set contains an unknown node")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "observed", observed)

    @classmethod
    def from_labels(cls, labels: Sequence[str], edges: Iterable[tuple], observed: Optional[Iterable[str]] = None):
        """Build a graph from label-valued edges, e.g. ``[("A", "B")]``."""
        index = {s: k for k, s in enumerate(labels)}
        try:
            idx_edges = [(index[a], index[b]) for a, b in edges]
            idx_obs = None if observed is None else [index[s] for s in observed]
        except KeyError as exc:
            raise GraphError(f"unknown node label {exc.args[0]!r}") from None
        return cls(tuple(labels), frozenset(idx_edges), None if idx_obs is None else frozenset(idx_obs))

    def __eq__(self, other):
        if not isinstance(other, DirectedGraph):
            return NotImplemented
        return (self.labels, self.edges, self.observed) == (other.labels, other.edges, other.observed)

    def __hash__(self):
        return hash((self.labels, self.edges, self.observed))

    def __repr__(self):
        arcs = ", ".join(f"{self.labels[i]}->{self.labels[j]}" for i, j in sorted(self.edges))
        return f"DirectedGraph([{arcs}], n={self.node_count})"

    @property
    def node_count(self) -> int:
        return len(self.labels)

    @property
    def latent(self) -> NodeSet:
        return node_set(set(range(self.node_count)) - self.observed)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise GraphError(f"unknown node label {label!r}") from None

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self.edges

    def check_node(self, v: int) -> int:
        if not isinstance(v, (int, np.integer)) or not 0 <= v < self.node_count:
            raise GraphError(f"node index {v!r} out of range for a graph with {self.node_count} nodes")
        return int(v)

    # adjacency caches; safe because instances are immutable
    @cached_property
    def parent_lists(self) -> tuple:
        pa = [[] for _ in range(self.node_count)]
        for i, j in sorted(self.edges):
            pa[j].append(i)
        return tuple(tuple(p) for p in pa)

    @cached_property
    def child_lists(self) -> tuple:
        ch = [[] for _ in range(self.node_count)]
        for i, j in sorted(self.edges):
            ch[i].append(j)
        return tuple(tuple(c) for c in ch)

    @cached_property
    def scc_index(self) -> tuple:
        """Component id of every node; ids follow the order of :func:`strongly_connected_components`."""
        comp = [0] * self.node_count
        for k, members in enumerate(strongly_connected_components(self)):
            for v in members:
                comp[v] = k
        return tuple(comp)

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(self.node_count))
        g.add_edges_from(self.edges)
        return g

    def adjacency_matrix(self) -> np.ndarray:
        """Boolean matrix ``A`` with ``A[i, j]`` true iff ``i -> j``."""
        a = np.zeros((self.node_count, self.node_count), dtype=bool)
        for i, j in self.edges:
            a[i, j] = True
        return a


def strongly_connected_components(g: DirectedGraph) -> list:
    """Partition the nodes into strongly connected components.

    Components are returned as sorted tuples, ordered by their smallest member.
    """
    comps = [node_set(c) for c in nx.strongly_connected_components(g.to_networkx())]
    return sorted(comps, key=lambda c: c[0])


def scc_of(g: DirectedGraph, x: int) -> NodeSet:
    k = g.scc_index[g.check_node(x)]
    return node_set(v for v in range(g.node_count) if g.scc_index[v] == k)


def is_acyclic(g: DirectedGraph) -> bool:
    return len(set(g.scc_index)) == g.node_count


def _reach(adj: tuple, sources: Iterable[int]) -> set:
    seen = set()
    stack = list(sources)
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def parents(g: DirectedGraph, x: int) -> NodeSet:
    return g.parent_lists[g.check_node(x)]


def children(g: DirectedGraph, x: int) -> NodeSet:
    return g.child_lists[g.check_node(x)]


def ancestors(g: DirectedGraph, x: int) -> NodeSet:
    """Nodes with a directed path into ``x``.

    ``x`` itself is included only when it lies on a directed cycle.
    """
    return node_set(_reach(g.parent_lists, [g.check_node(x)]))


def descendants(g: DirectedGraph, x: int) -> NodeSet:
    """Nodes reachable from ``x`` by a directed path (``x`` included only if on a cycle)."""
    return node_set(_reach(g.child_lists, [g.check_node(x)]))


def ancestors_of_set(g: DirectedGraph, s: Iterable[int]) -> frozenset:
    """Reflexive ancestral closure ``An(S)``: ``S`` together with all its ancestors."""
    s = [g.check_node(v) for v in s]
    return frozenset(_reach(g.parent_lists, s)) | frozenset(s)


def random_directed_graph(
    rng: np.random.Generator,
    n_nodes: int,
    edge_prob: float = 0.3,
    latent_prob: float = 0.0,
    acyclic: bool = False,
) -> DirectedGraph:
    """Erdos-Renyi style random directed graph, used for property tests and corpora.

    With ``acyclic=True`` edges follow a random topological order.
    """
    order = rng.permutation(n_nodes)
    rank = np.empty(n_nodes, dtype=int)
    rank[order] = np.arange(n_nodes)
    edges = []
    for i in range(n_nodes):
        for j in range(n_nodes):
            if i == j or (acyclic and rank[i] > rank[j]):
                continue
            if rng.random() < edge_prob:
                edges.append((i, j))
    observed = [v for v in range(n_nodes) if rng.random() >= latent_prob]
    labels = tuple(f"V{k}" for k in range(n_nodes))
    return DirectedGraph(labels, frozenset(edges), frozenset(observed))


# --- graph file format -------------------------------------------------------


@dataclass(frozen=True)
class GraphDocument:
    """A graph plus the optional treatment/outcome labels stored alongside it."""

    graph: DirectedGraph
    treatment: Optional[str] = None
    outcome: Optional[str] = None


def graph_to_dict(g: DirectedGraph, treatment: Optional[int] = None, outcome: Optional[int] = None) -> dict:
    return {
        "nodes": list(g.labels),
        "edges": [[g.labels[i], g.labels[j]] for i, j in sorted(g.edges)],
        "observed": [g.labels[v] for v in sorted(g.observed)],
        "treatment": None if treatment is None else g.labels[treatment],
        "outcome": None if outcome is None else g.labels[outcome],
    }


def graph_from_dict(doc: dict) -> GraphDocument:
    for key in ("nodes", "edges"):
        if key not in doc:
            raise GraphError(f"graph document is missing the {key!r} field")
    labels = list(doc["nodes"])
    g = DirectedGraph.from_labels(labels, [tuple(e) for e in doc["edges"]], doc.get("observed"))
    for role in ("treatment", "outcome"):
        if doc.get(role) is not None and doc[role] not in labels:
            raise GraphError(f"{role} {doc[role]!r} is not a node")
    return GraphDocument(g, doc.get("treatment"), doc.get("outcome"))


def dumps_canonical(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def save_graph(path, g: DirectedGraph, treatment: Optional[int] = None, outcome: Optional[int] = None) -> None:
    Path(path).write_text(dumps_canonical(graph_to_dict(g, treatment, outcome)))


def load_graph(path) -> GraphDocument:
    return graph_from_dict(json.loads(Path(path).read_text()))
