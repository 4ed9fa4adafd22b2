"""sigma-separation, d-separation, acyclification and graphical Markov blankets.

Separation is decided by a reachability search over (node, arrival) states, the
sigma-analogue of the Bayes-ball algorithm. A conditioned non-collider only
blocks when the path leaves it along an edge pointing out of its strongly
connected component; on a DAG every component is a singleton, which gives
ordinary d-separation.
"""

from __future__ import annotations

import enum
from typing import Iterable, Optional, Sequence

from .graph import (
    DirectedGraph,
    GraphError,
    NodeSet,
    ancestors_of_set,
    descendants,
    is_acyclic,
    node_set,
    strongly_connected_components,
)


class SeparationKind(enum.Enum):
    D = "d"
    SIGMA = "sigma"

    @classmethod
    def coerce(cls, kind) -> "SeparationKind":
        if isinstance(kind, cls):
            return kind
        try:
            return cls(str(kind).lower())
        except ValueError:
            raise GraphError(f"unknown separation kind {kind!r}; use 'd' or 'sigma'") from None


# arrival states of the search
_HEAD = 0  # arrived over an edge pointing into the node
_TAIL_IN = 1  # arrived over an out-edge of the node, into its own component
_TAIL_OUT = 2  # arrived over an out-edge of the node, leaving its component
_START = 3


def _components(g: DirectedGraph, kind: SeparationKind) -> Sequence[int]:
    if kind is SeparationKind.D:
        if not is_acyclic(g):
            raise GraphError("d-separation is only defined on acyclic graphs; use sigma-separation")
        return range(g.node_count)
    return g.scc_index


def connected_nodes(g: DirectedGraph, a: int, s: Iterable[int], kind="sigma", blocked: Iterable[int] = ()) -> frozenset:
    """All nodes ``b`` joined to ``a`` by a path that is open given ``s``.

    Nodes in ``s`` are never reported (a query with ``b`` in ``s`` is ill-posed).
    ``blocked`` nodes may not be entered at all; used by the backdoor search.
    """
    kind = SeparationKind.coerce(kind)
    comp = _components(g, kind)
    a = g.check_node(a)
    s = frozenset(g.check_node(v) for v in s)
    if a in s:
        raise GraphError("source node lies in the conditioning set")
    an_s = ancestors_of_set(g, s)
    pa, ch = g.parent_lists, g.child_lists
    blocked = frozenset(blocked)

    seen = set()
    reached = set()
    stack = [(a, _START)]
    while stack:
        v, arrival = stack.pop()
        in_s = v in s
        cv = comp[v]
        # leave v along an out-edge v -> w: v is a non-collider
        if arrival == _START or not in_s or arrival != _TAIL_OUT:
            for w in ch[v]:
                if in_s and arrival != _START and comp[w] != cv:
                    continue
                state = (w, _HEAD)
                if state not in seen and w not in blocked:
                    seen.add(state)
                    stack.append(state)
        # leave v along an in-edge v <- w
        if arrival == _START:
            ok = True
        elif arrival == _HEAD:
            ok = v in an_s  # collider
        else:
            ok = not in_s or arrival == _TAIL_IN
        if ok:
            for w in pa[v]:
                state = (w, _TAIL_IN if comp[v] == comp[w] else _TAIL_OUT)
                if state not in seen and w not in blocked:
                    seen.add(state)
                    stack.append(state)
    for v, _ in seen:
        if v != a and v not in s:
            reached.add(v)
    return frozenset(reached)


def is_separated(g: DirectedGraph, kind, a: int, b: int, s: Iterable[int] = ()) -> bool:
    """Whether ``a`` and ``b`` are d- or sigma-separated given ``s`` in ``g``.

    Adjacent nodes are never separated. d-separation on a cyclic graph raises
    :class:`GraphError`.
    """
    a, b = g.check_node(a), g.check_node(b)
    s = node_set(s)
    if a == b:
        raise GraphError("separation query needs two distinct nodes")
    if a in s or b in s:
        raise GraphError("query nodes must not be in the conditioning set")
    return b not in connected_nodes(g, a, s, kind)


def acyclify(g: DirectedGraph, scc_order: Optional[Iterable[Sequence[int]]] = None) -> DirectedGraph:
    """sigma-acyclification of ``g``.

    Parameters
    ----------
    g : DirectedGraph
    scc_order : iterable of sequences, optional
        Linear orders for some strongly connected components; each entry must be a
        permutation of one component. Unlisted components use ascending index.

    Returns
    -------
    DirectedGraph
        Acyclic graph on the same nodes: members of a component are fully
        connected along its order, and ``u -> v`` across components iff ``u``
        has an edge into some member of ``v``'s component.
    """
    comps = strongly_connected_components(g)
    comp_of = g.scc_index
    rank = {}
    for c in comps:
        for k, v in enumerate(c):
            rank[v] = k
    if scc_order is not None:
        for order in scc_order:
            order = [g.check_node(v) for v in order]
            if not order:
                raise GraphError("empty component order")
            comp = comps[comp_of[order[0]]]
            if sorted(order) != list(comp):
                raise GraphError(f"order {order} is not a permutation of a strongly connected component")
            for k, v in enumerate(order):
                rank[v] = k

    edges = set()
    for c in comps:
        for u in c:
            for v in c:
                if rank[u] < rank[v]:
                    edges.add((u, v))
    for u, w in g.edges:
        if comp_of[u] != comp_of[w]:
            for v in comps[comp_of[w]]:
                edges.add((u, v))
    return DirectedGraph(g.labels, frozenset(edges), g.observed)


def acyclify_preserving(g: DirectedGraph, x: int, y: int) -> DirectedGraph:
    """Acyclification that keeps ``y`` a sink and ``x -> y`` present iff it is in ``g``.

    Requires the pre-treatment shape ``De(y) = {}`` and ``De(x) <= {y}``.
    """
    x, y = g.check_node(x), g.check_node(y)
    if x == y:
        raise GraphError("treatment and outcome must differ")
    if descendants(g, y):
        raise GraphError("outcome has descendants: De(Y) must be empty")
    if not set(descendants(g, x)) <= {y}:
        raise GraphError("treatment has descendants other than the outcome: De(X) must be a subset of {Y}")
    out = acyclify(g)
    # both endpoints are singleton components, so the default construction already preserves them
    assert not out.child_lists[y]
    assert set(out.child_lists[x]) <= {y}
    assert out.has_edge(x, y) == g.has_edge(x, y)
    return out


def markov_blanket(g: DirectedGraph, x: int, kind="sigma") -> NodeSet:
    """Observed Markov blanket of ``x`` by total conditioning.

    ``y`` belongs to the blanket iff ``x`` and ``y`` are connected given all other
    observed nodes.
    """
    x = g.check_node(x)
    if x not in g.observed:
        raise GraphError(f"node {g.labels[x]!r} is latent; Markov blankets are over observed nodes")
    out = []
    for y in sorted(g.observed):
        if y == x:
            continue
        rest = g.observed - {x, y}
        if not is_separated(g, kind, x, y, rest):
            out.append(y)
    return tuple(out)
