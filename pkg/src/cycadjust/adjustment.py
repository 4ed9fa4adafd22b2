"""Backdoor adjustment sets in possibly cyclic graphs."""

from __future__ import annotations

from itertools import combinations
from typing import Iterable

from .graph import DirectedGraph, GraphError, NodeSet, ancestors_of_set, descendants, node_set
from .separation import _HEAD, _TAIL_IN, _TAIL_OUT, SeparationKind, connected_nodes, is_separated


def _check_query(g: DirectedGraph, x: int, y: int, z: Iterable[int]) -> NodeSet:
    x, y = g.check_node(x), g.check_node(y)
    z = node_set(g.check_node(v) for v in z)
    if x == y or x in z or y in z:
        raise GraphError("treatment, outcome and adjustment set must be pairwise disjoint")
    return z


def _open_backdoor_reaches(g: DirectedGraph, x: int, y: int, z: NodeSet) -> bool:
    """Whether some path ``x <- ... y`` is sigma-open given ``z``.

    The search starts on the parents of ``x`` and may never re-enter ``x``.
    """
    zs = frozenset(z)
    an_z = ancestors_of_set(g, zs)
    comp = g.scc_index
    pa, ch = g.parent_lists, g.child_lists
    seen = set()
    stack = []
    for p in pa[x]:
        state = (p, _TAIL_IN if comp[p] == comp[x] else _TAIL_OUT)
        seen.add(state)
        stack.append(state)
    while stack:
        v, arrival = stack.pop()
        if v == y:
            return True
        in_s = v in zs
        cv = comp[v]
        if not in_s or arrival != _TAIL_OUT:
            for w in ch[v]:
                if w == x or (in_s and comp[w] != cv):
                    continue
                state = (w, _HEAD)
                if state not in seen:
                    seen.add(state)
                    stack.append(state)
        ok = (v in an_z) if arrival == _HEAD else (not in_s or arrival == _TAIL_IN)
        if ok:
            for w in pa[v]:
                if w == x:
                    continue
                state = (w, _TAIL_IN if comp[v] == comp[w] else _TAIL_OUT)
                if state not in seen:
                    seen.add(state)
                    stack.append(state)
    return False


def is_backdoor_adjustment_set(g: DirectedGraph, x: int, y: int, z: Iterable[int]) -> bool:
    """sigma-backdoor criterion: ``z`` has no descendant of ``x`` and blocks every
    path between ``x`` and ``y`` that starts with an edge into ``x``."""
    z = _check_query(g, x, y, z)
    if set(z) & set(descendants(g, x)):
        return False
    return not _open_backdoor_reaches(g, x, y, z)


def with_intervention_node(g: DirectedGraph, x: int) -> tuple:
    """Return ``(g', i)``: ``g`` plus a fresh parentless node ``i`` with the single edge ``i -> x``."""
    label = "I_" + g.labels[x]
    while label in g.labels:
        label = "_" + label
    i = g.node_count
    aug = DirectedGraph(g.labels + (label,), g.edges | {(i, x)}, g.observed)
    return aug, i


def intervention_node_check(g: DirectedGraph, x: int, y: int, z: Iterable[int]) -> bool:
    """Adjustment validity via an added intervention node ``I -> x``:
    ``z`` sigma-separated from ``I``, and ``y`` separated from ``I`` given ``{x} | z``."""
    z = _check_query(g, x, y, z)
    aug, i = with_intervention_node(g, x)
    reach = connected_nodes(aug, i, (), SeparationKind.SIGMA)
    if any(v in reach for v in z):
        return False
    return is_separated(aug, SeparationKind.SIGMA, i, y, set(z) | {x})


def enumerate_valid_adjustment_sets(g: DirectedGraph, x: int, y: int, max_size: int) -> list:
    """All observed ``z`` with ``|z| <= max_size`` satisfying the backdoor criterion.

    Ordered by size, then lexicographically.
    """
    x, y = g.check_node(x), g.check_node(y)
    pool = sorted(g.observed - {x, y})
    out = []
    for k in range(min(max_size, len(pool)) + 1):
        for z in combinations(pool, k):
            if is_backdoor_adjustment_set(g, x, y, z):
                out.append(z)
    return out


def satisfies_pretreatment(g: DirectedGraph, x: int, y: int) -> bool:
    """``De(y)`` empty and ``De(x)`` contained in ``{y}``."""
    return not descendants(g, y) and set(descendants(g, x)) <= {y}
