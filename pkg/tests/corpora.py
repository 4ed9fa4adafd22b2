"""Seeded random corpora shared by the acceptance and property tests."""

import numpy as np

from cycadjust.graph import is_acyclic, random_directed_graph
from cycadjust.scm import GenConfig, generate_scm


def separation_corpus(n_graphs=200, max_nodes=8, seed=20240101):
    """Random graphs on 3..max_nodes nodes; the first half is forced to contain a cycle."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n_graphs:
        want_cycle = len(out) < (n_graphs + 1) // 2
        n = int(rng.integers(3, max_nodes + 1))
        g = random_directed_graph(rng, n, edge_prob=float(rng.uniform(0.15, 0.4)), latent_prob=0.2,
                                  acyclic=not want_cycle)
        if want_cycle and is_acyclic(g):
            continue
        if len(g.observed) < 2:
            continue
        out.append(g)
    return out


def random_gen_config(rng, max_nodes=10, cyclic=None, form="linear", noise="gaussian"):
    """A feasible pre-treatment generator config with random size, edges and latents."""
    cyclic = bool(rng.random() < 0.5) if cyclic is None else cyclic
    n = int(rng.integers(4, max_nodes + 1))
    k = n - 2
    edge_xy = bool(rng.random() < 0.5)
    capacity = k * (k - 1) // 2 + 2 * k + int(edge_xy)
    low = (min(4, k) if cyclic else 0) + int(edge_xy)
    edges = int(rng.integers(low, min(capacity, low + 2 * n) + 1))
    latents = int(rng.integers(0, k // 2 + 1))
    return GenConfig(n, edges, latents, cyclic, form, noise, edge_xy, [1000], int(rng.integers(2**31)))


def pretreatment_scms(n_scms, max_nodes=10, seed=7, **kw):
    rng = np.random.default_rng(seed)
    return [generate_scm(random_gen_config(rng, max_nodes, **kw)) for _ in range(n_scms)]
