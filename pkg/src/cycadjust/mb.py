"""Markov blanket discovery from conditional-independence tests.

All four algorithms only consult a :class:`~cycadjust.ci.CiProvider`, so they
apply unchanged to data generated by cyclic models.
"""

from __future__ import annotations

import enum
import logging
from itertools import combinations
from typing import Iterable, Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .ci import DEFAULT_ALPHA, CiProvider, FisherZ
from .graph import NodeSet, node_set

log = logging.getLogger(__name__)

HITON_MAX_SUBSET = 3
_MAX_ROUNDS = 1000


class MbAlgorithm(str, enum.Enum):
    TC = "tc"
    FAST_IAMB = "fast-iamb"
    IAMB = "iamb"
    HITON_MB = "hiton"


def tc_alpha(alpha: float, n_samples: Optional[int]) -> float:
    """Corrected level ``alpha / (10 q)`` with ``q = floor(n / 10)``; unchanged if ``q == 0``."""
    if n_samples is None:
        return alpha
    q = n_samples // 10
    return alpha / (10 * q) if q > 0 else alpha


def total_conditioning(p: CiProvider, target: int, variables: Iterable[int]) -> NodeSet:
    """``y`` is in the blanket iff dependent on ``target`` given all other variables."""
    variables = node_set(variables)
    alpha = tc_alpha(p.alpha, p.n_samples)
    out = []
    for y in variables:
        if y == target:
            continue
        rest = [v for v in variables if v not in (target, y)]
        if not p.independent(target, y, rest, alpha=alpha):
            out.append(y)
    return tuple(out)


def _by_strength(p: CiProvider, target: int, cands, mb) -> list:
    """Candidates by decreasing association given ``mb``; ascending index breaks ties."""
    cands = sorted(cands)
    if not p.has_strength:
        return cands
    strength = {y: p.association(target, y, mb) for y in cands}
    return sorted(cands, key=lambda y: (-strength[y], y))


def _shrink(p: CiProvider, target: int, mb: list) -> list:
    for y in list(mb):
        if p.independent(target, y, [v for v in mb if v != y]):
            mb.remove(y)
    return mb


def iamb(p: CiProvider, target: int, variables: Iterable[int]) -> NodeSet:
    """Incremental association Markov blanket: grow one variable at a time, then shrink."""
    variables = [v for v in node_set(variables) if v != target]
    mb = []
    while True:
        cands = [v for v in variables if v not in mb]
        added = False
        for y in _by_strength(p, target, cands, mb):
            if not p.independent(target, y, mb):
                mb.append(y)
                added = True
                break
        if not added:
            break
    return node_set(_shrink(p, target, mb))


def fast_iamb(p: CiProvider, target: int, variables: Iterable[int]) -> NodeSet:
    """Fast-IAMB: speculative multi-variable growth ordered by association, then shrink.

    Without association strengths (the graph oracle) each grow step adds a
    single variable, which keeps the algorithm exact under faithfulness.
    """
    variables = [v for v in node_set(variables) if v != target]
    mb = []
    cands = [y for y in variables if not p.independent(target, y, [])]
    for _ in range(_MAX_ROUNDS):
        if not cands:
            break
        old = list(mb)
        for y in _by_strength(p, target, cands, mb):
            if y in mb:
                continue
            if not p.independent(target, y, mb):
                mb.append(y)
                if not p.has_strength:
                    break
        _shrink(p, target, mb)
        cands = [y for y in variables if y not in mb and not p.independent(target, y, mb)]
        if sorted(mb) == sorted(old):
            break
    else:
        log.warning("fast-iamb hit the round limit for target %d", target)
    return node_set(mb)


def _hiton_pc(p: CiProvider, target: int, variables: list) -> list:
    """Interleaved HITON-PC: admit candidates by association, evict any member
    that some subset (size <= HITON_MAX_SUBSET) of the other members separates."""
    cands = [y for y in variables if y != target and not p.independent(target, y, [])]
    pc = []
    for y in _by_strength(p, target, cands, []):
        pc.append(y)
        for m in list(pc):
            others = [v for v in pc if v != m]
            if any(
                p.independent(target, m, s)
                for k in range(min(len(others), HITON_MAX_SUBSET) + 1)
                for s in combinations(others, k)
            ):
                pc.remove(m)
    return pc


def hiton_mb(p: CiProvider, target: int, variables: Iterable[int]) -> NodeSet:
    """HITON-MB with collider-path expansion.

    Parents/children come from interleaved HITON-PC. Blanket members beyond the
    adjacency set are searched through the PC sets of confirmed members, so
    members reachable only along longer collider paths (latent confounding) are
    found too. A candidate ``y`` is confirmed iff it is dependent on ``target``
    given the rest of the candidate pool, which is exact once the pool covers
    the true blanket.
    """
    variables = list(node_set(variables))
    pool = set(_hiton_pc(p, target, variables))
    expanded = set()
    while True:
        confirmed = {y for y in pool if not p.independent(target, y, sorted(pool - {y}))}
        frontier = sorted(confirmed - expanded)
        if not frontier:
            break
        for m in frontier:
            expanded.add(m)
            pool.update(v for v in _hiton_pc(p, m, variables) if v != target)
    return node_set(confirmed)


_DISPATCH = {
    MbAlgorithm.TC: total_conditioning,
    MbAlgorithm.FAST_IAMB: fast_iamb,
    MbAlgorithm.IAMB: iamb,
    MbAlgorithm.HITON_MB: hiton_mb,
}


def discover_mb(alg, p: CiProvider, target: int, variables: Optional[Iterable[int]] = None) -> NodeSet:
    """Markov blanket of ``target`` among ``variables`` (default: all provider variables)."""
    alg = MbAlgorithm(alg)
    variables = node_set(p.variables if variables is None else variables)
    if target not in variables:
        raise ValueError("target must be one of the candidate variables")
    return _DISPATCH[alg](p, target, variables)


class MarkovBlanketSelector(SelectorMixin, BaseEstimator):
    """Select the columns in the Markov blanket of one target column.

    Parameters
    ----------
    target : int
        Column index of the target variable.
    algorithm : {"tc", "fast-iamb", "iamb", "hiton"}, default="tc"
    alpha : float, default=0.01
        Significance level of the Fisher-Z tests.

    Attributes
    ----------
    blanket_ : tuple of int
        Column indices of the discovered blanket.
    n_tests_ : int
        Number of distinct CI tests run.
    """

    def __init__(self, target=0, algorithm="tc", alpha=DEFAULT_ALPHA):
        self.target = target
        self.algorithm = algorithm
        self.alpha = alpha

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64, ensure_min_samples=4)
        self.n_features_in_ = X.shape[1]
        if not 0 <= self.target < self.n_features_in_:
            raise ValueError(f"target={self.target} is not a column of X")
        provider = FisherZ(X, alpha=self.alpha)
        self.blanket_ = discover_mb(self.algorithm, provider, self.target)
        self.n_tests_ = provider.n_tests
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "blanket_")
        mask = np.zeros(self.n_features_in_, dtype=bool)
        mask[list(self.blanket_)] = True
        return mask
