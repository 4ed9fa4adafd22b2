"""Conditional-independence providers: an exact graph oracle and Fisher's Z test.

Providers answer ``independent(a, b, s)`` over observed variables and count the
distinct tests they have run. Verdicts are cached under a symmetric key, so a
repeated query costs nothing and is not counted again.
"""

from __future__ import annotations

import logging
import math
import threading
from typing import Iterable, Optional

import numpy as np
from scipy.stats import norm
from sklearn.utils.validation import check_array

from .graph import DirectedGraph, node_set
from .separation import SeparationKind, is_separated

log = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.01
COND_LIMIT = 1e12


class CIError(ValueError):
    """Raised for CI queries that cannot be answered."""


class CiProvider:
    """Base class; subclasses implement :meth:`_test`.

    Attributes
    ----------
    n_tests : int
        Number of distinct tests answered so far.
    """

    #: whether :meth:`association` returns a meaningful strength
    has_strength = False
    #: sample size behind the provider, or None for exact oracles
    n_samples: Optional[int] = None
    alpha: float = DEFAULT_ALPHA

    def __init__(self):
        self._lock = threading.Lock()
        self._cache = {}
        self.n_tests = 0

    def _key(self, a, b, s, alpha):
        a, b = (a, b) if a <= b else (b, a)
        return a, b, s, alpha

    def _validate(self, a: int, b: int, s: Iterable[int]) -> tuple:
        a, b = int(a), int(b)
        s = node_set(s)
        if a == b:
            raise CIError("CI query needs two distinct variables")
        if a in s or b in s:
            raise CIError("query variables must not appear in the conditioning set")
        return a, b, s

    def independent(self, a: int, b: int, s: Iterable[int] = (), alpha: Optional[float] = None) -> bool:
        """Whether ``a`` and ``b`` are judged independent given ``s``.

        ``alpha`` overrides the provider's significance level for this query.
        """
        a, b, s = self._validate(a, b, s)
        alpha = self.alpha if alpha is None else float(alpha)
        key = self._key(a, b, s, alpha if self.n_samples is not None else None)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        verdict = self._test(a, b, s, alpha)
        with self._lock:
            if key not in self._cache:
                self._cache[key] = verdict
                self.n_tests += 1
        return verdict

    def association(self, a: int, b: int, s: Iterable[int] = ()) -> float:
        """Strength of dependence; providers without a notion of strength return 0."""
        return 0.0

    def _test(self, a: int, b: int, s: tuple, alpha: float) -> bool:
        raise NotImplementedError


class GraphOracle(CiProvider):
    """Exact CI answers read off a graph by sigma-separation (faithfulness assumed)."""

    def __init__(self, graph: DirectedGraph):
        super().__init__()
        self.graph = graph

    @property
    def variables(self) -> tuple:
        return tuple(sorted(self.graph.observed))

    def _validate(self, a, b, s):
        a, b, s = super()._validate(a, b, s)
        for v in (a, b) + s:
            self.graph.check_node(v)
            if v not in self.graph.observed:
                raise CIError(f"variable {self.graph.labels[v]!r} is latent; the oracle only answers observed queries")
        return a, b, s

    def _test(self, a, b, s, alpha):
        return is_separated(self.graph, SeparationKind.SIGMA, a, b, s)


def partial_correlation(corr: np.ndarray, a: int, b: int, s: tuple) -> float:
    """Partial correlation of ``a`` and ``b`` given ``s`` from a correlation matrix.

    Inverts the correlation submatrix over ``{a, b} | s``; falls back to the
    pseudo-inverse when that submatrix is badly conditioned. Returns NaN when
    the conditioning block itself is singular.
    """
    if not s:
        return float(corr[a, b])
    idx = [a, b, *s]
    sub = corr[np.ix_(idx, idx)]
    if np.linalg.cond(sub) > COND_LIMIT:
        cond_block = corr[np.ix_(s, s)]
        if np.linalg.matrix_rank(cond_block) < len(s):
            return float("nan")
        log.warning("ill-conditioned correlation submatrix for (%d, %d | %s); using pseudo-inverse", a, b, s)
        prec = np.linalg.pinv(sub)
    else:
        prec = np.linalg.inv(sub)
    denom = math.sqrt(abs(prec[0, 0] * prec[1, 1]))
    if denom == 0.0:
        return float("nan")
    return float(-prec[0, 1] / denom)


class FisherZ(CiProvider):
    """Fisher's Z partial-correlation test on a data matrix.

    Parameters
    ----------
    data : array-like of shape (n_samples, n_variables)
    alpha : float, default=0.01
        Two-sided significance level.
    """

    has_strength = True

    def __init__(self, data, alpha: float = DEFAULT_ALPHA):
        super().__init__()
        if not 0.0 < alpha < 1.0:
            raise CIError("alpha must lie in (0, 1)")
        x = check_array(data, dtype=np.float64, ensure_min_samples=2, ensure_min_features=1)
        self.alpha = float(alpha)
        self.n_samples = x.shape[0]
        self.n_variables = x.shape[1]
        with np.errstate(invalid="ignore", divide="ignore"):
            corr = np.corrcoef(x, rowvar=False)
        corr = np.atleast_2d(corr)
        corr.setflags(write=False)
        self.corr = corr

    @property
    def variables(self) -> tuple:
        return tuple(range(self.n_variables))

    def _validate(self, a, b, s):
        a, b, s = super()._validate(a, b, s)
        for v in (a, b) + s:
            if not 0 <= v < self.n_variables:
                raise CIError(f"variable index {v} out of range")
        if self.n_samples - len(s) - 3 <= 0:
            raise CIError(f"{self.n_samples} samples are too few to condition on {len(s)} variables")
        return a, b, s

    def statistic(self, a: int, b: int, s: Iterable[int] = ()) -> float:
        """``sqrt(n - |s| - 3) * atanh(r)``; infinite for singular (degenerate) cases."""
        a, b, s = self._validate(a, b, s)
        r = partial_correlation(self.corr, a, b, s)
        if not np.isfinite(r):
            log.warning("singular conditioning covariance for (%d, %d | %s); treating as dependent", a, b, s)
            return math.inf
        r = min(max(r, -1.0 + 1e-15), 1.0 - 1e-15)
        return math.sqrt(self.n_samples - len(s) - 3) * math.atanh(r)

    def p_value(self, a: int, b: int, s: Iterable[int] = ()) -> float:
        return float(2.0 * norm.sf(abs(self.statistic(a, b, s))))

    def association(self, a, b, s=()):
        return abs(self.statistic(a, b, s))

    def _test(self, a, b, s, alpha):
        return abs(self.statistic(a, b, s)) < norm.isf(alpha / 2.0)
