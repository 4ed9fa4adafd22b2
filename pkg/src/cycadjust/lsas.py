"""Local search for adjustment sets over Markov blankets.

Rule R1 certifies the edge ``X -> Y`` together with an adjustment set, rule R2
certifies its absence. Both read only CI statements restricted to the blankets
of ``X`` and ``Y`` and stay sound when the data come from a cyclic model.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .ci import DEFAULT_ALPHA, CiProvider, FisherZ
from .graph import NodeSet, node_set
from .mb import discover_mb

#: blankets larger than this get the default subset-size cap
UNBOUNDED_MB_SIZE = 12
DEFAULT_LARGE_MAX_Z = 10


class EstimationError(ValueError):
    """Raised when the adjusted regression is degenerate."""


class Status(str, enum.Enum):
    IDENTIFIED = "identified"
    NO_EFFECT = "no_effect"
    UNDECIDABLE = "undecidable"


@dataclass(frozen=True)
class LsasOutcome:
    """Result of one local search.

    ``effect`` is None for an identified edge whose effect was not estimated.
    For ``NO_EFFECT``, ``witness`` is None when the evidence is a separating set
    (then ``adjustment_set`` holds that set) and a node for the witness clause.
    """

    status: Status
    effect: Optional[float] = None
    adjustment_set: Optional[NodeSet] = None
    witness: Optional[int] = None
    tests_used: int = 0
    mb_treatment: NodeSet = ()
    mb_outcome: NodeSet = ()

    @property
    def decided(self) -> bool:
        return self.status is not Status.UNDECIDABLE

    @property
    def edge(self) -> Optional[bool]:
        """Decision on ``X -> Y``: True, False, or None if undecidable."""
        return {Status.IDENTIFIED: True, Status.NO_EFFECT: False}.get(self.status)

    def to_record(self, labels: Optional[Sequence[str]] = None) -> dict:
        def name(v):
            return v if labels is None else labels[v]

        return {
            "status": self.status.value,
            "effect": self.effect,
            "adjustment_set": None if self.adjustment_set is None else [name(v) for v in self.adjustment_set],
            "witness": None if self.witness is None else name(self.witness),
            "tests_used": self.tests_used,
        }


def default_max_z(mb_y_size: int) -> Optional[int]:
    return None if mb_y_size <= UNBOUNDED_MB_SIZE else DEFAULT_LARGE_MAX_Z


def subsets(pool: Iterable[int], max_size: Optional[int] = None) -> Iterator[tuple]:
    """Subsets of ``pool`` by increasing size, lexicographic within a size."""
    pool = sorted(pool)
    top = len(pool) if max_size is None else min(max_size, len(pool))
    for k in range(top + 1):
        yield from combinations(pool, k)


def _r1_holds(p: CiProvider, x, y, w, z) -> bool:
    return not p.independent(w, y, z) and p.independent(w, y, (*z, x))


def _r2_witness_holds(p: CiProvider, x, y, w, z) -> bool:
    return not p.independent(w, x, z) and p.independent(w, y, z)


def check_r1(p: CiProvider, x: int, y: int, mb_x: Iterable[int], mb_y: Iterable[int], max_z=None):
    """First ``(w, z)`` with ``w`` dependent on ``y`` given ``z`` but independent given ``z | {x}``.

    ``w`` ranges over ``mb_x - {y}``, ``z`` over subsets of ``mb_y - {x, w}``.
    Returns None when no pair exists.
    """
    for w in sorted(set(mb_x) - {y}):
        for z in subsets(set(mb_y) - {x, w}, max_z):
            if _r1_holds(p, x, y, w, z):
                return w, z
    return None


def check_r2(p: CiProvider, x: int, y: int, mb_x: Iterable[int], mb_y: Iterable[int], max_z=None):
    """Evidence that ``x -> y`` is absent, or None.

    Returns ``(None, z)`` when ``z`` separates ``x`` and ``y`` and ``(w, z)`` for
    the witness clause. At each subset size the separating-set clause is tried
    before the witness clause.
    """
    pool_y = sorted(set(mb_y) - {x})
    ws = sorted(set(mb_x) - {y})
    top = len(pool_y) if max_z is None else min(max_z, len(pool_y))
    for k in range(top + 1):
        for z in combinations(pool_y, k):
            if p.independent(x, y, z):
                return None, z
        for w in ws:
            for z in combinations([v for v in pool_y if v != w], k):
                if _r2_witness_holds(p, x, y, w, z):
                    return w, z
    return None


def estimate_effect(data, x, y, z: Iterable = ()) -> float:
    """OLS coefficient of ``x`` in the regression of ``y`` on ``[1, x, z]``.

    ``data`` is a :class:`~cycadjust.scm.Dataset`, a DataFrame, or an array; the
    column arguments are labels or integer positions accordingly.
    """
    values, cols = _as_matrix(data)

    def col(c):
        if isinstance(c, (int, np.integer)):
            return int(c)
        return cols.index(c)

    xi, yi, zi = col(x), col(y), [col(c) for c in z]
    n = values.shape[0]
    if n <= len(zi) + 2:
        raise EstimationError(f"need more than {len(zi) + 2} samples to adjust for {len(zi)} covariates")
    design = np.column_stack([np.ones(n), values[:, xi], values[:, zi]])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise EstimationError("design matrix [1, X, Z] is rank deficient")
    target = values[:, yi]
    if np.linalg.matrix_rank(np.column_stack([design, target])) <= design.shape[1]:
        raise EstimationError("outcome is an exact linear function of treatment and covariates")
    beta, *_ = np.linalg.lstsq(design, target, rcond=None)
    return float(beta[1])


def _as_matrix(data):
    if hasattr(data, "columns") and hasattr(data, "values") and not isinstance(data, pd.DataFrame):
        return np.asarray(data.values, dtype=float), list(data.columns)
    if isinstance(data, pd.DataFrame):
        return data.to_numpy(dtype=float), list(data.columns)
    arr = check_array(data, dtype=np.float64)
    return arr, list(range(arr.shape[1]))


def run_lsas(
    p: CiProvider,
    x: int,
    y: int,
    mb_alg="tc",
    max_z: Optional[int] = "auto",
    data=None,
    variables: Optional[Iterable[int]] = None,
) -> LsasOutcome:
    """Local search for an adjustment set for the effect of ``x`` on ``y``.

    Parameters
    ----------
    p : CiProvider
    x, y : int
        Treatment and outcome variables of ``p``.
    mb_alg : str or MbAlgorithm
    max_z : int, None or "auto"
        Cap on ``|Z|``. ``"auto"`` is unbounded for ``|MB(y)| <= 12`` and 10 above.
    data : optional
        Observations (same column order as ``p``) used to estimate the effect on
        an R1 hit. Without data the effect stays None.
    variables : iterable of int, optional
        Variables to search; defaults to everything ``p`` knows.

    Returns
    -------
    LsasOutcome
    """
    if x == y:
        raise ValueError("treatment and outcome must differ")
    start = p.n_tests
    variables = node_set(p.variables if variables is None else variables)
    mb_x = discover_mb(mb_alg, p, x, variables)
    mb_y = discover_mb(mb_alg, p, y, variables)
    if max_z == "auto":
        max_z = default_max_z(len(mb_y))

    def done(status, **kw):
        return LsasOutcome(status, tests_used=p.n_tests - start, mb_treatment=mb_x, mb_outcome=mb_y, **kw)

    pool_y = set(mb_y) - {x}
    for w in sorted(set(mb_x) - {y}):
        for z in subsets(pool_y - {w}, max_z):
            if _r1_holds(p, x, y, w, z):
                effect = None if data is None else estimate_effect(data, x, y, z)
                return done(Status.IDENTIFIED, effect=effect, adjustment_set=z, witness=w)
            if p.independent(x, y, z):
                return done(Status.NO_EFFECT, adjustment_set=z)
            if _r2_witness_holds(p, x, y, w, z):
                return done(Status.NO_EFFECT, adjustment_set=z, witness=w)
    # separating sets that the witness loop never visited (no witness, or z containing w)
    for z in subsets(pool_y, max_z):
        if p.independent(x, y, z):
            return done(Status.NO_EFFECT, adjustment_set=z)
    return done(Status.UNDECIDABLE)


class LocalAdjustmentSearch(BaseEstimator):
    """Estimate the causal effect of one column on another by local adjustment-set search.

    Works for data from acyclic and cyclic linear models alike; CI decisions use
    Fisher's Z test.

    Parameters
    ----------
    treatment, outcome : int or str
        Column positions, or labels when fitting on a DataFrame.
    mb_algorithm : {"tc", "fast-iamb", "iamb", "hiton"}, default="tc"
    alpha : float, default=0.01
    max_z : int, None or "auto", default="auto"
    estimate : bool, default=True
        Fit the adjusted regression on an R1 hit.

    Attributes
    ----------
    outcome_ : LsasOutcome
    status_ : str
    effect_ : float or None
    adjustment_set_ : list or None
        Columns (labels for DataFrames) of the adjustment set.
    witness_ : int, str or None
    n_tests_ : int

    Examples
    --------
    >>> est = LocalAdjustmentSearch(treatment="X", outcome="Y").fit(df)  # doctest: +SKIP
    >>> est.status_, est.effect_  # doctest: +SKIP
    """

    def __init__(self, treatment=0, outcome=1, mb_algorithm="tc", alpha=DEFAULT_ALPHA, max_z="auto", estimate=True):
        self.treatment = treatment
        self.outcome = outcome
        self.mb_algorithm = mb_algorithm
        self.alpha = alpha
        self.max_z = max_z
        self.estimate = estimate

    def fit(self, X, y=None):
        if isinstance(X, pd.DataFrame):
            names = [str(c) for c in X.columns]
        else:
            names = None
        values = check_array(X, dtype=np.float64, ensure_min_samples=4, ensure_min_features=2)
        self.n_features_in_ = values.shape[1]
        if names is not None:
            self.feature_names_in_ = np.asarray(names, dtype=object)
        xi, yi = self._resolve(self.treatment, names), self._resolve(self.outcome, names)
        provider = FisherZ(values, alpha=self.alpha)
        data = values if self.estimate else None
        out = run_lsas(provider, xi, yi, self.mb_algorithm, self.max_z, data=data)
        labels = names if names is not None else list(range(values.shape[1]))
        self.outcome_ = out
        self.status_ = out.status.value
        self.effect_ = out.effect if out.status is Status.IDENTIFIED else (0.0 if out.status is Status.NO_EFFECT else None)
        self.adjustment_set_ = None if out.adjustment_set is None or out.status is not Status.IDENTIFIED else [
            labels[v] for v in out.adjustment_set
        ]
        self.witness_ = None if out.witness is None else labels[out.witness]
        self.n_tests_ = out.tests_used
        return self

    def _resolve(self, col, names):
        if isinstance(col, (int, np.integer)):
            if not 0 <= col < self.n_features_in_:
                raise ValueError(f"column {col} out of range")
            return int(col)
        if names is None or str(col) not in names:
            raise ValueError(f"unknown column {col!r}")
        return names.index(str(col))

    @property
    def identified_(self) -> bool:
        check_is_fitted(self, "outcome_")
        return self.outcome_.status is Status.IDENTIFIED
