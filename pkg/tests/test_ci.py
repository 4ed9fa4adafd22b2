import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from fixtures import chain, confounded
from cycadjust.ci import CIError, FisherZ, GraphOracle, partial_correlation


def chain_data(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=n)
    b = 0.8 * a + rng.normal(size=n)
    c = -0.6 * b + rng.normal(size=n)
    return np.column_stack([a, b, c])


def test_oracle_chain():
    p = GraphOracle(chain())
    assert p.independent(0, 2, [1])
    assert not p.independent(0, 2)
    assert p.variables == (0, 1, 2)


def test_oracle_rejects_latent_queries():
    p = GraphOracle(confounded(observed_u=False))
    assert p.variables == (1, 2, 3)
    with pytest.raises(CIError, match="latent"):
        p.independent(0, 2)


@pytest.mark.parametrize("a, b, s", [(0, 0, []), (0, 1, [0]), (0, 1, [1])])
def test_ill_posed_queries(a, b, s):
    with pytest.raises(CIError):
        GraphOracle(chain()).independent(a, b, s)


def test_fisher_z_chain_calibration():
    # the true independence is accepted at rate about 1 - alpha, dependence always detected
    accepted = 0
    runs = 300
    for seed in range(runs):
        p = FisherZ(chain_data(15_000, seed), alpha=0.01)
        accepted += p.independent(0, 2, [1])
        assert not p.independent(0, 2)
        assert not p.independent(0, 1, [2])
    assert accepted / runs >= 0.97


def test_statistic_matches_closed_form():
    x = chain_data(2000, 1)
    p = FisherZ(x)
    r = np.corrcoef(x, rowvar=False)[0, 2]
    assert p.statistic(0, 2) == pytest.approx(math.sqrt(2000 - 3) * math.atanh(r))
    assert p.p_value(0, 2) == pytest.approx(2 * stats.norm.sf(abs(p.statistic(0, 2))))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(0, 3))
def test_partial_correlation_equals_residual_correlation(seed, k):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(400, 6)) @ rng.normal(size=(6, 6))
    s = tuple(range(2, 2 + k))
    corr = np.corrcoef(x, rowvar=False)
    design = np.column_stack([np.ones(400), x[:, list(s)]])
    ra = x[:, 0] - design @ np.linalg.lstsq(design, x[:, 0], rcond=None)[0]
    rb = x[:, 1] - design @ np.linalg.lstsq(design, x[:, 1], rcond=None)[0]
    assert partial_correlation(corr, 0, 1, s) == pytest.approx(np.corrcoef(ra, rb)[0, 1], abs=1e-9)


def test_too_few_samples():
    p = FisherZ(np.random.default_rng(0).normal(size=(5, 5)))
    with pytest.raises(CIError, match="too few"):
        p.independent(0, 1, [2, 3])
    p.independent(0, 1, [2])


def test_singular_conditioning_is_dependent(caplog):
    rng = np.random.default_rng(0)
    z = rng.normal(size=500)
    x = np.column_stack([rng.normal(size=500), rng.normal(size=500), z, z])
    p = FisherZ(x)
    assert not p.independent(0, 1, [2, 3])
    assert "singular" in caplog.text


def test_cache_counts_distinct_tests():
    p = FisherZ(chain_data(500, 0))
    p.independent(0, 2, [1])
    p.independent(2, 0, (1,))
    assert p.n_tests == 1
    p.independent(0, 2, [1], alpha=0.05)
    assert p.n_tests == 2
    o = GraphOracle(chain())
    o.independent(0, 2, [1], alpha=0.5)
    o.independent(0, 2, [1])
    assert o.n_tests == 1


def test_alpha_validation():
    with pytest.raises(CIError):
        FisherZ(np.zeros((10, 2)), alpha=1.5)


def test_alpha_override_changes_verdict():
    rng = np.random.default_rng(1)
    a = rng.normal(size=1000)
    b = 0.07 * a + rng.normal(size=1000)
    p = FisherZ(np.column_stack([a, b]))
    pv = p.p_value(0, 1)
    assert p.independent(0, 1, alpha=pv / 2) and not p.independent(0, 1, alpha=min(0.99, pv * 2))
