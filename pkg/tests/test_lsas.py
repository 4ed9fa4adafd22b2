import numpy as np
import pandas as pd
import pytest
from sklearn.base import clone

from corpora import pretreatment_scms
from fixtures import confounded
from cycadjust.adjustment import is_backdoor_adjustment_set
from cycadjust.ci import GraphOracle
from cycadjust.graph import DirectedGraph
from cycadjust.lsas import (
    EstimationError,
    LocalAdjustmentSearch,
    Status,
    check_r1,
    check_r2,
    default_max_z,
    estimate_effect,
    run_lsas,
    subsets,
)
from cycadjust.scm import GenConfig, generate_scm, sample, true_causal_effect
from cycadjust.separation import acyclify, markov_blanket


def oracle_and_blankets(g, x, y):
    return GraphOracle(g), markov_blanket(g, x), markov_blanket(g, y)


def g_of(labels, edges, observed=None):
    return DirectedGraph.from_labels(labels, edges, observed)


# rule R1


def test_r1_instrument_without_confounding():
    g = g_of(["W", "X", "Y"], [("W", "X"), ("X", "Y")])
    p, mx, my = oracle_and_blankets(g, 1, 2)
    assert check_r1(p, 1, 2, mx, my) == (0, ())


def test_r1_with_observed_confounder():
    g = confounded()
    u, w, x, y = 0, 1, 2, 3
    p, mx, my = oracle_and_blankets(g, x, y)
    assert check_r1(p, x, y, mx, my) == (w, (u,))


def test_r1_silent_without_edge():
    g = g_of(["W", "X", "Y"], [("W", "X")])
    p, mx, my = oracle_and_blankets(g, 1, 2)
    assert check_r1(p, 1, 2, mx, my) is None


# rule R2


def test_r2_separating_set_through_confounder():
    g = g_of(["U", "X", "Y"], [("U", "X"), ("U", "Y")])
    p, mx, my = oracle_and_blankets(g, 1, 2)
    assert check_r2(p, 1, 2, mx, my) == (None, (0,))


def test_r2_marginal_independence():
    g = g_of(["X", "Y", "A"], [("A", "Y")])
    p, mx, my = oracle_and_blankets(g, 0, 1)
    assert check_r2(p, 0, 1, mx, my) == (None, ())


def test_r2_witness_with_latent_confounding():
    g = g_of(["W", "L", "X", "Y"], [("W", "X"), ("L", "X"), ("L", "Y")], ["W", "X", "Y"])
    w, x, y = 0, 2, 3
    p, mx, my = oracle_and_blankets(g, x, y)
    assert check_r2(p, x, y, mx, my) == (w, ())
    assert not p.independent(w, x) and p.independent(w, y)


# the full search


def test_identified_with_instrument():
    g = confounded()
    out = run_lsas(GraphOracle(g), 2, 3)
    assert out.status is Status.IDENTIFIED and out.edge
    assert out.adjustment_set == (0,) and out.witness == 1
    assert is_backdoor_adjustment_set(g, 2, 3, out.adjustment_set)
    assert out.tests_used > 0


def test_no_effect():
    g = g_of(["U", "W", "X", "Y"], [("U", "X"), ("U", "Y"), ("W", "X")])
    out = run_lsas(GraphOracle(g), 2, 3)
    assert out.status is Status.NO_EFFECT and out.edge is False


def test_undecidable_when_only_latent_confounding():
    g = g_of(["L", "X", "Y"], [("L", "X"), ("L", "Y"), ("X", "Y")], ["X", "Y"])
    out = run_lsas(GraphOracle(g), 1, 2)
    assert out.status is Status.UNDECIDABLE
    assert out.edge is None and not out.decided
    assert out.to_record(g.labels)["status"] == "undecidable"


def test_identical_treatment_and_outcome():
    with pytest.raises(ValueError):
        run_lsas(GraphOracle(confounded()), 2, 2)


def test_decisions_survive_acyclification():
    for scm in pretreatment_scms(200, seed=21):
        g, x, y = scm.graph, scm.treatment, scm.outcome
        a = run_lsas(GraphOracle(g), x, y)
        b = run_lsas(GraphOracle(acyclify(g)), x, y)
        assert a.status == b.status
        if a.status is Status.IDENTIFIED:
            assert is_backdoor_adjustment_set(g, x, y, b.adjustment_set)


@pytest.mark.parametrize("alg", ["tc", "fast-iamb", "iamb", "hiton"])
def test_oracle_soundness_for_every_blanket_algorithm(alg):
    for scm in pretreatment_scms(120, seed=22):
        g, x, y = scm.graph, scm.treatment, scm.outcome
        out = run_lsas(GraphOracle(g), x, y, alg)
        if out.status is Status.IDENTIFIED:
            assert g.has_edge(x, y) and is_backdoor_adjustment_set(g, x, y, out.adjustment_set)
        elif out.status is Status.NO_EFFECT:
            assert not g.has_edge(x, y)


def test_subset_cap():
    assert list(subsets([3, 1, 2], 1)) == [(), (1,), (2,), (3,)]
    assert len(list(subsets(range(4)))) == 16
    assert default_max_z(12) is None and default_max_z(13) == 10
    g = confounded()
    assert run_lsas(GraphOracle(g), 2, 3, max_z=0).status is not Status.IDENTIFIED


# estimation


def test_estimate_unconfounded():
    rng = np.random.default_rng(0)
    x = rng.normal(size=100_000)
    y = 0.7 * x + rng.normal(size=100_000)
    assert estimate_effect(np.column_stack([x, y]), 0, 1) == pytest.approx(0.7, abs=0.02)


def test_estimate_with_valid_set_converges_to_truth():
    scm = generate_scm(GenConfig(6, 9, 0, False, "linear", "gaussian", True, seed=3))
    g = scm.graph
    z = [v for v in range(g.node_count) if v not in (scm.treatment, scm.outcome)]
    assert is_backdoor_adjustment_set(g, scm.treatment, scm.outcome, z)
    d = sample(scm, 100_000, seed=1)
    est = estimate_effect(d, "X", "Y", [g.labels[v] for v in z])
    assert est == pytest.approx(true_causal_effect(scm), abs=0.02)


def test_degenerate_regressions():
    x = np.random.default_rng(0).normal(size=(50, 1))
    with pytest.raises(EstimationError):
        estimate_effect(np.column_stack([x, x]), 0, 1)
    with pytest.raises(EstimationError, match="rank"):
        estimate_effect(np.column_stack([x, x, np.random.default_rng(1).normal(size=(50, 1))]), 0, 2, [1])
    with pytest.raises(EstimationError, match="samples"):
        estimate_effect(np.ones((3, 3)), 0, 1, [2])


# estimator interface


def confounded_frame(n=20_000, seed=0):
    rng = np.random.default_rng(seed)
    u, w = rng.normal(size=n), rng.normal(size=n)
    x = 0.8 * u + 0.7 * w + rng.normal(size=n)
    y = 0.5 * x + 0.6 * u + rng.normal(size=n)
    return pd.DataFrame({"U": u, "W": w, "X": x, "Y": y})


def test_estimator_on_dataframe():
    est = LocalAdjustmentSearch(treatment="X", outcome="Y").fit(confounded_frame())
    assert est.status_ == "identified" and est.identified_
    assert est.adjustment_set_ == ["U"] and est.witness_ == "W"
    assert est.effect_ == pytest.approx(0.5, abs=0.03)
    assert list(est.feature_names_in_) == ["U", "W", "X", "Y"]


def test_estimator_on_array_and_clone():
    est = LocalAdjustmentSearch(treatment=2, outcome=3, estimate=False)
    fitted = est.fit(confounded_frame().to_numpy())
    assert fitted.effect_ is None and fitted.adjustment_set_ == [0]
    assert clone(est).get_params() == est.get_params()


def test_estimator_no_effect_reports_zero():
    df = confounded_frame()
    df["Y"] = 0.6 * df["U"] + np.random.default_rng(3).normal(size=len(df))
    est = LocalAdjustmentSearch(treatment="X", outcome="Y").fit(df)
    assert est.status_ == "no_effect" and est.effect_ == 0.0 and est.adjustment_set_ is None


def test_estimator_bad_columns():
    with pytest.raises(ValueError):
        LocalAdjustmentSearch(treatment="Q", outcome="Y").fit(confounded_frame(100))
    with pytest.raises(ValueError):
        LocalAdjustmentSearch(treatment=9, outcome=1).fit(confounded_frame(100).to_numpy())
