"""Acceptance gate. Each test prints one PASS/FAIL line; the summary repeats them."""

import itertools
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from corpora import pretreatment_scms, separation_corpus
from cycadjust.adjustment import intervention_node_check, is_backdoor_adjustment_set
from cycadjust.bench import BenchConfig, run_benchmark
from cycadjust.ci import FisherZ, GraphOracle
from cycadjust.graph import descendants, is_acyclic, random_directed_graph
from cycadjust.lsas import Status, run_lsas
from cycadjust.mb import MbAlgorithm, discover_mb
from cycadjust.scm import NoiseSpec, Scm, sample_interventional, solve_structural, true_causal_effect
from cycadjust.separation import acyclify, acyclify_preserving, is_separated, markov_blanket


def report(name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append((ok, line))
    assert ok, line


@pytest.fixture(scope="module")
def corpus():
    return separation_corpus()


def test_sigma_equals_d_after_acyclification(corpus):
    t0 = time.perf_counter()
    assert sum(not is_acyclic(g) for g in corpus) >= len(corpus) / 2
    queries = mismatches = 0
    for g in corpus:
        acy = acyclify(g)
        n = g.node_count
        for a, b in itertools.combinations(range(n), 2):
            rest = [v for v in range(n) if v not in (a, b)]
            for k in range(len(rest) + 1):
                for s in itertools.combinations(rest, k):
                    queries += 1
                    mismatches += is_separated(g, "sigma", a, b, s) != is_separated(acy, "d", a, b, s)
    dt = time.perf_counter() - t0
    report("sigma-separation in G equals d-separation in its acyclification",
           mismatches == 0 and dt < 120, f"{queries} queries on {len(corpus)} graphs, {mismatches} mismatches, {dt:.1f}s")


def test_markov_blanket_preserved_by_acyclification(corpus):
    checked = bad = 0
    for g in corpus:
        acy = acyclify(g)
        for x in sorted(g.observed):
            checked += 1
            bad += markov_blanket(g, x, "sigma") != markov_blanket(acy, x, "d")
    report("sigma Markov blanket in G equals d Markov blanket in the acyclification",
           bad == 0, f"{checked} blankets, {bad} mismatches")


def test_preserving_acyclification():
    scms = pretreatment_scms(200, seed=11)
    bad = []
    for scm in scms:
        g, x, y = scm.graph, scm.treatment, scm.outcome
        out = acyclify_preserving(g, x, y)
        ok = is_acyclic(out) and not out.child_lists[y] and out.has_edge(x, y) == g.has_edge(x, y)
        if not ok:
            bad.append(g)
    n_cyc = sum(not is_acyclic(s.graph) for s in scms)
    report("pre-treatment acyclification is acyclic, keeps Y a sink and keeps X->Y status",
           not bad, f"{len(scms)} graphs ({n_cyc} cyclic), {len(bad)} violations")


def test_backdoor_equals_intervention_node_check():
    rng = np.random.default_rng(404)
    scms = pretreatment_scms(500, seed=12)
    agree = total = 0
    while total < 10_000:
        scm = scms[total % len(scms)]
        g, x, y = scm.graph, scm.treatment, scm.outcome
        pool = [v for v in range(g.node_count) if v not in (x, y)]
        z = [v for v in pool if rng.random() < 0.4]
        total += 1
        agree += is_backdoor_adjustment_set(g, x, y, z) == intervention_node_check(g, x, y, z)
    report("backdoor criterion equals the intervention-node separation check",
           agree == total, f"{agree}/{total} agree")


def test_oracle_lsas_is_sound():
    t0 = time.perf_counter()
    scms = pretreatment_scms(500, seed=13)
    counts = {s: 0 for s in Status}
    violations = []
    for k, scm in enumerate(scms):
        g, x, y = scm.graph, scm.treatment, scm.outcome
        out = run_lsas(GraphOracle(g), x, y, "tc")
        counts[out.status] += 1
        edge = g.has_edge(x, y)
        if out.status is Status.IDENTIFIED:
            if not edge or not is_backdoor_adjustment_set(g, x, y, out.adjustment_set):
                violations.append(k)
        elif out.status is Status.NO_EFFECT and edge:
            violations.append(k)
    decided = counts[Status.IDENTIFIED] + counts[Status.NO_EFFECT]
    ef = (decided - len(violations)) / decided if decided else float("nan")
    dt = time.perf_counter() - t0
    n_cyc = sum(not is_acyclic(s.graph) for s in scms)
    n_lat = sum(bool(s.graph.latent) for s in scms)
    report("oracle local search: identified sets are valid, decisions match the true edge",
           not violations and ef == 1.0 and dt < 600,
           f"{len(scms)} graphs ({n_cyc} cyclic, {n_lat} with latents), "
           f"{ {s.value: c for s, c in counts.items()} }, edge fraction {ef:.3f}, {dt:.1f}s")


def test_mb_algorithms_exact_under_oracle(corpus):
    bad = {a.value: 0 for a in MbAlgorithm}
    checked = 0
    for g in corpus:
        oracle = GraphOracle(g)
        for x in sorted(g.observed):
            truth = markov_blanket(g, x)
            checked += 1
            for alg in MbAlgorithm:
                bad[alg.value] += discover_mb(alg, oracle, x) != truth
    report("all Markov blanket algorithms recover the sigma blanket from oracle CI",
           not any(bad.values()), f"{checked} targets x 4 algorithms, mismatches {bad}")


def _random_cyclic_scm(rng, form):
    while True:
        n = int(rng.integers(3, 7))
        g = random_directed_graph(rng, n, edge_prob=0.45)
        if is_acyclic(g):
            continue
        x = int(rng.integers(n))
        reach = descendants(g, x)
        ys = [v for v in reach if v != x]
        if not ys:
            continue
        y = int(rng.choice(ys))
        w = np.zeros((n, n))
        for i, j in g.edges:
            w[j, i] = rng.uniform(0.3, 0.9) * rng.choice([-1.0, 1.0])
        if form == "tanh":
            w *= 0.95 / max(np.linalg.norm(w, 2), 0.95)
        elif abs(np.linalg.det(np.eye(n) - w)) < 1e-3:
            continue
        noise = [NoiseSpec("gaussian", float(rng.uniform(0.5, 1.0))) for _ in range(n)]
        return Scm(g, w, form, noise, x, y)


def test_causal_effect_formula_and_tanh_residual():
    t0 = time.perf_counter()
    rng = np.random.default_rng(77)
    close = 0
    worst = []
    for k in range(50):
        scm = _random_cyclic_scm(rng, "linear")
        x0, h, n = 0.0, 0.5, 100_000
        y_label = scm.graph.labels[scm.outcome]
        lo = sample_interventional(scm, scm.treatment, x0, n, seed=k).column(y_label).mean()
        hi = sample_interventional(scm, scm.treatment, x0 + h, n, seed=k).column(y_label).mean()
        mc = (hi - lo) / h
        ce = true_causal_effect(scm)
        rel = abs(mc - ce) / abs(ce) if ce != 0 else abs(mc)
        close += rel <= 0.02
        worst.append(rel)
    residual = 0.0
    for k in range(50):
        scm = _random_cyclic_scm(rng, "tanh")
        u = rng.normal(size=(2000, scm.graph.node_count))
        v = solve_structural(scm, u)
        residual = max(residual, float(np.max(np.abs(v - np.tanh(v @ scm.weights.T) - u))))
    dt = time.perf_counter() - t0
    report("closed-form causal effect matches interventional simulation; tanh fixed points converge",
           close >= 48 and residual < 1e-10 and dt < 300,
           f"{close}/50 within 2% (worst rel err {max(worst):.2e}), max tanh residual {residual:.1e}, {dt:.1f}s")


def test_finite_sample_benchmark_8_nodes():
    t0 = time.perf_counter()
    cfg = BenchConfig(node_sizes=[8], cyclic=[False, True], forms=["linear"], noise_modes=["mixed"],
                      edge_xy=[True, False], sample_sizes=[1000, 5000, 10000, 15000], repetitions=25,
                      mb_alg="tc", alpha=0.01, ci="fisherz", seed=2024)
    rows, records = run_benchmark(cfg, return_records=True)
    ok_recs = [r for r in records if r.get("status") != "failed"]

    def re_mean(cyc, n):
        vals = [r["re"] for r in ok_recs if r["cyclic"] == cyc and r["edge_xy"] and r["n_samples"] == n
                and r.get("re") is not None]
        return float(np.mean(vals)) if vals else float("nan")

    def pooled(cyc, n):
        recs = [r for r in ok_recs if r["cyclic"] == cyc and r["n_samples"] == n]
        decided = [r for r in recs if r["status"] != Status.UNDECIDABLE.value]
        ef = np.mean([r["correct"] for r in decided]) if decided else float("nan")
        return float(ef), (len(recs) - len(decided)) / len(recs)

    re_ok = {c: re_mean(c, 15000) < re_mean(c, 1000) for c in (False, True)}
    ef15, _ = pooled(True, 15000)
    empties = {n: pooled(True, n)[1] for n in cfg.sample_sizes}
    dt = time.perf_counter() - t0
    failed = len(records) - len(ok_recs)
    ok = all(re_ok.values()) and ef15 >= 0.75 and max(empties.values()) <= 0.35 and dt < 1800
    detail = (f"RE 1k->15k acyclic {re_mean(False, 1000):.3f}->{re_mean(False, 15000):.3f}, "
              f"cyclic {re_mean(True, 1000):.3f}->{re_mean(True, 15000):.3f}; cyclic EF@15k {ef15:.3f}; "
              f"cyclic empty fraction {', '.join(f'{n}:{e:.2f}' for n, e in empties.items())}; "
              f"{failed} failed instances; {dt:.0f}s")
    report("8-node finite-sample benchmark: RE falls with n, cyclic EF and empty fraction", ok, detail)


def test_fisher_z_type_one_error():
    rng = np.random.default_rng(99)
    rejections = 0
    trials = 2000
    for t in range(trials):
        n = 5000
        z = rng.normal(size=(n, 2))
        a = z @ rng.normal(size=2) + rng.normal(size=n)
        b = z @ rng.normal(size=2) + rng.normal(size=n)
        data = np.column_stack([a, b, z])
        cond = (2, 3) if t % 2 else ()
        if not cond:
            data[:, 1] = rng.normal(size=n)
        rejections += not FisherZ(data, alpha=0.01).independent(0, 1, cond)
    rate = rejections / trials
    report("Fisher-Z type-I error at alpha=0.01", 0.005 <= rate <= 0.02, f"{rejections}/{trials} = {rate:.4f}")


def test_bench_cli_is_deterministic(tmp_path):
    cfg = tmp_path / "bench.yaml"
    cfg.write_text("node_sizes: [8]\nrepetitions: 3\nsample_sizes: [1000, 5000]\nseed: 31\n")
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        res = subprocess.run([sys.executable, "-m", "cycadjust.cli", "bench", str(cfg), "--out", str(out),
                              "--seed", "31", "--jobs", str(k + 1)], capture_output=True, text=True)
        assert res.returncode == 0, res.stderr
        outs.append((out / "metrics.csv").read_bytes())
    report("repeated bench runs with a fixed seed give byte-identical metrics.csv",
           outs[0] == outs[1], f"{len(outs[0])} bytes, identical={outs[0] == outs[1]}")
