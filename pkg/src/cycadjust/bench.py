"""Benchmark harness: random SCM grids, LSAS runs, and metric aggregation."""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from .adjustment import enumerate_valid_adjustment_sets, is_backdoor_adjustment_set
from .ci import DEFAULT_ALPHA, FisherZ, GraphOracle
from .lsas import Status, run_lsas
from .scm import GRID_SIZES, ConfigError, Form, GenConfig, NoiseMode, generate_scm, population_adjusted_effect, sample, true_causal_effect

log = logging.getLogger(__name__)

FORMS = [f.value for f in Form]
NOISES = [m.value for m in NoiseMode]


@dataclass
class BenchConfig:
    """Experiment grid. ``repetitions`` graphs are drawn per noise mode and cell."""

    node_sizes: list = field(default_factory=lambda: [8])
    cyclic: list = field(default_factory=lambda: [False, True])
    forms: list = field(default_factory=lambda: list(FORMS))
    noise_modes: list = field(default_factory=lambda: list(NOISES))
    edge_xy: list = field(default_factory=lambda: [True, False])
    sample_sizes: list = field(default_factory=lambda: [1000, 5000, 10000, 15000])
    repetitions: int = 25
    mb_alg: Optional[str] = None  # None: tc up to 50 nodes, fast-iamb above
    alpha: float = DEFAULT_ALPHA
    ci: str = "fisherz"
    max_z: object = "auto"
    precision_max_size: int = 10
    edge_counts: dict = field(default_factory=dict)
    latent_counts: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        self.edge_counts = {int(k): int(v) for k, v in self.edge_counts.items()}
        self.latent_counts = {int(k): int(v) for k, v in self.latent_counts.items()}
        self.validate()

    def validate(self) -> None:
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")
        if self.ci not in ("fisherz", "oracle"):
            raise ConfigError("ci must be 'fisherz' or 'oracle'")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        for f in self.forms:
            Form(f)
        for m in self.noise_modes:
            NoiseMode(m)
        for n in self.node_sizes:
            if n not in GRID_SIZES and (n not in self.edge_counts or n not in self.latent_counts):
                raise ConfigError(f"node size {n} needs edge_counts and latent_counts entries")
        if any(s < 4 for s in self.sample_sizes):
            raise ConfigError("sample sizes must be at least 4")

    @classmethod
    def from_dict(cls, doc: dict) -> "BenchConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown bench config fields: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "BenchConfig":
        doc = yaml.safe_load(Path(path).read_text()) or {}
        if not isinstance(doc, dict):
            raise ConfigError("bench config must be a mapping")
        return cls.from_dict(doc)

    def size(self, n: int) -> tuple:
        edges, latents = GRID_SIZES.get(n, (None, None))
        return self.edge_counts.get(n, edges), self.latent_counts.get(n, latents)

    def mb_for(self, n: int) -> str:
        if self.mb_alg is not None:
            return self.mb_alg
        return "tc" if n <= 50 else "fast-iamb"


@dataclass
class MetricRow:
    n_nodes: int
    cyclic: bool
    form: str
    edge_xy: bool
    n_samples: int
    n_instances: int
    n_failed: int
    n_decided: int
    re_mean: Optional[float]
    re_sd: Optional[float]
    n_re: int
    precision_mean: Optional[float]
    precision_sd: Optional[float]
    n_precision: int
    ef: Optional[float]
    empty_fraction: Optional[float]
    mean_tests: Optional[float]
    wall_time: float = 0.0


#: metrics.csv omits wall_time so that fixed-seed runs are byte-identical
METRIC_COLUMNS = [f.name for f in fields(MetricRow) if f.name != "wall_time"]


def relative_error(est: float, truth: float) -> float:
    """``|est - truth| / |truth|``."""
    if truth == 0:
        raise ValueError("relative error is undefined for a zero true effect")
    return abs(est - truth) / abs(truth)


def precision(returned: Sequence, valid: Sequence) -> Optional[float]:
    """Fraction of returned adjustment sets that are valid; None if nothing was returned."""
    if not returned:
        return None
    valid = {tuple(sorted(z)) for z in valid}
    return sum(tuple(sorted(z)) in valid for z in returned) / len(returned)


def edge_fraction(decisions: Sequence) -> Optional[float]:
    """Agreement rate of ``(true_edge, decided_edge)`` pairs over decided instances."""
    if not decisions:
        return None
    return sum(bool(t) == bool(d) for t, d in decisions) / len(decisions)


def _seed(*parts) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


@dataclass(frozen=True)
class _Task:
    index: int
    n_nodes: int
    n_edges: int
    n_latent: int
    cyclic: bool
    form: str
    noise: str
    edge_xy: bool
    rep: int
    n_samples: int
    graph_seed: int
    data_seed: int
    mb_alg: str
    alpha: float
    ci: str
    max_z: object
    precision_max_size: int


def build_tasks(cfg: BenchConfig) -> list:
    """One task per (graph, sample size), in grid order."""
    tasks = []
    for n in cfg.node_sizes:
        n_edges, n_latent = cfg.size(n)
        for cyc in cfg.cyclic:
            for form in cfg.forms:
                for edge in cfg.edge_xy:
                    for noise in cfg.noise_modes:
                        for rep in range(cfg.repetitions):
                            ids = (cfg.seed, n, int(cyc), FORMS.index(form), int(edge), NOISES.index(noise), rep)
                            gseed = _seed(*ids)
                            for ns in cfg.sample_sizes:
                                tasks.append(
                                    _Task(len(tasks), n, n_edges, n_latent, bool(cyc), form, noise, bool(edge), rep,
                                          ns, gseed, _seed(*ids, ns), cfg.mb_for(n), cfg.alpha, cfg.ci, cfg.max_z,
                                          cfg.precision_max_size)
                                )
    return tasks


def run_instance(task: _Task) -> dict:
    """Generate, sample, search and score one instance. Failures are recorded, not raised."""
    rec = {
        "index": task.index, "n_nodes": task.n_nodes, "cyclic": task.cyclic, "form": task.form,
        "edge_xy": task.edge_xy, "noise": task.noise, "rep": task.rep, "n_samples": task.n_samples,
        "graph_seed": task.graph_seed, "data_seed": task.data_seed,
    }
    t0 = time.perf_counter()
    try:
        cfg = GenConfig(task.n_nodes, task.n_edges, task.n_latent, task.cyclic, task.form, task.noise,
                        task.edge_xy, [task.n_samples], task.graph_seed)
        scm = generate_scm(cfg)
        g = scm.graph
        obs = sorted(g.observed)
        x, y = obs.index(scm.treatment), obs.index(scm.outcome)
        linear = scm.form is Form.LINEAR
        if task.ci == "oracle":
            provider = GraphOracle(g)
            x, y = scm.treatment, scm.outcome
            out = run_lsas(provider, x, y, task.mb_alg, task.max_z)
            to_graph = list(range(g.node_count))
            if out.status is Status.IDENTIFIED and linear:
                # infinite-data surrogate: the OLS limit under the returned set
                out = replace(out, effect=population_adjusted_effect(scm, x, y, out.adjustment_set))
        else:
            data = sample(scm, task.n_samples, task.data_seed)
            provider = FisherZ(data.values, alpha=task.alpha)
            out = run_lsas(provider, x, y, task.mb_alg, task.max_z, data=data.values if linear else None)
            to_graph = obs
        z = None if out.adjustment_set is None else tuple(to_graph[v] for v in out.adjustment_set)
        true_edge = g.has_edge(scm.treatment, scm.outcome)
        truth = true_causal_effect(scm) if linear else None
        rec.update(out.to_record(g.labels if task.ci == "oracle" else [g.labels[v] for v in obs]))
        rec.update(true_edge=true_edge, true_effect=truth, re=None, precision=None,
                   correct=None if not out.decided else (out.edge == true_edge))
        if out.status is Status.IDENTIFIED:
            cap = min(len(g.observed) - 2, task.precision_max_size)
            if len(z) <= cap:
                valid = enumerate_valid_adjustment_sets(g, scm.treatment, scm.outcome, cap)
            else:
                valid = [z] if is_backdoor_adjustment_set(g, scm.treatment, scm.outcome, z) else []
            rec["precision"] = precision([z], valid)
            if linear and out.effect is not None:
                if truth == 0:
                    log.info("instance %d: true effect is zero, excluded from relative error", task.index)
                else:
                    rec["re"] = relative_error(out.effect, truth)
    except Exception as exc:  # noqa: BLE001 - a failed instance must not abort the grid
        log.warning("instance %d failed: %s", task.index, exc)
        rec.update(status="failed", error=f"{type(exc).__name__}: {exc}")
    rec["wall_time"] = time.perf_counter() - t0
    return rec


def _mean_sd(values: list) -> tuple:
    if not values:
        return None, None
    arr = np.asarray(values, dtype=float)
    sd = float(np.std(arr, ddof=1)) if len(arr) > 1 else None
    return float(np.mean(arr)), sd


def aggregate(records: list) -> list:
    """Fold instance records into one :class:`MetricRow` per cell, in first-seen order."""
    cells = {}
    for rec in sorted(records, key=lambda r: r["index"]):
        key = (rec["n_nodes"], rec["cyclic"], rec["form"], rec["edge_xy"], rec["n_samples"])
        cells.setdefault(key, []).append(rec)
    rows = []
    for key, recs in cells.items():
        ok = [r for r in recs if r.get("status") != "failed"]
        decided = [r for r in ok if r["status"] != Status.UNDECIDABLE.value]
        re_mean, re_sd = _mean_sd([r["re"] for r in ok if r.get("re") is not None])
        pr_mean, pr_sd = _mean_sd([r["precision"] for r in ok if r.get("precision") is not None])
        rows.append(MetricRow(
            *key,
            n_instances=len(recs),
            n_failed=len(recs) - len(ok),
            n_decided=len(decided),
            re_mean=re_mean, re_sd=re_sd, n_re=sum(r.get("re") is not None for r in ok),
            precision_mean=pr_mean, precision_sd=pr_sd, n_precision=sum(r.get("precision") is not None for r in ok),
            ef=edge_fraction([(r["true_edge"], r["status"] == Status.IDENTIFIED.value) for r in decided]),
            empty_fraction=(len(ok) - len(decided)) / len(ok) if ok else None,
            mean_tests=float(np.mean([r["tests_used"] for r in ok])) if ok else None,
            wall_time=float(sum(r["wall_time"] for r in recs)),
        ))
    return rows


def run_benchmark(cfg: BenchConfig, jobs: int = 1, return_records: bool = False):
    """Run the whole grid; results are reduced by instance index, independent of completion order."""
    tasks = build_tasks(cfg)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(run_instance, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        records = [run_instance(t) for t in tasks]
    rows = aggregate(records)
    return (rows, records) if return_records else rows


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_metrics_csv(rows: list, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRIC_COLUMNS)
        for row in rows:
            d = asdict(row)
            w.writerow([_fmt(d[c]) for c in METRIC_COLUMNS])


def write_instances_jsonl(records: list, path) -> None:
    with open(path, "w") as fh:
        for rec in sorted(records, key=lambda r: r["index"]):
            fh.write(json.dumps(rec) + "\n")


def plot_series(records: list, metric: str) -> list:
    """Rows ``(n_samples, setting, mean, sd)`` for one metric, pooling edge conditions.

    ``metric`` is one of ``re``, ``precision``, ``ef``, ``empty``.
    """
    groups = {}
    for r in sorted(records, key=lambda r: r["index"]):
        if r.get("status") == "failed":
            continue
        setting = f"{r['n_nodes']}n/{'cyclic' if r['cyclic'] else 'acyclic'}/{r['form']}"
        groups.setdefault((r["n_samples"], setting), []).append(r)
    out = []
    for (ns, setting), recs in groups.items():
        if metric in ("re", "precision"):
            vals = [r[metric] for r in recs if r.get(metric) is not None]
        elif metric == "ef":
            vals = [float(r["correct"]) for r in recs if r.get("correct") is not None]
        elif metric == "empty":
            vals = [float(r["status"] == Status.UNDECIDABLE.value) for r in recs]
        else:
            raise ValueError(f"unknown metric {metric!r}")
        mean, sd = _mean_sd(vals)
        out.append((ns, setting, mean, sd))
    return sorted(out, key=lambda t: (t[1], t[0]))


def write_outputs(rows: list, records: list, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(rows, out / "metrics.csv")
    write_instances_jsonl(records, out / "instances.jsonl")
    with open(out / "timings.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n_nodes", "cyclic", "form", "edge_xy", "n_samples", "wall_time"])
        for row in rows:
            w.writerow([row.n_nodes, row.cyclic, row.form, row.edge_xy, row.n_samples, repr(row.wall_time)])
    for metric in ("re", "precision", "ef", "empty"):
        with open(out / f"plot_{metric}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n_samples", "setting", "mean", "sd"])
            for ns, setting, mean, sd in plot_series(records, metric):
                w.writerow([ns, setting, _fmt(mean), _fmt(sd)])
