"""Random simple SCMs (linear and tanh), observational/interventional sampling,
and closed-form causal effects for the linear case."""

from __future__ import annotations

import enum
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .graph import DirectedGraph, GraphError, dumps_canonical, graph_from_dict, graph_to_dict, scc_of

#: node count -> (edge count, latent count) of the benchmark size grid
GRID_SIZES = {8: (12, 2), 15: (19, 3), 25: (40, 4), 50: (78, 10), 100: (150, 10), 250: (360, 30)}

WEIGHT_RANGE = (0.3, 0.9)
NOISE_SCALE_RANGE = (0.5, 1.0)
DET_TOL = 1e-8
SPECTRAL_TARGET = 0.95
FIXED_POINT_TOL = 1e-10
FIXED_POINT_MAX_ITER = 10_000


class SimulationError(RuntimeError):
    """Raised when an SCM cannot be constructed or solved."""


class ConfigError(ValueError):
    """Raised for an infeasible or malformed generation config."""


class Form(str, enum.Enum):
    LINEAR = "linear"
    TANH = "tanh"


class NoiseMode(str, enum.Enum):
    GAUSSIAN = "gaussian"
    NON_GAUSSIAN = "non-gaussian"
    MIXED = "mixed"


@dataclass(frozen=True)
class NoiseSpec:
    family: str  # "gaussian" or "uniform"
    scale: float  # standard deviation

    def __post_init__(self):
        if self.family not in ("gaussian", "uniform"):
            raise ConfigError(f"unknown noise family {self.family!r}")
        if not self.scale > 0:
            raise ConfigError("noise scale must be positive")

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.family == "gaussian":
            return rng.normal(0.0, self.scale, size=n)
        half = self.scale * np.sqrt(3.0)
        return rng.uniform(-half, half, size=n)


@dataclass(frozen=True, eq=False)
class Scm:
    """Simple SCM ``V := W V + U`` (linear) or ``V := tanh(W V) + U``.

    ``weights[j, i]`` is the coefficient of ``V_i`` in the equation of ``V_j``;
    it is nonzero exactly when ``i -> j`` is an edge of ``graph``.
    """

    graph: DirectedGraph
    weights: np.ndarray
    form: Form
    noise: tuple
    treatment: Optional[int] = None
    outcome: Optional[int] = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "form", Form(self.form))
        object.__setattr__(self, "noise", tuple(self.noise))
        p = self.graph.node_count
        if w.shape != (p, p):
            raise SimulationError(f"weight matrix must be {p}x{p}")
        if len(self.noise) != p:
            raise SimulationError("need one noise spec per node")
        pattern = {(i, j) for j, i in zip(*np.nonzero(w))}
        if pattern != set(self.graph.edges):
            raise SimulationError("weight sparsity pattern does not match the graph edges")
        if self.form is Form.LINEAR:
            if abs(np.linalg.det(np.eye(p) - w)) <= DET_TOL:
                raise SimulationError("I - W is (numerically) singular")
        elif np.linalg.norm(w, 2) >= 1.0:
            raise SimulationError("tanh SCM needs spectral norm ||W||_2 < 1")

    @property
    def scales(self) -> np.ndarray:
        return np.array([s.scale for s in self.noise])

    def __eq__(self, other):
        if not isinstance(other, Scm):
            return NotImplemented
        return (
            self.graph == other.graph
            and np.array_equal(self.weights, other.weights)
            and self.form == other.form
            and self.noise == other.noise
            and (self.treatment, self.outcome) == (other.treatment, other.outcome)
        )

    __hash__ = None


@dataclass
class GenConfig:
    """Parameters of one random SCM draw."""

    node_count: int
    edge_count: int
    latent_count: int = 0
    cyclic: bool = False
    form: Form = Form.LINEAR
    noise_mode: NoiseMode = NoiseMode.GAUSSIAN
    edge_xy: bool = True
    sample_sizes: Sequence[int] = field(default_factory=lambda: [1000])
    seed: int = 0

    def __post_init__(self):
        self.form = Form(self.form)
        self.noise_mode = NoiseMode(self.noise_mode)

    @classmethod
    def grid(cls, node_count: int, **kwargs) -> "GenConfig":
        """Config with the edge and latent counts of the benchmark size grid."""
        if node_count not in GRID_SIZES:
            raise ConfigError(f"no grid entry for {node_count} nodes; known sizes {sorted(GRID_SIZES)}")
        edges, latents = GRID_SIZES[node_count]
        return cls(node_count=node_count, edge_count=edges, latent_count=latents, **kwargs)

    def validate(self) -> None:
        if self.node_count < 2:
            raise ConfigError("need at least treatment and outcome nodes")
        if not 0 <= self.latent_count <= self.node_count - 2:
            raise ConfigError("latent_count must lie in [0, node_count - 2]; treatment and outcome stay observed")
        if self.edge_count < 0:
            raise ConfigError("edge_count must be non-negative")
        k = self.node_count - 2
        if self.cyclic and k < 2:
            raise ConfigError("a cyclic graph needs at least two covariates")
        required = (2 if self.cyclic else 0) + int(self.edge_xy)
        if self.edge_count < required:
            raise ConfigError(f"edge_count={self.edge_count} cannot hold the required {required} edges")
        capacity = k * (k - 1) // 2 + 2 * k + int(self.edge_xy)
        if self.edge_count > capacity:
            raise ConfigError(f"edge_count={self.edge_count} exceeds the {capacity} admissible edges")


def _noise_specs(rng: np.random.Generator, p: int, mode: NoiseMode) -> tuple:
    scales = rng.uniform(*NOISE_SCALE_RANGE, size=p)
    if mode is NoiseMode.GAUSSIAN:
        fams = ["gaussian"] * p
    elif mode is NoiseMode.NON_GAUSSIAN:
        fams = ["uniform"] * p
    else:
        fams = ["gaussian" if b else "uniform" for b in rng.random(p) < 0.5]
    return tuple(NoiseSpec(f, float(s)) for f, s in zip(fams, scales))


def _draw_weights(rng: np.random.Generator, p: int, edges: list) -> np.ndarray:
    w = np.zeros((p, p))
    mags = rng.uniform(*WEIGHT_RANGE, size=len(edges))
    signs = rng.choice([-1.0, 1.0], size=len(edges))
    for (i, j), m, s in zip(edges, mags, signs):
        w[j, i] = m * s
    return w


def generate_scm(cfg: GenConfig) -> Scm:
    """Draw a random simple SCM in pre-treatment shape.

    Covariates are ``V1..Vk``; the last two nodes are treatment ``X`` and
    outcome ``Y``. ``X`` has no children except possibly ``Y`` and ``Y`` is a
    sink. With ``cfg.cyclic`` a directed ring over 2-4 covariates guarantees a
    non-trivial strongly connected component.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    p = cfg.node_count
    k = p - 2
    x, y = k, k + 1
    labels = tuple(f"V{i + 1}" for i in range(k)) + ("X", "Y")

    required = []
    if cfg.cyclic:
        r = int(rng.integers(2, min(4, k) + 1))
        ring = [int(v) for v in rng.choice(k, size=r, replace=False)]
        required += [(ring[t], ring[(t + 1) % r]) for t in range(r)]
    if cfg.edge_xy:
        required.append((x, y))
    if cfg.edge_count < len(required):
        raise ConfigError(f"edge_count={cfg.edge_count} too small for a ring of {len(required) - cfg.edge_xy} edges")

    # the same ordered candidate pool in both modes, so a cyclic graph is a DAG plus its ring
    order = rng.permutation(k)
    cov_pairs = [(int(order[a]), int(order[b])) for a in range(k) for b in range(a + 1, k)]
    candidates = sorted(set(cov_pairs + [(i, x) for i in range(k)] + [(i, y) for i in range(k)]) - set(required))
    extra = cfg.edge_count - len(required)
    if extra > len(candidates):
        raise ConfigError(f"edge_count={cfg.edge_count} exceeds the admissible edges for this shape")
    picked = rng.choice(len(candidates), size=extra, replace=False) if extra else []
    edges = sorted(required + [candidates[int(t)] for t in picked])

    latent = {int(v) for v in rng.choice(k, size=cfg.latent_count, replace=False)} if cfg.latent_count else set()
    graph = DirectedGraph(labels, frozenset(edges), frozenset(set(range(p)) - latent))
    noise = _noise_specs(rng, p, cfg.noise_mode)

    eye = np.eye(p)
    w = _draw_weights(rng, p, edges)
    if cfg.form is Form.LINEAR:
        attempts = 1
        while abs(np.linalg.det(eye - w)) <= DET_TOL and attempts < 100:
            w = _draw_weights(rng, p, edges)
            attempts += 1
        while abs(np.linalg.det(eye - w)) <= DET_TOL:
            w = 0.9 * w
    else:
        norm = np.linalg.norm(w, 2)
        if norm >= 1.0:
            w = w / (norm / SPECTRAL_TARGET)
    return Scm(graph, w, cfg.form, noise, treatment=x, outcome=y)


# --- sampling ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Dataset:
    """Samples over observed variables; ``values`` is ``n x len(columns)``."""

    columns: tuple
    values: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "columns", tuple(self.columns))
        if values.ndim != 2 or values.shape[1] != len(self.columns):
            raise ValueError("value matrix must be 2-D with one column per label")
        if not np.all(np.isfinite(values)):
            raise ValueError("dataset contains non-finite entries")
        object.__setattr__(self, "values", values)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    def column(self, label: str) -> np.ndarray:
        return self.values[:, self.columns.index(label)]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        np.savetxt(buf, self.values, fmt="%.17g", delimiter=",", header=",".join(self.columns), comments="")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def read_csv(cls, path) -> "Dataset":
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            values = np.loadtxt(fh, delimiter=",", ndmin=2)
        return cls(tuple(header), values)


def _noise_matrix(scm: Scm, n: int, rng: np.random.Generator) -> np.ndarray:
    return np.column_stack([spec.draw(rng, n) for spec in scm.noise])


def _tanh_fixed_point(w: np.ndarray, offset: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Solve ``V = tanh(V W^T + offset) + U`` row-wise by fixed-point iteration.

    Returns the last iterate whose update was below tolerance, i.e. a point with
    residual ``max|V - tanh(V W^T + offset) - U| < FIXED_POINT_TOL``.
    """
    v = u.copy()
    for _ in range(FIXED_POINT_MAX_ITER):
        nxt = np.tanh(v @ w.T + offset) + u
        if np.max(np.abs(nxt - v), initial=0.0) < FIXED_POINT_TOL:
            return v
        v = nxt
    raise SimulationError(f"tanh fixed-point iteration did not converge in {FIXED_POINT_MAX_ITER} steps")


def solve_structural(scm: Scm, u: np.ndarray) -> np.ndarray:
    """All endogenous values for exogenous draws ``u`` (one row per sample)."""
    w = scm.weights
    p = w.shape[0]
    if scm.form is Form.LINEAR:
        return np.linalg.solve(np.eye(p) - w, u.T).T
    return _tanh_fixed_point(w, 0.0, u)


def _observed_dataset(scm: Scm, v: np.ndarray, seed) -> Dataset:
    obs = sorted(scm.graph.observed)
    return Dataset(tuple(scm.graph.labels[i] for i in obs), v[:, obs], seed)


def sample(scm: Scm, n: int, seed: int = 0, include_latent: bool = False) -> Dataset:
    """Draw ``n`` observational samples; only observed columns unless ``include_latent``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    v = solve_structural(scm, _noise_matrix(scm, n, rng))
    if include_latent:
        return Dataset(scm.graph.labels, v, seed)
    return _observed_dataset(scm, v, seed)


def sample_interventional(scm: Scm, x: int, value: float, n: int, seed: int = 0, include_latent: bool = False) -> Dataset:
    """Samples under ``do(x = value)``: the equation of ``x`` is replaced by the constant."""
    x = scm.graph.check_node(x)
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    u = _noise_matrix(scm, n, rng)
    p = scm.graph.node_count
    keep = [i for i in range(p) if i != x]
    w_kk = scm.weights[np.ix_(keep, keep)]
    w_kx = scm.weights[keep, x]
    v = np.empty((n, p))
    v[:, x] = value
    if scm.form is Form.LINEAR:
        v[:, keep] = np.linalg.solve(np.eye(p - 1) - w_kk, (value * w_kx[None, :] + u[:, keep]).T).T
    else:
        v[:, keep] = _tanh_fixed_point(w_kk, value * w_kx[None, :], u[:, keep])
    if include_latent:
        return Dataset(scm.graph.labels, v, seed)
    return _observed_dataset(scm, v, seed)


def true_causal_effect(scm: Scm, x: Optional[int] = None, y: Optional[int] = None) -> float:
    """Total effect ``d E[Y | do(X=x)] / dx`` of a linear SCM: ``[(I - W_KK)^{-1} W_KX]_y``."""
    if scm.form is not Form.LINEAR:
        raise SimulationError("a scalar causal effect exists only for linear SCMs")
    x = scm.treatment if x is None else scm.graph.check_node(x)
    y = scm.outcome if y is None else scm.graph.check_node(y)
    if x is None or y is None or x == y:
        raise SimulationError("need distinct treatment and outcome nodes")
    p = scm.graph.node_count
    keep = [i for i in range(p) if i != x]
    w_kk = scm.weights[np.ix_(keep, keep)]
    effect = np.linalg.solve(np.eye(p - 1) - w_kk, scm.weights[keep, x])
    return float(effect[keep.index(y)])


def implied_covariance(scm: Scm) -> np.ndarray:
    """Population covariance ``(I-W)^{-1} diag(s^2) (I-W)^{-T}`` of a linear SCM."""
    if scm.form is not Form.LINEAR:
        raise SimulationError("closed-form covariance exists only for linear SCMs")
    p = scm.graph.node_count
    a = np.linalg.inv(np.eye(p) - scm.weights)
    return a @ np.diag(scm.scales**2) @ a.T


def population_adjusted_effect(scm: Scm, x: int, y: int, z: Sequence[int]) -> float:
    """Coefficient of ``x`` in the population regression of ``y`` on ``[x, z]``.

    This is what least squares converges to with unlimited data.
    """
    cov = implied_covariance(scm)
    design = [x] + list(z)
    beta = np.linalg.solve(cov[np.ix_(design, design)], cov[design, y])
    return float(beta[0])


def cyclic_components(scm: Scm) -> list:
    """Strongly connected components with more than one node."""
    seen, out = set(), []
    for v in range(scm.graph.node_count):
        if v not in seen:
            c = scc_of(scm.graph, v)
            seen.update(c)
            if len(c) > 1:
                out.append(c)
    return out


# --- file formats ------------------------------------------------------------


def scm_to_dict(scm: Scm) -> dict:
    doc = graph_to_dict(scm.graph, scm.treatment, scm.outcome)
    doc["form"] = scm.form.value
    doc["weights"] = [[float(v) for v in row] for row in scm.weights]
    doc["noise"] = [{"family": s.family, "scale": s.scale} for s in scm.noise]
    return doc


def scm_from_dict(doc: dict) -> Scm:
    gdoc = graph_from_dict(doc)
    g = gdoc.graph
    try:
        noise = [NoiseSpec(d["family"], float(d["scale"])) for d in doc["noise"]]
        weights = np.array(doc["weights"], dtype=float)
    except KeyError as exc:
        raise GraphError(f"scm document is missing field {exc.args[0]!r}") from None
    x = None if gdoc.treatment is None else g.index(gdoc.treatment)
    y = None if gdoc.outcome is None else g.index(gdoc.outcome)
    return Scm(g, weights, Form(doc.get("form", "linear")), noise, x, y)


def save_scm(path, scm: Scm) -> None:
    Path(path).write_text(dumps_canonical(scm_to_dict(scm)))


def load_scm(path) -> Scm:
    return scm_from_dict(json.loads(Path(path).read_text()))
