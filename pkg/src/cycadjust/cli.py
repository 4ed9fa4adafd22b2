"""Command-line entry point: ``cycadjust <subcommand> ...``.

Results go to stdout (JSON) or to the requested files; diagnostics go to stderr.
Exit status is 0 on success, 2 for bad input or configuration and 3 when a
run fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from . import bench
from .adjustment import is_backdoor_adjustment_set
from .ci import DEFAULT_ALPHA, CIError, FisherZ, GraphOracle
from .graph import GraphError, dumps_canonical, graph_to_dict, load_graph
from .lsas import EstimationError, Status, run_lsas
from .mb import MbAlgorithm, discover_mb
from .scm import ConfigError, Dataset, GenConfig, SimulationError, generate_scm, load_scm, sample, sample_interventional, save_scm

log = logging.getLogger("cycadjust")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
MB_SIZE_SWITCH = 50


class UsageError(Exception):
    pass


def default_mb(n_vars: int) -> str:
    return MbAlgorithm.TC.value if n_vars <= MB_SIZE_SWITCH else MbAlgorithm.FAST_IAMB.value


def _max_z(text):
    if text in (None, "auto"):
        return "auto"
    if text == "none":
        return None
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected an integer, 'auto' or 'none'") from None
    if value < 0:
        raise argparse.ArgumentTypeError("--max-z must be non-negative")
    return value


def _alpha(text):
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return value


def _add_ci_options(p):
    p.add_argument("--ci", choices=["oracle", "fisherz"], default="fisherz")
    p.add_argument("--alpha", type=_alpha, default=DEFAULT_ALPHA)
    p.add_argument("--mb", choices=[a.value for a in MbAlgorithm], default=None,
                   help="Markov blanket algorithm (default: tc up to 50 variables, fast-iamb above)")
    p.add_argument("--graph", type=Path, help="graph or SCM file (required with --ci oracle)")
    p.add_argument("--data", type=Path, help="dataset CSV (required with --ci fisherz)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cycadjust", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a random SCM and write it as JSON")
    g.add_argument("--nodes", type=int, default=8)
    g.add_argument("--edges", type=int, help="edge count (default: size grid entry)")
    g.add_argument("--latents", type=int, help="latent count (default: size grid entry)")
    g.add_argument("--cyclic", action="store_true")
    g.add_argument("--form", choices=["linear", "tanh"], default="linear")
    g.add_argument("--noise", choices=["gaussian", "non-gaussian", "mixed"], default="gaussian")
    g.add_argument("--no-edge", action="store_true", help="omit the treatment -> outcome edge")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=Path, required=True, help="SCM file to write")
    g.add_argument("--graph-out", type=Path, help="also write the bare graph file")

    s = sub.add_parser("sample", help="sample observed columns of an SCM to CSV")
    s.add_argument("scm", type=Path)
    s.add_argument("-n", "--n-samples", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--do", type=float, metavar="VALUE", help="intervene on the treatment at VALUE")
    s.add_argument("--out", type=Path, required=True)

    m = sub.add_parser("discover-mb", help="Markov blanket of one variable")
    m.add_argument("--target", required=True, help="variable label")
    _add_ci_options(m)

    e = sub.add_parser("estimate", help="local adjustment-set search and effect estimate")
    e.add_argument("--treatment", help="label (default: from the graph file)")
    e.add_argument("--outcome", help="label (default: from the graph file)")
    e.add_argument("--max-z", type=_max_z, default="auto")
    _add_ci_options(e)

    o = sub.add_parser("oracle", help="local search with exact CI answers read off a graph")
    o.add_argument("graph_file", type=Path)
    o.add_argument("--treatment")
    o.add_argument("--outcome")
    o.add_argument("--mb", choices=[a.value for a in MbAlgorithm], default=None)
    o.add_argument("--max-z", type=_max_z, default="auto")

    b = sub.add_parser("bench", help="run a benchmark grid from a YAML/JSON config")
    b.add_argument("config", type=Path)
    b.add_argument("--out", type=Path, default=Path("bench_out"))
    b.add_argument("--ci", choices=["oracle", "fisherz"])
    b.add_argument("--alpha", type=_alpha)
    b.add_argument("--mb", choices=[a.value for a in MbAlgorithm])
    b.add_argument("--max-z", type=_max_z)
    b.add_argument("--seed", type=int)
    b.add_argument("--jobs", type=int, default=1)
    return parser


def _load_scm(path: Path):
    try:
        return load_scm(path)
    except SimulationError as exc:
        raise UsageError(f"invalid SCM file {path}: {exc}") from None


def _load_graph_any(path: Path):
    """Graph document from a graph or SCM file; returns (graph, treatment, outcome) labels."""
    doc = json.loads(path.read_text())
    gdoc = load_graph(path) if "weights" not in doc else None
    if gdoc is None:
        scm = _load_scm(path)
        lab = scm.graph.labels
        return scm.graph, lab[scm.treatment] if scm.treatment is not None else None, (
            lab[scm.outcome] if scm.outcome is not None else None)
    return gdoc.graph, gdoc.treatment, gdoc.outcome


def _provider(args):
    """CI provider plus the label list its integer variables refer to."""
    if args.ci == "oracle":
        if args.graph is None:
            raise UsageError("--ci oracle needs --graph")
        g, t, o = _load_graph_any(args.graph)
        return GraphOracle(g), list(g.labels), g, (t, o), None
    if args.data is None:
        raise UsageError("--ci fisherz needs --data")
    data = Dataset.read_csv(args.data)
    roles = (None, None)
    g = None
    if args.graph is not None:
        g, *roles = _load_graph_any(args.graph)
    return FisherZ(data.values, alpha=args.alpha), list(data.columns), g, tuple(roles), data


def _lookup(labels, name, what):
    if name is None:
        raise UsageError(f"no {what} given and none stored in the graph file")
    if name not in labels:
        raise UsageError(f"{what} {name!r} is not a variable")
    return labels.index(name)


def _emit(obj):
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def cmd_generate(args):
    if args.nodes in bench.GRID_SIZES and (args.edges is None or args.latents is None):
        edges, latents = bench.GRID_SIZES[args.nodes]
    elif args.edges is None or args.latents is None:
        raise UsageError(f"--edges and --latents are required for {args.nodes} nodes")
    edges = args.edges if args.edges is not None else edges
    latents = args.latents if args.latents is not None else latents
    cfg = GenConfig(args.nodes, edges, latents, args.cyclic, args.form, args.noise, not args.no_edge, seed=args.seed)
    scm = generate_scm(cfg)
    save_scm(args.out, scm)
    if args.graph_out is not None:
        args.graph_out.write_text(dumps_canonical(graph_to_dict(scm.graph, scm.treatment, scm.outcome)))
    log.info("wrote %s", args.out)


def cmd_sample(args):
    if args.n_samples < 1:
        raise UsageError("--n-samples must be positive")
    scm = _load_scm(args.scm)
    if args.do is None:
        data = sample(scm, args.n_samples, args.seed)
    else:
        if scm.treatment is None:
            raise UsageError("--do needs a treatment stored in the SCM file")
        data = sample_interventional(scm, scm.treatment, args.do, args.n_samples, args.seed)
    data.to_csv(args.out)


def cmd_discover_mb(args):
    p, labels, _, _, _ = _provider(args)
    target = _lookup(labels, args.target, "target")
    alg = args.mb or default_mb(len(p.variables))
    blanket = discover_mb(alg, p, target)
    _emit({"target": args.target, "algorithm": alg, "blanket": [labels[v] for v in blanket], "tests": p.n_tests})


def _search(p, labels, g, roles, args, data=None):
    x = _lookup(labels, args.treatment or roles[0], "treatment")
    y = _lookup(labels, args.outcome or roles[1], "outcome")
    alg = args.mb or default_mb(len(p.variables))
    out = run_lsas(p, x, y, alg, args.max_z, data=data)
    rec = {"treatment": labels[x], "outcome": labels[y], "algorithm": alg, **out.to_record(labels)}
    rec["mb_treatment"] = [labels[v] for v in out.mb_treatment]
    rec["mb_outcome"] = [labels[v] for v in out.mb_outcome]
    if g is not None and out.status is Status.IDENTIFIED:
        z = [g.index(labels[v]) for v in out.adjustment_set]
        rec["backdoor_valid"] = is_backdoor_adjustment_set(g, g.index(labels[x]), g.index(labels[y]), z)
    return rec


def cmd_estimate(args):
    p, labels, g, roles, data = _provider(args)
    _emit(_search(p, labels, g, roles, args, None if data is None else data.values))


def cmd_oracle(args):
    g, t, o = _load_graph_any(args.graph_file)
    _emit(_search(GraphOracle(g), list(g.labels), g, (t, o), args))


def cmd_bench(args):
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    try:
        doc = yaml.safe_load(args.config.read_text()) or {}
    except yaml.YAMLError as exc:
        raise UsageError(f"cannot parse {args.config}: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError("bench config must be a mapping")
    overrides = {"ci": args.ci, "alpha": args.alpha, "mb_alg": args.mb, "max_z": args.max_z, "seed": args.seed}
    doc.update({k: v for k, v in overrides.items() if v is not None})
    cfg = bench.BenchConfig.from_dict(doc)
    rows, records = bench.run_benchmark(cfg, jobs=args.jobs, return_records=True)
    bench.write_outputs(rows, records, args.out)
    failed = sum(r.get("status") == "failed" for r in records)
    log.info("%d instances, %d failed; outputs in %s", len(records), failed, args.out)
    if records and failed == len(records):
        raise SimulationError("every benchmark instance failed")


COMMANDS = {
    "generate": cmd_generate,
    "sample": cmd_sample,
    "discover-mb": cmd_discover_mb,
    "estimate": cmd_estimate,
    "oracle": cmd_oracle,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (SimulationError, EstimationError) as exc:
        print(f"cycadjust {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (UsageError, ConfigError, GraphError, CIError, OSError, TypeError, ValueError) as exc:
        print(f"cycadjust {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"cycadjust {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
