"""Command-line interface: ``ricciflow {detect,curvature,generate,sweep}``.

Exit codes: 0 success, 1 runtime failure, 2 invalid or conflicting flags.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .benchgen import GenConfig, GenError, generate, sweep
from .curvature import CurvatureSpec, Kind, curvature_all
from .flow import FlowConfig
from .graph import GraphError
from .io import RunReport, append_metrics_csv, load_graph, load_labels, write_graph, write_labels
from .metrics import modularity, nmi_labels
from .pipeline import detect_communities

KINDS = [k.value for k in Kind]

# flag -> the curvature it belongs to
_KIND_FLAGS = {
    "alpha": Kind.OLLIVIER,
    "lly_eps": Kind.LLY,
    "forman_vertex_weight": Kind.FORMAN,
    "menger_triangles": Kind.MENGER,
    "haantjes_max_hops": Kind.HAANTJES,
}


class UsageError(Exception):
    pass


def _a_value(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}") from None


def _mu_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_curvature_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--curvature", choices=KINDS, default="ollivier")
    p.add_argument("--alpha", type=float, default=None, help="Ollivier laziness (default 0.5)")
    p.add_argument("--lly-eps", type=float, default=None, help="Lin-Lu-Yau limit step (default 1e-3)")
    p.add_argument("--forman-vertex-weight", choices=["sum", "unit"], default=None,
                   help="Forman vertex weights (default sum)")
    p.add_argument("--menger-triangles", choices=["graph", "metric"], default=None,
                   help="Menger triangle set (default graph)")
    p.add_argument("--haantjes-max-hops", type=int, default=None,
                   help="longest Haantjes path in edges (default 3)")


def _add_flow_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--A", dest="A", type=_a_value, default="auto",
                   help="surgery threshold, a number > 1 or 'auto' (default)")
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--no-early-stop", action="store_true",
                   help="always run all iterations")


def _add_gen_flags(p: argparse.ArgumentParser) -> None:
    d = GenConfig()
    p.add_argument("--n", type=int, default=d.n)
    p.add_argument("--avg-degree", type=float, default=d.avg_degree)
    p.add_argument("--max-degree", type=int, default=d.max_degree)
    p.add_argument("--min-c", type=int, default=d.min_C)
    p.add_argument("--max-c", type=int, default=d.max_C)
    p.add_argument("--seed", type=int, default=d.seed)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ricciflow",
                                     description="Community detection by discrete Ricci flow with surgery.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect communities in an edge-list graph")
    p.add_argument("--graph", required=True, type=Path)
    p.add_argument("--truth", type=Path, help="ground-truth label file for NMI")
    _add_curvature_flags(p)
    _add_flow_flags(p)
    p.add_argument("--out", type=Path, help="JSON report (default: stdout)")
    p.add_argument("--trace", type=Path, help="per-iteration trace CSV")
    p.add_argument("--labels-out", type=Path, help="vertex/label CSV")
    p.add_argument("--metrics-csv", type=Path, help="append dataset,curvature,nmi,modularity,seconds")
    p.add_argument("--seed", type=int, default=None,
                   help="accepted for interface stability; the pipeline has no randomness")

    p = sub.add_parser("curvature", help="per-edge curvature table")
    p.add_argument("--graph", required=True, type=Path)
    _add_curvature_flags(p)
    p.add_argument("--out", type=Path, help="CSV file (default: stdout)")

    p = sub.add_parser("generate", help="write one planted-partition instance")
    _add_gen_flags(p)
    p.add_argument("--mu", type=float, default=GenConfig().mu)
    p.add_argument("--out-prefix", required=True, type=Path,
                   help="writes PREFIX.edges and PREFIX.labels")

    p = sub.add_parser("sweep", help="detect on generated instances over a mu grid")
    _add_gen_flags(p)
    p.add_argument("--mu-values", type=_mu_list, default=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8])
    p.add_argument("--repeats", type=int, default=10)
    _add_curvature_flags(p)
    _add_flow_flags(p)
    p.add_argument("--out-dir", type=Path, help="also write every instance here")
    p.add_argument("--csv", type=Path, help="aggregate CSV (default: stdout)")
    return parser


def _curvature_spec(args) -> CurvatureSpec:
    kind = Kind(args.curvature)
    given = {k: getattr(args, k) for k in _KIND_FLAGS if getattr(args, k) is not None}
    for k in given:
        if _KIND_FLAGS[k] is not kind:
            flag = "--" + k.replace("_", "-")
            raise UsageError(f"{flag} does not apply to --curvature {kind.value}")
    try:
        return CurvatureSpec(kind=kind, **given)
    except (GraphError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _flow_config(args, spec: CurvatureSpec) -> FlowConfig:
    if args.iters < 1:
        raise UsageError("--iters must be >= 1")
    if not (args.dt > 0 and math.isfinite(args.dt)):
        raise UsageError("--dt must be positive")
    if args.A != "auto" and not args.A > 1:
        raise UsageError("--A must exceed 1")
    return FlowConfig(curvature=spec, dt=args.dt, A=args.A, max_iterations=args.iters,
                      early_stop=not args.no_early_stop)


def _gen_config(args, mu: float) -> GenConfig:
    try:
        return GenConfig(n=args.n, avg_degree=args.avg_degree, max_degree=args.max_degree,
                         min_C=args.min_c, max_C=args.max_c, mu=mu, seed=args.seed)
    except GenError as exc:
        raise UsageError(str(exc)) from None


def _score(g, labeling, truth):
    q = modularity(g, labeling) if g.number_of_edges() else None
    nmi = nmi_labels(labeling, truth) if truth is not None else None
    return nmi, q


def cmd_detect(args) -> int:
    spec = _curvature_spec(args)
    cfg = _flow_config(args, spec)
    g = load_graph(args.graph)
    truth = load_labels(args.truth, g) if args.truth else None

    res = detect_communities(g, cfg)
    nmi, q = _score(g, res.labeling, truth)
    trace = res.trace
    config = cfg.to_dict()
    config["A_resolved"] = trace.A if g.number_of_edges() else None
    config["seed"] = args.seed
    report = RunReport(
        inputs={"graph": str(args.graph), "truth": str(args.truth) if args.truth else None,
                "vertices": g.number_of_vertices(), "edges": g.number_of_edges()},
        config=config,
        communities=[[str(v) for v in c] for c in res.communities()],
        metrics={"communities": res.n_communities, "nmi": nmi, "modularity": q},
        trace={"iterations": len(trace.records), "surgeries": len(trace.surgeries),
               "last_surgery": trace.last_surgery,
               "removed_edges": sum(len(s.removed) for s in trace.surgeries)},
        timings={"seconds": res.seconds},
    )
    if args.out:
        report.write(args.out)
    else:
        sys.stdout.write(report.dumps())
    if args.trace:
        trace.write_csv(args.trace)
    if args.labels_out:
        res.write_labels(args.labels_out)
    if args.metrics_csv:
        append_metrics_csv(args.metrics_csv, {"dataset": args.graph.stem, "curvature": spec.kind.value,
                                              "nmi": nmi, "modularity": q, "seconds": res.seconds})
    return 0


def cmd_curvature(args) -> int:
    spec = _curvature_spec(args)
    g = load_graph(args.graph)
    kv = curvature_all(g, spec)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["u", "v", "weight", "kappa"])
        for (u, v), wt, k in zip(g.edges, g.weights, kv.values):
            w.writerow([u, v, f"{wt:.17g}", f"{k:.17g}"])
    finally:
        if args.out:
            fh.close()
    return 0


def cmd_generate(args) -> int:
    cfg = _gen_config(args, args.mu)
    g, truth = generate(cfg)
    prefix = args.out_prefix
    prefix.parent.mkdir(parents=True, exist_ok=True)
    header = " ".join(f"{k}={v}" for k, v in cfg.to_dict().items())
    write_graph(g, prefix.with_name(prefix.name + ".edges"), header=header)
    write_labels(truth, prefix.with_name(prefix.name + ".labels"), order=g.vertices)
    return 0


def cmd_sweep(args) -> int:
    spec = _curvature_spec(args)
    cfg = _flow_config(args, spec)
    if args.repeats < 1:
        raise UsageError("--repeats must be >= 1")
    for mu in args.mu_values:
        _gen_config(args, mu)
    base = _gen_config(args, args.mu_values[0] if args.mu_values else 0.0)

    rows = []
    for mu in args.mu_values:
        nmis, qs, secs = [], [], []
        for inst in sweep(base, [mu], args.repeats):
            if args.out_dir:
                args.out_dir.mkdir(parents=True, exist_ok=True)
                stem = f"mu{mu:g}_r{inst.repeat}"
                write_graph(inst.graph, args.out_dir / f"{stem}.edges")
                write_labels(inst.truth, args.out_dir / f"{stem}.labels", order=inst.graph.vertices)
            t0 = time.perf_counter()
            res = detect_communities(inst.graph, cfg)
            secs.append(time.perf_counter() - t0)
            nmi, q = _score(inst.graph, res.labeling, inst.truth)
            nmis.append(np.nan if nmi is None else nmi)
            qs.append(np.nan if q is None else q)
        rows.append([f"{mu:g}", args.repeats, np.nanmean(nmis), np.nanstd(nmis),
                     np.nanmean(qs), np.nanstd(qs), float(np.mean(secs))])

    fh = open(args.csv, "w", newline="") if args.csv else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mu", "repeats", "nmi_mean", "nmi_std", "modularity_mean", "modularity_std",
                    "seconds_mean"])
        for r in rows:
            w.writerow(r[:2] + [f"{x:.6f}" for x in r[2:]])
    finally:
        if args.csv:
            fh.close()
    return 0


COMMANDS = {"detect": cmd_detect, "curvature": cmd_curvature,
            "generate": cmd_generate, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        sub.print_usage(sys.stderr)
        print(f"ricciflow {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"ricciflow {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
