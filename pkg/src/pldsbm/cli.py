"""Command-line front end.

Subcommands: generate, fit, eval, select-k, degrees, reproduce. All
options can also come from a JSON file via --config (command-line flags
win on conflict). Exit codes: 0 success, 2 validation error, 3 missing
data, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import evaluation, graph as graph_mod, harness, model_selection
from .generators import GenSpec, sample
from .graph import GraphParseError
from .harness import ExperimentSpec, MissingDataError
from .inference import FitConfig, FitResult, NumericalError, fit
from .model import ValidationError


def _load_graph(path):
    with open(path) as fh:
        g, report = graph_mod.load_edge_list(fh.read())
    return g, report


def _fmt(x):
    return repr(float(x))


def cmd_generate(args):
    if args.spec:
        with open(args.spec) as fh:
            spec = GenSpec.from_json(fh.read())
        if args.seed is not None:
            spec = GenSpec(kind=spec.kind, cluster_sizes=spec.cluster_sizes,
                           B=spec.B, lam=spec.lam, ba_m=spec.ba_m,
                           inter_pairs=spec.inter_pairs, seed=args.seed)
    else:
        raise ValidationError("generate requires --spec spec.json")
    g, z, delta = sample(spec)
    with open(args.out, "w") as fh:
        fh.write(graph_mod.write_edge_list(g))
    if args.labels:
        with open(args.labels, "w") as fh:
            fh.write("".join(f"{int(v)}\n" for v in z))
    if args.delta:
        with open(args.delta, "w") as fh:
            fh.write("node_id,delta\n")
            if delta is not None:
                for i, d in enumerate(delta):
                    fh.write(f"{i},{_fmt(d)}\n")
    print(f"generated {g.n_nodes} nodes, {g.n_edges} edges -> {args.out}")
    return 0


def cmd_fit(args):
    g, _ = _load_graph(args.graph)
    cfg = FitConfig(
        K=args.k,
        epsilon=args.epsilon,
        max_iters=args.max_iters,
        restarts=args.restarts,
        sbm_baseline=args.sbm_baseline,
        nonedge_sample=args.nonedge_sample,
        seed=args.seed or 0,
        threads=args.threads,
        init=args.init,
    )
    result = fit(g, cfg)
    with open(args.out, "w") as fh:
        fh.write(result.to_json())
    print(
        f"fit K={args.k}: elbo={result.elbo_trace[-1]:.6f} "
        f"iters={result.iterations} converged={result.converged}"
    )
    return 0


def cmd_eval(args):
    with open(args.pred) as fh:
        result = FitResult.from_json(fh.read())
    with open(args.truth) as fh:
        truth = graph_mod.load_labels(fh.read())
    truth = truth - truth.min()
    wanted = args.metrics.split(",")
    m = evaluation.clustering_error(truth, result.z_star)
    report = {}
    if "error" in wanted:
        report["error_rate"] = m.error_rate
        report["error_count"] = m.error_count
    if "nmi" in wanted:
        report["nmi"] = evaluation.nmi(truth, result.z_star,
                                       average_method=args.nmi_average)
    if "confusion" in wanted:
        report["confusion"] = m.confusion.tolist()
    text = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    print(text)
    return 0


def cmd_select_k(args):
    g, _ = _load_graph(args.graph)
    cfg = FitConfig(K=args.k_min, restarts=args.restarts,
                    max_iters=args.max_iters, sbm_baseline=args.sbm_baseline,
                    seed=args.seed or 0)
    truth = None
    if args.truth:
        with open(args.truth) as fh:
            truth = graph_mod.load_labels(fh.read())
        truth = truth - truth.min()
    sweep = model_selection.select_k(
        g, range(args.k_min, args.k_max + 1), cfg, threads=args.threads
    )
    lines = ["K,icl,error_if_truth_given"]
    for i, k in enumerate(sweep.ks):
        err = ""
        if truth is not None:
            err = _fmt(evaluation.clustering_error(truth, sweep.fits[i].z_star).error_rate)
        lines.append(f"{k},{_fmt(sweep.scores[i])},{err}")
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"best K by ICL: {sweep.best_k}")
    return 0


def cmd_degrees(args):
    g, _ = _load_graph(args.graph)
    hist = evaluation.degree_histogram(g)
    with open(args.out, "w") as fh:
        fh.write("degree,count\n")
        for d, c in hist.items():
            fh.write(f"{d},{c}\n")
    if args.slope_out:
        slope, intercept, r2 = evaluation.powerlaw_slope(
            hist, bins=args.bins, binned=not args.raw_fit
        )
        with open(args.slope_out, "w") as fh:
            fh.write(json.dumps({"slope": slope, "intercept": intercept, "r2": r2}))
        print(f"log-log slope {slope:.4f} (r2={r2:.4f})")
    return 0


def cmd_reproduce(args):
    spec = ExperimentSpec(
        name=args.experiment,
        seed=args.seed or 0,
        replicates=args.replicates,
        data_path=args.data,
        labels_path=args.labels,
        threads=args.threads,
        restarts=args.restarts,
        max_iters=args.max_iters,
    )
    report = harness.run_experiment(spec, args.out_dir)
    print(json.dumps(report, indent=2))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="pldsbm")
    p.add_argument("--config", help="JSON file of option defaults")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out-dir", default="out")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a random network")
    g.add_argument("--spec", help="GenSpec JSON file")
    g.add_argument("--out", required=True)
    g.add_argument("--labels")
    g.add_argument("--delta")
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("fit", help="run variational EM on a graph")
    f.add_argument("--graph", required=True)
    f.add_argument("--k", type=int, required=True)
    f.add_argument("--epsilon", type=float, default=None)
    f.add_argument("--max-iters", type=int, default=500)
    f.add_argument("--restarts", type=int, default=5)
    f.add_argument("--sbm-baseline", action="store_true")
    f.add_argument("--nonedge-sample", type=int, default=None)
    f.add_argument("--init", default="mixed",
                   choices=["mixed", "spectral", "random"])
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("eval", help="score a fit against true labels")
    e.add_argument("--pred", required=True, help="result JSON from fit")
    e.add_argument("--truth", required=True, help="labels file")
    e.add_argument("--metrics", default="error,nmi,confusion")
    e.add_argument("--nmi-average", default="arithmetic",
                   choices=["arithmetic", "min", "max", "geometric"])
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("select-k", help="ICL sweep over K")
    s.add_argument("--graph", required=True)
    s.add_argument("--k-min", type=int, required=True)
    s.add_argument("--k-max", type=int, required=True)
    s.add_argument("--restarts", type=int, default=5)
    s.add_argument("--max-iters", type=int, default=500)
    s.add_argument("--sbm-baseline", action="store_true")
    s.add_argument("--truth")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_select_k)

    d = sub.add_parser("degrees", help="degree histogram and slope fit")
    d.add_argument("--graph", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--slope-out")
    d.add_argument("--bins", type=int, default=25)
    d.add_argument("--raw-fit", action="store_true")
    d.set_defaults(func=cmd_degrees)

    r = sub.add_parser("reproduce", help="run a named experiment")
    r.add_argument("--experiment", required=True, choices=harness.EXPERIMENTS)
    r.add_argument("--replicates", type=int, default=None)
    r.add_argument("--restarts", type=int, default=5)
    r.add_argument("--max-iters", type=int, default=200)
    r.add_argument("--data", help="edge list (adolescent) or GML (polblogs)")
    r.add_argument("--labels", help="labels file (adolescent)")
    r.set_defaults(func=cmd_reproduce)
    return p


def _apply_config(parser, argv):
    """Load --config JSON as option defaults, then parse argv.

    A minimal pre-parser extracts --config so that required options the
    config file supplies do not trip argparse before the defaults are
    installed; any option the config covers is also marked non-required.
    """
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        with open(known.config) as fh:
            conf = json.load(fh)
        actions = list(parser._actions)
        for action in parser._actions:
            if isinstance(action, argparse._SubParsersAction):
                for sub in action.choices.values():
                    actions.extend(sub._actions)
        dests = {a.dest for a in actions}
        unknown = [k for k in conf if k.replace("-", "_") not in dests]
        if unknown:
            raise ValidationError(f"unknown config keys: {unknown}")
        defaults = {k.replace("-", "_"): v for k, v in conf.items()}
        for action in actions:
            if action.dest in defaults:
                action.default = defaults[action.dest]
                action.required = False
    return parser.parse_args(argv)


def main(argv=None):
    parser = build_parser()
    try:
        args = _apply_config(parser, argv if argv is not None else sys.argv[1:])
        return args.func(args)
    except (ValidationError, GraphParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MissingDataError as exc:
        print(f"missing data: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
