"""Command-line frontend.

Exit codes: 0 on success, 2 on usage or parse errors (including missing
input files), 1 on runtime errors.  Data goes to stdout or the requested
output files; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from pathorder import __version__
from pathorder import experiment as exp
from pathorder import model as model_mod
from pathorder import selection
from pathorder import synth
from pathorder.constraint import degrees_of_freedom, edge_lines, parse_edge_lines
from pathorder.errors import (
    MethodUnavailableError,
    ParseError,
    PathOrderError,
    UsageError,
)
from pathorder.numerics import derive_seed
from pathorder.pathdata import count, ingest, layer_counts

_PRIOR_FLAGS = {"uniform": "uniform", "exp-df": "exponential_df"}


def _load_graph(args):
    with open(args.graph, "r", encoding="utf-8") as fh:
        return parse_edge_lines(fh, undirected=args.undirected,
                                allow_self_loops=args.allow_self_loops)


def _load_paths(args, g):
    with open(args.paths, "r", encoding="utf-8") as fh:
        return ingest(fh, g, freq_column=args.freq_column)


def _add_graph_flags(p):
    p.add_argument("--graph", required=True, metavar="FILE",
                   help="edge list file: one `source,target` per line, "
                        "`#` comments")
    p.add_argument("--undirected", action="store_true",
                   help="insert both directions for every edge")
    p.add_argument("--allow-self-loops", action="store_true",
                   help="accept edges whose endpoints coincide")


def _add_path_flags(p):
    p.add_argument("--paths", required=True, metavar="FILE",
                   help="path file: comma-separated node labels per line")
    p.add_argument("--freq-column", action="store_true",
                   help="treat the trailing integer column as a multiplicity")


def _cmd_dof(args) -> int:
    g = _load_graph(args)
    dof = degrees_of_freedom(g, args.max_order)
    print("k,df_layer,df_total")
    total = 0
    for k, layer in enumerate(dof.per_layer):
        total += layer
        print(f"{k},{layer},{total}")
    return 0


def _cmd_fit(args) -> int:
    g = _load_graph(args)
    data = _load_paths(args, g)
    tc = count(data, g, args.max_order)
    lc = layer_counts(tc, g, args.max_order)
    df = degrees_of_freedom(g, args.max_order).total(args.max_order)
    print(f"K={args.max_order}")
    print(f"n_total={data.n_total}")
    print(f"n_paths={data.n_paths}")
    print(f"df={df}")
    if args.mode == "mle":
        fitted = model_mod.mle_fit(lc, g)
        ll = model_mod.log_likelihood(fitted, lc)
        print(f"log_likelihood={ll!r}")
    else:
        prior = model_mod.flat_prior(g, args.max_order, args.alpha0)
        fitted = model_mod.posterior_update(prior, lc)
        lm = model_mod.log_marginal_likelihood(prior, lc)
        print(f"log_marginal={lm!r}")
    if args.out:
        model_mod.save_model(fitted, args.out)
    return 0


def _select_lines(args, report):
    """One `name=K` line per requested method, in a fixed order."""
    prior = selection.OrderPrior(_PRIOR_FLAGS[args.prior])
    method = args.method
    lines = []
    if report.n_total == 0:
        # no transitions, no evidence: every method falls back to order 0
        names = {"aic": ["aic"], "bic": ["bic"], "edc": ["edc"], "lr": ["lr"],
                 "bf": [f"bf({args.bf_evidence})"],
                 "all": ["aic", "bic", "edc", "lr",
                         "bf(positive)", "bf(very_strong)"]}[method]
        return [f"{name}=0" for name in names]
    if method in ("aic", "bic", "edc"):
        lines.append(f"{method}={selection.select_ic(report, method)}")
    elif method == "lr":
        lines.append(
            f"lr={selection.select_lr(report, args.p_thres, args.lr_mode)}")
    elif method == "bf":
        thr = selection.evidence_threshold(args.bf_evidence)
        lines.append(
            f"bf({args.bf_evidence})={selection.select_bf(report, prior, thr)}")
    else:
        for ic in ("aic", "bic", "edc"):
            try:
                lines.append(f"{ic}={selection.select_ic(report, ic)}")
            except MethodUnavailableError as exc:
                print(f"note: {exc}", file=sys.stderr)
        lines.append(
            f"lr={selection.select_lr(report, args.p_thres, args.lr_mode)}")
        for level in ("positive", "very_strong"):
            thr = selection.evidence_threshold(level)
            lines.append(
                f"bf({level})={selection.select_bf(report, prior, thr)}")
    return lines


def _cmd_select(args) -> int:
    g = _load_graph(args)
    data = _load_paths(args, g)
    tc = count(data, g, args.max_order)
    report = selection.score_all(tc, g, args.max_order, args.alpha0)
    for line in _select_lines(args, report):
        print(line)
    if args.report:
        exp.write_lines(args.report, selection.report_csv_lines(report))
    if args.pvalues:
        exp.write_lines(args.pvalues,
                        selection.pvalue_csv_lines(report, args.lr_mode))
    return 0


def _cmd_synth_graph(args) -> int:
    g = synth.random_gnm(args.n, args.m, args.seed)
    exp.write_lines(args.out, edge_lines(g))
    meta = {
        "tool": "pathorder",
        "version": __version__,
        "type": "synth_graph",
        "n": args.n,
        "m": args.m,
        "seed": args.seed,
        "n_nodes_after_prune": g.n_nodes,
        "n_directed_edges": g.n_edges,
    }
    with open(args.out + ".meta.json", "w", encoding="utf-8",
              newline="\n") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return 0


def _cmd_synth_paths(args) -> int:
    g = _load_graph(args)
    law = (synth.PathLengthLaw.parse(args.length_law)
           if args.length_law else synth.PathLengthLaw("constant", args.k_gt + 3))
    gt = synth.sample_ground_truth(g, args.k_gt, derive_seed(args.seed, 1))
    data = synth.generate_paths(gt, args.n_total, law, derive_seed(args.seed, 2))
    exp.write_lines(args.out, data.path_lines())
    meta = {
        "tool": "pathorder",
        "version": __version__,
        "type": "synth_paths",
        "seed": args.seed,
        "model_seed": gt.seed,
        "k_gt": args.k_gt,
        "length_law": law.format(),
        "n_total_target": args.n_total,
        "n_total": data.n_total,
        "n_paths": data.n_paths,
    }
    with open(args.out + ".meta.json", "w", encoding="utf-8",
              newline="\n") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return 0


def _cmd_experiment(args) -> int:
    config = exp.load_config(args.config, args.set or ())
    records = exp.run(config, workers=args.workers)
    table = exp.aggregate(records, config.k_max, config.z)
    ranges = exp.detection_ranges(records, config)
    os.makedirs(args.out_dir, exist_ok=True)
    exp.write_lines(os.path.join(args.out_dir, "records.csv"),
                    exp.records_csv_lines(records))
    exp.emit_csv(table, os.path.join(args.out_dir, "results.csv"))
    exp.write_lines(os.path.join(args.out_dir, "ranges.csv"),
                    exp.ranges_csv_lines(ranges))
    exp.emit_svg(table, os.path.join(args.out_dir, "figure.svg"))
    exp.write_metadata(config, records,
                       os.path.join(args.out_dir, "metadata.json"))
    return 0


def _cmd_plot(args) -> int:
    with open(args.results, "r", encoding="utf-8") as fh:
        table = exp.parse_results_csv(fh)
    exp.emit_svg(table, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pathorder",
        description="Learn the maximum Markov order of path collections "
                    "constrained to a known network.")
    parser.add_argument("--version", action="version",
                        version=f"pathorder {__version__}")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="SUBCOMMAND")

    p = sub.add_parser("dof", help="degrees of freedom per layer",
                       description="Print per-layer and cumulative model "
                                   "degrees of freedom for orders 0..K.")
    _add_graph_flags(p)
    p.add_argument("--max-order", required=True, type=int, metavar="K",
                   help="largest maximum order to report")
    p.set_defaults(func=_cmd_dof)

    p = sub.add_parser("fit", help="fit one model and report its score",
                       description="Fit a model of one fixed maximum order "
                                   "by MLE or Bayesian update; optionally "
                                   "save it as JSON.")
    _add_graph_flags(p)
    _add_path_flags(p)
    p.add_argument("--max-order", required=True, type=int, metavar="K",
                   help="maximum order of the fitted model")
    p.add_argument("--mode", choices=("mle", "posterior"), default="mle",
                   help="fitting mode (default mle)")
    p.add_argument("--alpha0", type=float, default=1.0,
                   help="Dirichlet prior concentration (default 1.0)")
    p.add_argument("--out", metavar="FILE",
                   help="write the fitted model as JSON")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("select", help="choose the maximum order",
                       description="Score orders 0..K and print the order "
                                   "chosen by each selection method as "
                                   "`method=K` lines.")
    _add_graph_flags(p)
    _add_path_flags(p)
    p.add_argument("--max-order", required=True, type=int, metavar="K",
                   help="largest candidate maximum order")
    p.add_argument("--method", default="all",
                   choices=("all", "aic", "bic", "edc", "lr", "bf"),
                   help="selection method to apply (default all)")
    p.add_argument("--p-thres", type=float, default=0.05,
                   help="significance threshold for the LR test "
                        "(default 0.05)")
    p.add_argument("--bf-evidence", default="positive",
                   choices=("positive", "very_strong"),
                   help="Bayes-factor evidence level (default positive)")
    p.add_argument("--alpha0", type=float, default=1.0,
                   help="Dirichlet prior concentration (default 1.0)")
    p.add_argument("--prior", default="uniform",
                   choices=("uniform", "exp-df"),
                   help="prior over candidate orders (default uniform)")
    p.add_argument("--lr-mode", default="all", choices=("all", "adjacent"),
                   help="compare against all smaller orders or only "
                        "adjacent ones (default all)")
    p.add_argument("--report", metavar="FILE",
                   help="write per-order scores as CSV")
    p.add_argument("--pvalues", metavar="FILE",
                   help="write the LR p-value matrix as CSV")
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("synth-graph", help="generate a random graph",
                       description="Draw an undirected G(n,m) graph, prune "
                                   "dead ends, write the directed edge list "
                                   "plus a .meta.json sidecar.")
    p.add_argument("--n", required=True, type=int, help="number of nodes")
    p.add_argument("--m", required=True, type=int,
                   help="number of undirected edges")
    p.add_argument("--seed", required=True, type=int,
                   help="generator seed (required for reproducibility)")
    p.add_argument("--out", required=True, metavar="FILE",
                   help="output edge list file")
    p.set_defaults(func=_cmd_synth_graph)

    p = sub.add_parser("synth-paths", help="generate paths from a model",
                       description="Sample a ground-truth model of the given "
                                   "order on a graph and generate a path "
                                   "dataset, with a .meta.json sidecar.")
    _add_graph_flags(p)
    p.add_argument("--k-gt", required=True, type=int,
                   help="maximum order of the generating model")
    p.add_argument("--n-total", required=True, type=int,
                   help="target total transition count")
    p.add_argument("--length-law", metavar="LAW",
                   help="path length law, `constant:L` or `uniform:A:B` "
                        "(default constant:k_gt+3)")
    p.add_argument("--seed", required=True, type=int,
                   help="generator seed (required for reproducibility)")
    p.add_argument("--out", required=True, metavar="FILE",
                   help="output path file")
    p.set_defaults(func=_cmd_synth_paths)

    p = sub.add_parser("experiment", help="run an order-recovery experiment",
                       description="Run the configured grid of replications "
                                   "and write records.csv, results.csv, "
                                   "ranges.csv, figure.svg and metadata.json.")
    p.add_argument("--config", required=True, metavar="FILE",
                   help="TOML-compatible experiment config")
    p.add_argument("--out-dir", required=True, metavar="DIR",
                   help="output directory (created if missing)")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel worker processes (default 1)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config value (repeatable)")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("plot", help="render a results CSV as SVG",
                       description="Render selection-frequency curves from "
                                   "an existing results.csv.")
    p.add_argument("--results", required=True, metavar="FILE",
                   help="results.csv produced by the experiment subcommand")
    p.add_argument("--out", required=True, metavar="FILE",
                   help="output SVG file")
    p.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PathOrderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())
