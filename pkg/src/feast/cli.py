"""Command-line entry point wiring the pipeline.

Subcommands: select, assign, evaluate, sweep, measure, cluster. Every run
requires --out and records its full effective configuration (defaults and
seeds included) to ``run_config.json`` in that directory, so any output is
reproducible from the log alone.

Exit codes: 0 success, 1 runtime failure (convergence, measurement,
unexpected), 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .assignment import (
    AssignmentError,
    optimal_config,
    plan_from_json,
    plan_to_json,
    run_active,
    run_passive,
)
from .clustering import ClusteringError, DEFAULT_RESTARTS, kmeans, select_medoids, write_cluster_csv
from .dataset import DatasetError, load_bundle, load_catalog, standardize
from .evaluation import (
    EvaluationError,
    evaluate_plan,
    grid_from_points,
    sweep_K,
    t_null_total,
    time_reduction,
    write_report_json,
    write_sweep_csv,
    write_trgrid_csv,
)
from .measure import MeasureError, SubprocessRunner, build_timing_table, load_measure_plan
from .regression import ConvergenceError
from .selection import SelectionError, select, write_selection_csv

METHOD_CHOICES = ("lasso", "sfs", "sbs", "all_features")
SCHEME_CHOICES = ("active", "passive")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _int_list(text: str) -> list[int]:
    try:
        values = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty integer list")
    return values


def _add_bundle_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--features", required=True, help="features.csv path")
    p.add_argument("--timings", required=True, help="timings.csv path")
    p.add_argument("--configs", required=True, help="configs.csv path")
    p.add_argument("--manifest", default=None,
                   help="manifest.csv path (default: built-in 56-feature manifest)")


def _add_common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--out", required=True, help="output directory (created if missing)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="feast",
        description=(
            "Feature-selecting compiler-flag autotuning: select influential "
            "static features, assign configurations by nearest trained "
            "neighbor, and evaluate time reduction."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "select",
        help="rank the M most influential features on the full bundle",
        description=(
            "Regress every program's optimal execution time on its "
            "standardized features and write `method,feature_id,rank,score,"
            "category` to selection.csv."
        ),
    )
    _add_bundle_args(p)
    p.add_argument("--method", choices=METHOD_CHOICES, default="lasso")
    p.add_argument("--M", type=_positive_int, default=10,
                   help="number of features to select (default 10)")
    p.add_argument("--folds", type=_positive_int, default=3,
                   help="cross-validation folds (default 3)")
    _add_common_args(p)
    p.set_defaults(handler=cmd_select)

    p = sub.add_parser(
        "assign",
        help="build an assignment plan (active or passive scheme)",
        description=(
            "Active: cluster programs, tune the K medoids, select features, "
            "match untrained programs to the nearest medoid. Passive: same "
            "with a given training set. Writes plan.json."
        ),
    )
    _add_bundle_args(p)
    p.add_argument("--scheme", choices=SCHEME_CHOICES, required=True)
    p.add_argument("--K", type=_positive_int, default=None,
                   help="training-set size (active scheme)")
    p.add_argument("--train", default=None,
                   help="comma-separated training program ids (passive scheme)")
    p.add_argument("--method", choices=METHOD_CHOICES, default="lasso")
    p.add_argument("--M", type=_positive_int, default=10)
    p.add_argument("--folds", type=_positive_int, default=3)
    p.add_argument("--restarts", type=_positive_int, default=DEFAULT_RESTARTS,
                   help="clustering restarts (active scheme)")
    _add_common_args(p)
    p.set_defaults(handler=cmd_assign)

    p = sub.add_parser(
        "evaluate",
        help="score a plan against recorded timings",
        description=(
            "Writes report.json with the T_auto/T_null/T_minimal/"
            "T_exhaustive_K totals and a per-program breakdown; with --nexec, "
            "also tr.csv with `Nexec,TR` rows."
        ),
    )
    _add_bundle_args(p)
    p.add_argument("--plan", required=True, help="plan.json from the assign subcommand")
    p.add_argument("--nexec", type=_int_list, default=None,
                   help="comma-separated per-program execution counts for TR")
    _add_common_args(p)
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser(
        "sweep",
        help="mean/std of T_auto over random trials per K, plus a TR grid",
        description="Writes sweep.csv (`K,mean_T_auto,std_T_auto,trials`) "
                    "and trgrid.csv (`K,Nexec,TR`).",
    )
    _add_bundle_args(p)
    p.add_argument("--scheme", choices=SCHEME_CHOICES, required=True)
    p.add_argument("--method", choices=METHOD_CHOICES, default="lasso")
    p.add_argument("--K", type=_int_list, required=True,
                   help="comma-separated training-set sizes")
    p.add_argument("--nexec", type=_int_list, default=[1, 10, 100, 1000],
                   help="comma-separated Nexec grid (default 1,10,100,1000)")
    p.add_argument("--trials", type=_positive_int, default=1000,
                   help="random trials per K (default 1000)")
    p.add_argument("--M", type=_positive_int, default=10)
    p.add_argument("--folds", type=_positive_int, default=3)
    _add_common_args(p)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser(
        "measure",
        help="compile and time a corpus under every catalog configuration",
        description=(
            "Reads a TOML measurement plan, writes timings.csv and "
            "failures.csv into the output directory, resuming past already "
            "measured cells. Exits 1 if any cell failed."
        ),
    )
    p.add_argument("--plan", required=True, help="measurement plan TOML file")
    p.add_argument("--configs", required=True, help="configs.csv path")
    p.add_argument("--no-resume", action="store_true",
                   help="discard existing timings.csv/failures.csv and start over")
    _add_common_args(p)
    p.set_defaults(handler=cmd_measure)

    p = sub.add_parser(
        "cluster",
        help="cluster programs in standardized feature space and mark medoids",
        description="Writes clusters.csv (`program_id,cluster_id,is_medoid`).",
    )
    p.add_argument("--features", required=True, help="features.csv path")
    p.add_argument("--manifest", default=None)
    p.add_argument("--K", type=_positive_int, required=True)
    p.add_argument("--restarts", type=_positive_int, default=DEFAULT_RESTARTS)
    _add_common_args(p)
    p.set_defaults(handler=cmd_cluster)

    return parser


def _prepare_out(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = {k: v for k, v in vars(args).items() if k != "handler"}
    (out / "run_config.json").write_text(
        json.dumps({"version": __version__, "config": config}, indent=2, default=str)
        + "\n",
        encoding="utf-8",
    )
    return out


def _load_bundle(args: argparse.Namespace):
    return load_bundle(args.features, args.timings, args.configs, args.manifest)


def cmd_select(args: argparse.Namespace) -> int:
    out = _prepare_out(args)
    bundle = _load_bundle(args)
    z = standardize(bundle.features, bundle.manifest)
    y = np.array(
        [
            optimal_config(bundle.timings, bundle.catalog, pid).best_time_seconds
            for pid in bundle.program_ids
        ]
    )
    result = select(args.method, z.values, y, args.M, folds=args.folds,
                    seed=args.seed, feature_ids=z.feature_ids)
    categories = {
        e.feature_id: e.category or "" for e in bundle.manifest.entries
    }
    write_selection_csv(result, out / "selection.csv", categories=categories)
    for w in result.provenance.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"wrote {out / 'selection.csv'} ({len(result.ranked_features)} features)")
    return 0


def cmd_assign(args: argparse.Namespace) -> int:
    out = _prepare_out(args)
    bundle = _load_bundle(args)
    if args.scheme == "active":
        if args.K is None:
            raise AssignmentError("active scheme requires --K")
        plan = run_active(bundle, args.K, M=args.M, method=args.method,
                          seed=args.seed, folds=args.folds, restarts=args.restarts)
    else:
        if not args.train:
            raise AssignmentError("passive scheme requires --train id1,id2,...")
        training_ids = [tok.strip() for tok in args.train.split(",") if tok.strip()]
        plan = run_passive(bundle, training_ids, M=args.M, method=args.method,
                           seed=args.seed, folds=args.folds)
    plan_to_json(plan, out / "plan.json")
    for w in plan.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"wrote {out / 'plan.json'} ({len(plan.training_ids)} training programs, "
          f"{len(plan.assignments)} assignments)")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    out = _prepare_out(args)
    bundle = _load_bundle(args)
    plan = plan_from_json(args.plan)
    report = evaluate_plan(plan, bundle)
    write_report_json(report, out / "report.json")
    print(f"wrote {out / 'report.json'}")
    if args.nexec:
        import csv

        with (out / "tr.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["Nexec", "TR"])
            for ne in args.nexec:
                w.writerow([ne, repr(time_reduction(report, ne))])
        print(f"wrote {out / 'tr.csv'}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    out = _prepare_out(args)
    bundle = _load_bundle(args)
    points = sweep_K(bundle, args.scheme, args.method, args.K,
                     trials=args.trials, seed=args.seed, M=args.M, folds=args.folds)
    write_sweep_csv(points, out / "sweep.csv")
    grid = grid_from_points(points, t_null_total(bundle), args.nexec)
    write_trgrid_csv(grid, out / "trgrid.csv")
    print(f"wrote {out / 'sweep.csv'} and {out / 'trgrid.csv'}")
    return 0


def cmd_measure(args: argparse.Namespace) -> int:
    out = _prepare_out(args)
    plan = load_measure_plan(args.plan)
    catalog = load_catalog(args.configs)
    table, failures = build_timing_table(
        plan, catalog, SubprocessRunner(), out, resume=not args.no_resume
    )
    print(f"measured {len(table)} cells, {len(failures)} failures")
    if failures:
        for f in failures:
            print(f"failed: {f.program_id} x {f.config_id} [{f.stage}] {f.message}",
                  file=sys.stderr)
        return 1
    return 0


def cmd_cluster(args: argparse.Namespace) -> int:
    out = _prepare_out(args)
    from .dataset import default_manifest, load_feature_matrix, load_manifest

    manifest = load_manifest(args.manifest) if args.manifest else default_manifest()
    features = load_feature_matrix(args.features, manifest)
    z = standardize(features, manifest)
    clustering = kmeans(z.values, args.K, seed=args.seed, restarts=args.restarts)
    medoids = select_medoids(z.values, clustering)
    write_cluster_csv(features.program_ids, clustering, medoids, out / "clusters.csv")
    print(f"wrote {out / 'clusters.csv'} (inertia {clustering.inertia:.6g})")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except (DatasetError, SelectionError, AssignmentError, EvaluationError,
            ClusteringError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, MeasureError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
