#!/usr/bin/env python3
"""Sweep the training-set size K and map the break-even execution count.

For each K the dataset is split into K training programs (cluster medoids
under the active scheme, random draws averaged over --trials under the
passive scheme), configurations are assigned to the remaining programs by
nearest-neighbor matching in the selected feature space, and the resulting
total execution times are recorded. Outputs:

    sweep.csv   K, mean_T_auto, std_T_auto, trials
    trgrid.csv  K, Nexec, TR   (time reduction per (K, amortization) cell)

With --plot the same two tables are rendered to sweep.png / trgrid.png
(requires matplotlib, which is otherwise not needed).

Example (on a directory produced by make_synthetic_dataset.py):
    python3 scripts/run_sweep_experiment.py --data data/demo \
        --scheme active --method lasso --M 10 --K 2,5,10,15 --out results/
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from feast.dataset import load_bundle
from feast.evaluation import (
    grid_from_points,
    sweep_K,
    t_null_total,
    write_sweep_csv,
    write_trgrid_csv,
)


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", required=True,
                    help="directory with features/timings/configs[/manifest] CSVs")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--scheme", choices=("active", "passive"), default="active")
    ap.add_argument("--method", default="lasso",
                    choices=("lasso", "sfs", "sbs", "all_features"))
    ap.add_argument("--M", type=int, default=10,
                    help="number of features to keep (selection methods)")
    ap.add_argument("--K", type=_int_list, default=[2, 5, 10, 15],
                    help="comma-separated training-set sizes")
    ap.add_argument("--nexec", type=_int_list, default=[1, 10, 100, 1000],
                    help="comma-separated execution counts for the TR grid")
    ap.add_argument("--trials", type=int, default=100,
                    help="random splits per K (passive; active uses seeds)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--plot", action="store_true",
                    help="also render sweep.png and trgrid.png")
    args = ap.parse_args(argv)

    data = Path(args.data)
    manifest = data / "manifest.csv"
    bundle = load_bundle(
        data / "features.csv",
        data / "timings.csv",
        data / "configs.csv",
        manifest if manifest.exists() else None,
    )

    points = sweep_K(
        bundle, args.scheme, args.method, args.K,
        trials=args.trials, seed=args.seed, M=args.M,
    )
    grid = grid_from_points(points, t_null_total(bundle), args.nexec)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(points, out / "sweep.csv")
    write_trgrid_csv(grid, out / "trgrid.csv")
    for p in points:
        print(f"K={p.K:4d}  mean T_auto {p.mean_t_auto_all:12.4f}"
              f"  std {p.std_t_auto_all:10.4f}  ({p.trials} trials)")
    print(f"wrote {out / 'sweep.csv'} and {out / 'trgrid.csv'}")

    if args.plot:
        try:
            import matplotlib
        except ImportError:
            print("--plot requested but matplotlib is not installed; "
                  "CSVs were still written", file=sys.stderr)
            return 1
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 4))
        ax.errorbar([p.K for p in points],
                    [p.mean_t_auto_all for p in points],
                    yerr=[p.std_t_auto_all for p in points],
                    marker="o", capsize=3)
        ax.set_xlabel("training-set size K")
        ax.set_ylabel("total tuned execution time (s)")
        ax.set_title(f"{args.scheme} scheme, {args.method}")
        fig.tight_layout()
        fig.savefig(out / "sweep.png", dpi=150)

        fig2, ax2 = plt.subplots(figsize=(6, 4))
        for j, ne in enumerate(grid.Nexec_values):
            ax2.plot(grid.K_values, grid.tr[:, j], marker="o", label=f"Nexec={ne}")
        ax2.axhline(0.0, color="grey", lw=0.8)
        ax2.set_xlabel("training-set size K")
        ax2.set_ylabel("time reduction (s)")
        ax2.legend()
        fig2.tight_layout()
        fig2.savefig(out / "trgrid.png", dpi=150)
        print(f"wrote {out / 'sweep.png'} and {out / 'trgrid.png'}")

    return 0


if __name__ == "__main__":
    raise SystemExit(main())
