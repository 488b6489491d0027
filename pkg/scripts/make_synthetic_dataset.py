#!/usr/bin/env python3
"""Generate a synthetic autotuning dataset with known ground truth.

Writes the four CSV inputs the `feast` CLI consumes (manifest, features,
configs, timings) plus a `truth.json` with the planted answers — which
features actually drive performance, each program's optimal time, and the
blob label of each program when --mode blobs is used — so selection and
assignment output can be checked against the construction.

Example:
    python3 scripts/make_synthetic_dataset.py --out data/demo \
        --programs 30 --features 56 --true 10 --configs 8 --seed 42
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from feast.dataset import (
    write_catalog,
    write_feature_matrix,
    write_manifest,
    write_timing_table,
)
from feast.synthetic import SyntheticSpec, make_bundle


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--programs", type=int, default=30)
    ap.add_argument("--features", type=int, default=56)
    ap.add_argument("--true", dest="n_true", type=int, default=10,
                    help="number of features that actually drive performance")
    ap.add_argument("--configs", type=int, default=8,
                    help="catalog size, including the null configuration")
    ap.add_argument("--mode", choices=("iid", "blobs"), default="iid")
    ap.add_argument("--blobs", type=int, default=4,
                    help="number of program clusters when --mode blobs")
    ap.add_argument("--noise", type=float, default=0.05,
                    help="noise sd as a fraction of the signal sd")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    spec = SyntheticSpec(
        n_programs=args.programs,
        n_features=args.features,
        n_true=args.n_true,
        n_configs=args.configs,
        n_blobs=args.blobs,
        mode=args.mode,
        noise_rel=args.noise,
        seed=args.seed,
    )
    sb = make_bundle(spec)
    b = sb.bundle

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(b.manifest, out / "manifest.csv")
    write_feature_matrix(b.features, b.manifest, out / "features.csv")
    write_catalog(b.catalog, out / "configs.csv")
    write_timing_table(b.timings, out / "timings.csv")
    truth = {
        "spec": {
            "n_programs": spec.n_programs,
            "n_features": spec.n_features,
            "n_true": spec.n_true,
            "n_configs": spec.n_configs,
            "mode": spec.mode,
            "n_blobs": spec.n_blobs if spec.mode == "blobs" else None,
            "noise_rel": spec.noise_rel,
            "seed": spec.seed,
        },
        "true_feature_ids": list(sb.true_feature_ids),
        "true_columns": list(sb.true_columns),
        "optimal_seconds": {
            pid: t for pid, t in zip(b.program_ids, sb.t_star.tolist())
        },
        "blob_labels": (
            dict(zip(b.program_ids, sb.blob_labels))
            if sb.blob_labels is not None
            else None
        ),
    }
    (out / "truth.json").write_text(json.dumps(truth, indent=2) + "\n")

    n_cells = len(b.timings.records)
    print(f"wrote {out}/: {spec.n_programs} programs x {spec.n_features} features, "
          f"{spec.n_configs} configs ({n_cells} timing cells)")
    print(f"planted features: {', '.join(sb.true_feature_ids)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
