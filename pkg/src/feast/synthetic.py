"""Synthetic dataset bundles with known ground truth.

Construction: programs get latent feature vectors (either iid normal or
drawn around well-separated blob centers), which become raw nonnegative
"count" features under per-column log-uniform scales. A hidden subset S of
n_true features drives performance: each program's optimal execution time is

    t*_i = 10 * sigma_s + z_i[S] @ w + eps_i,

a noisy linear function of the standardized true features (sigma_s is the
signal's standard deviation, eps ~ N(0, (noise_rel * sigma_s)^2)). Each
non-null configuration is a tuning point v_c in the S-subspace anchored near
a real program, and measured time grows with the distance between a program
and the configuration it is compiled with:

    time(i, c) = t*_i + gap * (||z_i[S] - v_c|| - min_c' ||z_i[S] - v_c'||)

so the distance-closest configuration is exactly optimal and its time is
exactly t*_i. The null configuration sits far away at (5, ..., 5), making
the no-tuning baseline slow for everyone. gap = gap_rel * sigma_s keeps
assignment quality a visible but secondary contribution to totals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import (
    ConfigEntry,
    ConfigurationCatalog,
    DatasetBundle,
    FeatureManifest,
    FeatureMatrix,
    ManifestEntry,
    NULL_CONFIG_ID,
    TimingRecord,
    TimingTable,
    default_manifest,
    standardize,
)
from .seeding import derive_rng

BLOB_CENTER_SCALE = 3.0
BLOB_SPREAD = 0.15
RAW_SHIFT = 8.0


@dataclass(frozen=True)
class SyntheticSpec:
    n_programs: int = 30
    n_features: int = 56
    n_true: int = 10
    n_configs: int = 8  # total, including the null configuration
    n_blobs: int = 4
    mode: str = "iid"  # "iid" or "blobs"
    noise_rel: float = 0.05  # noise sd as a fraction of signal sd
    gap_rel: float = 0.5  # timing penalty per unit distance, fraction of signal sd
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in ("iid", "blobs"):
            raise ValueError(f"mode must be 'iid' or 'blobs', got {self.mode!r}")
        if not 1 <= self.n_true <= self.n_features:
            raise ValueError("n_true must be in [1, n_features]")
        if self.n_configs < 2:
            raise ValueError("need at least the null config plus one tuned config")
        if self.n_programs < 2:
            raise ValueError("need at least 2 programs")
        if self.mode == "blobs" and self.n_blobs > self.n_programs:
            raise ValueError("more blobs than programs")


@dataclass(frozen=True)
class SyntheticBundle:
    bundle: DatasetBundle
    spec: SyntheticSpec
    true_columns: tuple[int, ...]  # manifest column indices of S
    true_feature_ids: tuple[str, ...]
    t_star: np.ndarray  # (n,) per-program optimal times
    blob_labels: tuple[int, ...] | None  # None in iid mode
    config_points: np.ndarray  # (n_configs, n_true) tuning points, null first


def _generic_manifest(p: int) -> FeatureManifest:
    return FeatureManifest(tuple(ManifestEntry(f"ft{j + 1}") for j in range(p)))


def make_bundle(spec: SyntheticSpec) -> SyntheticBundle:
    rng = derive_rng(spec.seed)
    n, p = spec.n_programs, spec.n_features

    if spec.mode == "blobs":
        centers = BLOB_CENTER_SCALE * rng.standard_normal((spec.n_blobs, p))
        labels = rng.permutation(np.arange(n) % spec.n_blobs)
        latent = centers[labels] + BLOB_SPREAD * rng.standard_normal((n, p))
        blob_labels: tuple[int, ...] | None = tuple(int(v) for v in labels)
    else:
        latent = rng.standard_normal((n, p))
        blob_labels = None

    scales = 10.0 ** rng.uniform(0.0, 3.0, size=p)
    raw = np.maximum(latent + RAW_SHIFT, 0.0) * scales

    manifest = default_manifest() if p == 56 else _generic_manifest(p)
    program_ids = tuple(f"prog{i + 1:03d}" for i in range(n))
    features = FeatureMatrix(program_ids, raw)
    z = standardize(features, manifest)
    if z.n_features < p:
        raise RuntimeError(
            f"synthetic features lost {p - z.n_features} zero-variance columns; "
            "use a different seed"
        )

    true_cols = np.sort(rng.choice(p, size=spec.n_true, replace=False))
    w = rng.uniform(1.0, 3.0, size=spec.n_true) * rng.choice([-1.0, 1.0], size=spec.n_true)
    zs = z.values[:, true_cols]
    signal = zs @ w
    sigma_s = float(np.std(signal))
    if sigma_s <= 0.0:
        raise RuntimeError("degenerate synthetic signal; use a different seed")
    noise = spec.noise_rel * sigma_s * rng.standard_normal(n)
    t_star = 10.0 * sigma_s + signal + noise
    if np.any(t_star <= 0.0):
        raise RuntimeError("nonpositive synthetic base time; use a different seed")

    # tuning points: null far from everyone, others jittered around anchor programs
    n_tuned = spec.n_configs - 1
    anchors = rng.choice(n, size=n_tuned, replace=n_tuned > n)
    points = np.vstack([
        np.full((1, spec.n_true), 5.0),
        zs[anchors] + 0.3 * rng.standard_normal((n_tuned, spec.n_true)),
    ])
    config_ids = [NULL_CONFIG_ID] + [f"cfg{c + 1}" for c in range(n_tuned)]
    catalog = ConfigurationCatalog(
        tuple(
            ConfigEntry(cid, ("-off",) if cid == NULL_CONFIG_ID else (f"-x{c}",))
            for c, cid in enumerate(config_ids)
        )
    )

    # distances (n, n_configs); the closest config is exactly optimal
    diff = zs[:, None, :] - points[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    excess = dist - dist.min(axis=1, keepdims=True)
    gap = spec.gap_rel * sigma_s
    times = t_star[:, None] + gap * excess

    records = {
        (program_ids[i], config_ids[c]): TimingRecord(float(times[i, c]), 1)
        for i in range(n)
        for c in range(spec.n_configs)
    }
    bundle = DatasetBundle(manifest, features, catalog, TimingTable(records))
    return SyntheticBundle(
        bundle=bundle,
        spec=spec,
        true_columns=tuple(int(j) for j in true_cols),
        true_feature_ids=tuple(manifest.feature_ids[j] for j in true_cols),
        t_star=t_star,
        blob_labels=blob_labels,
        config_points=points,
    )
