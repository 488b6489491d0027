"""K-means partitioning of programs and medoid extraction.

Lloyd's algorithm with k-means++ seeding, a fixed number of restarts, and
best-of by inertia. Restart r of a run with seed s draws from an independent
stream derived from (s, r), so results are reproducible and restarts could
run in any order. Within one restart, inertia is checked to be non-increasing
across Lloyd iterations; an increase means a bug, not bad luck, so it raises.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seeding import derive_rng

DEFAULT_RESTARTS = 10
MAX_ITERATIONS = 300


class ClusteringError(ValueError):
    """Invalid clustering request (K out of range, too few distinct rows)."""


@dataclass(frozen=True)
class Clustering:
    assignments: tuple[int, ...]  # program row -> cluster id in 0..K-1
    centroids: np.ndarray  # (K, m)
    inertia: float  # within-cluster sum of squared distances
    seed: int
    iterations_run: int
    restarts: int

    def __post_init__(self) -> None:
        cent = np.asarray(self.centroids, dtype=float)
        cent.flags.writeable = False
        object.__setattr__(self, "centroids", cent)
        K = cent.shape[0]
        counts = np.bincount(np.asarray(self.assignments), minlength=K)
        if np.any(counts == 0):
            raise ClusteringError(f"cluster(s) {np.flatnonzero(counts == 0)} empty")

    @property
    def K(self) -> int:
        return self.centroids.shape[0]

    def members(self, cluster_id: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.assignments) == cluster_id)


def _inertia(X: np.ndarray, centroids: np.ndarray, labels: np.ndarray) -> float:
    d = X - centroids[labels]
    return float(np.sum(d * d))


def _plus_plus_seed(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ initial centroids: spread seeds with probability ~ distance^2."""
    n = X.shape[0]
    centers = np.empty((K, X.shape[1]))
    first = int(rng.integers(n))
    centers[0] = X[first]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for k in range(1, K):
        total = float(d2.sum())
        if total <= 0.0:
            # all remaining mass on already-chosen points: fall back to uniform
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[k] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[k]) ** 2, axis=1))
    return centers


def _lloyd(X: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray, float, int]:
    """Lloyd iterations from given centers until assignments stabilize."""
    n, _ = X.shape
    K = centers.shape[0]
    centers = centers.copy()
    labels = np.full(n, -1)
    prev_inertia = np.inf
    iterations = 0
    x_sq = np.sum(X * X, axis=1)
    for iterations in range(1, MAX_ITERATIONS + 1):
        # squared distances expanded; argmin ties resolve to the lowest cluster id
        d2 = x_sq[:, None] - 2.0 * (X @ centers.T) + np.sum(centers * centers, axis=1)
        new_labels = np.argmin(d2, axis=1)

        # repair empty clusters by promoting the farthest point (from a
        # cluster that can spare one) to be its own centroid; this strictly
        # lowers that point's contribution so inertia stays monotone
        counts = np.bincount(new_labels, minlength=K)
        while np.any(counts == 0):
            empty = int(np.flatnonzero(counts == 0)[0])
            dist_own = np.sum((X - centers[new_labels]) ** 2, axis=1)
            donors = counts[new_labels] >= 2
            if not np.any(donors):
                raise ClusteringError("cannot repair empty cluster: no donor cluster")
            cand = np.where(donors, dist_own, -np.inf)
            far = int(np.argmax(cand))
            counts[new_labels[far]] -= 1
            new_labels[far] = empty
            counts[empty] = 1
            centers[empty] = X[far]

        cur_inertia = _inertia(X, centers, new_labels)
        if cur_inertia > prev_inertia + 1e-9 * (1.0 + prev_inertia):
            raise AssertionError(
                f"inertia increased {prev_inertia} -> {cur_inertia}"
            )
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
        for k in range(K):
            members = labels == k
            centers[k] = X[members].mean(axis=0)
        prev_inertia = _inertia(X, centers, labels)
    return labels, centers, _inertia(X, centers, labels), iterations


def kmeans(
    X: np.ndarray, K: int, seed: int = 0, restarts: int = DEFAULT_RESTARTS
) -> Clustering:
    """Best-of-restarts k-means++ / Lloyd clustering of the rows of X."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ClusteringError(f"X must be a nonempty 2-D array, got shape {X.shape}")
    n = X.shape[0]
    if not 1 <= K <= n:
        raise ClusteringError(f"K must be in [1, {n}], got {K}")
    distinct = np.unique(X, axis=0).shape[0]
    if K > distinct:
        raise ClusteringError(
            f"K={K} exceeds the {distinct} distinct rows "
            f"({n - distinct} duplicate rows present)"
        )
    if restarts < 1:
        raise ClusteringError(f"restarts must be >= 1, got {restarts}")

    best: tuple[float, int] | None = None  # (inertia, restart index)
    best_state = None
    for r in range(restarts):
        rng = derive_rng(seed, r)
        centers0 = _plus_plus_seed(X, K, rng)
        labels, centers, inertia, iters = _lloyd(X, centers0)
        if len(np.unique(labels)) < K:
            continue  # repair failed to keep K clusters apart; skip restart
        key = (inertia, r)
        if best is None or key < best:
            best = key
            best_state = (labels, centers, inertia, iters)
    if best_state is None:
        raise ClusteringError("no restart produced K non-empty clusters")
    labels, centers, inertia, iters = best_state
    return Clustering(
        assignments=tuple(int(v) for v in labels),
        centroids=centers,
        inertia=inertia,
        seed=seed,
        iterations_run=iters,
        restarts=restarts,
    )


def select_medoids(X: np.ndarray, clustering: Clustering) -> list[int]:
    """One representative per cluster: the member with the least total
    distance to the other members (singletons return their sole member).
    Returned in cluster-id order; distance ties go to the lowest row index.
    """
    X = np.asarray(X, dtype=float)
    if X.shape[0] != len(clustering.assignments):
        raise ClusteringError(
            f"clustering covers {len(clustering.assignments)} rows, X has {X.shape[0]}"
        )
    medoids: list[int] = []
    for k in range(clustering.K):
        members = clustering.members(k)
        if members.size == 1:
            medoids.append(int(members[0]))
            continue
        pts = X[members]
        d = np.sqrt(
            np.maximum(
                np.sum(pts * pts, axis=1)[:, None]
                - 2.0 * (pts @ pts.T)
                + np.sum(pts * pts, axis=1)[None, :],
                0.0,
            )
        )
        sums = d.sum(axis=1)
        medoids.append(int(members[np.argmin(sums)]))
    return medoids


def write_cluster_csv(
    program_ids, clustering: Clustering, medoids: list[int], path
) -> None:
    """`program_id,cluster_id,is_medoid` rows in program order."""
    import csv
    from pathlib import Path

    medoid_set = set(medoids)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["program_id", "cluster_id", "is_medoid"])
        for i, pid in enumerate(program_ids):
            w.writerow([pid, clustering.assignments[i], int(i in medoid_set)])
