"""Compiler-configuration assignment by nearest trained neighbor.

Two schemes produce an :class:`AssignmentPlan`:

* active: the toolkit picks which K programs to tune exhaustively, by
  k-means clustering all programs in standardized feature space and tuning
  each cluster's medoid;
* passive: the K tuned training programs are given.

Both then regress the training programs' optimal execution times on their
standardized features to select the M most influential features (unless
method is ``all_features``), and assign each untrained program the best
configuration of its nearest training program in the selected-feature
subspace.

Seed discipline: one plan seed fans out through fixed tags (clustering 1,
selection 2, diagnostic repartition 3) so every stage has an independent
reproducible stream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .clustering import ClusteringError, kmeans, select_medoids, DEFAULT_RESTARTS
from .dataset import (
    ConfigurationCatalog,
    DatasetBundle,
    TimingTable,
    UnknownIdError,
    standardize,
)
from .seeding import derive_seed
from .selection import (
    SelectionProvenance,
    RankedFeature,
    SelectionResult,
    all_features_result,
    select,
)

CLUSTER_TAG = 1
SELECT_TAG = 2
REPARTITION_TAG = 3

SCHEMES = ("active", "passive")


class AssignmentError(ValueError):
    """Invalid assignment request (bad K, unknown ids, incomplete timings)."""


@dataclass(frozen=True)
class OptimalRecord:
    program_id: str
    best_config_id: str
    best_time_seconds: float


@dataclass(frozen=True)
class Assignment:
    assigned_config_id: str
    matched_training_id: str
    distance: float


@dataclass(frozen=True)
class AssignmentPlan:
    scheme: str
    training_ids: tuple[str, ...]
    optimal_records: tuple[OptimalRecord, ...]
    selection: SelectionResult
    assignments: dict[str, Assignment]  # untrained program id -> assignment
    K: int
    M: int
    method: str
    folds: int
    seed: int
    diagnostic_repartition: tuple[int, ...] | None = None
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise AssignmentError(f"unknown scheme {self.scheme!r}")
        overlap = set(self.training_ids) & set(self.assignments)
        if overlap:
            raise AssignmentError(f"programs both trained and assigned: {sorted(overlap)}")
        best_of = {r.program_id: r.best_config_id for r in self.optimal_records}
        for pid, a in self.assignments.items():
            want = best_of.get(a.matched_training_id)
            if a.assigned_config_id != want:
                raise AssignmentError(
                    f"{pid}: assigned config {a.assigned_config_id!r} is not the "
                    f"best config {want!r} of its matched training program"
                )

    @property
    def all_program_ids(self) -> tuple[str, ...]:
        return self.training_ids + tuple(self.assignments)


def optimal_config(
    timings: TimingTable, catalog: ConfigurationCatalog, program_id: str
) -> OptimalRecord:
    """Exact best configuration for one program; ties break by catalog order."""
    missing = timings.missing_configs(program_id, catalog)
    if missing:
        raise AssignmentError(
            f"timings for {program_id!r} missing configs: {list(missing)}"
        )
    best_cid, best_t = None, np.inf
    for cid in catalog.config_ids:
        t = timings.time(program_id, cid)
        if t < best_t:
            best_cid, best_t = cid, t
    return OptimalRecord(program_id, best_cid, float(best_t))


def nearest_training(
    query: np.ndarray, training: np.ndarray, cols: Sequence[int]
) -> tuple[int, float]:
    """Index (into training rows) and Euclidean distance of the closest
    training vector, restricted to the given feature columns. Exact distance
    ties go to the lowest training index.
    """
    cols = list(cols)
    if not cols:
        raise AssignmentError("cannot match on an empty feature subset")
    training = np.asarray(training, dtype=float)
    if training.ndim != 2 or training.shape[0] < 1:
        raise AssignmentError("training set must be a nonempty 2-D array")
    d = np.asarray(query, dtype=float)[cols] - training[:, cols]
    d2 = np.sum(d * d, axis=1)
    i = int(np.argmin(d2))
    return i, float(np.sqrt(d2[i]))


def _matching_matrix(bundle: DatasetBundle, z, raw_distance: bool) -> np.ndarray:
    """Vectors used for similarity: z-scores by default, raw values when the
    fidelity flag asks for unscaled Euclidean distances. Either way the
    columns line up with the standardized matrix so selected-column indices
    stay valid (constant columns drop out; they never move a distance).
    """
    if not raw_distance:
        return z.values
    pos = {fid: j for j, fid in enumerate(bundle.manifest.feature_ids)}
    return bundle.features.values[:, [pos[f] for f in z.feature_ids]]


def _build_plan(
    bundle: DatasetBundle,
    training_rows: list[int],
    scheme: str,
    M: int,
    method: str,
    seed: int,
    folds: int,
    K: int,
    diagnostic: tuple[int, ...] | None,
    raw_distance: bool = False,
) -> AssignmentPlan:
    z = standardize(bundle.features, bundle.manifest)
    pids = bundle.program_ids
    training_ids = tuple(pids[i] for i in training_rows)

    records = tuple(
        optimal_config(bundle.timings, bundle.catalog, pid) for pid in training_ids
    )

    warnings: list[str] = []
    if method == "all_features":
        selection = all_features_result(z.feature_ids, folds, seed)
    elif len(training_rows) == 1:
        # a single training program makes every regression target constant;
        # fall back to matching on all features
        selection = all_features_result(z.feature_ids, folds, seed)
        warnings.append(
            "single training program: feature selection bypassed, "
            "matching on all features"
        )
    else:
        X_train = z.values[training_rows]
        y_train = np.array([r.best_time_seconds for r in records])
        selection = select(
            method, X_train, y_train, M,
            folds=folds, seed=derive_seed(seed, SELECT_TAG),
            feature_ids=z.feature_ids,
        )

    cols = list(selection.columns)
    match_values = _matching_matrix(bundle, z, raw_distance)
    train_matrix = match_values[training_rows]
    assignments: dict[str, Assignment] = {}
    training_set = set(training_rows)
    for row, pid in enumerate(pids):
        if row in training_set:
            continue
        t_pos, dist = nearest_training(match_values[row], train_matrix, cols)
        matched = records[t_pos]
        assignments[pid] = Assignment(matched.best_config_id, matched.program_id, dist)

    return AssignmentPlan(
        scheme=scheme,
        training_ids=training_ids,
        optimal_records=records,
        selection=selection,
        assignments=assignments,
        K=K,
        M=M,
        method=method,
        folds=folds,
        seed=seed,
        diagnostic_repartition=diagnostic,
        warnings=tuple(warnings) + selection.provenance.warnings,
    )


def run_active(
    bundle: DatasetBundle,
    K: int,
    M: int = 10,
    method: str = "lasso",
    seed: int = 0,
    folds: int = 3,
    restarts: int = DEFAULT_RESTARTS,
    raw_distance: bool = False,
) -> AssignmentPlan:
    """Pick K training programs by clustering + medoids, then assign.

    Pipeline: cluster all programs on all standardized features; tune each
    cluster medoid exhaustively (read from the timing table); select features
    by regressing the medoids' optimal times; match every untrained program
    to its nearest medoid in the selected subspace. A diagnostic repartition
    of all programs in the selected subspace is attached when feasible.

    ``raw_distance`` switches every similarity computation (clustering,
    matching, repartition) to unscaled feature values, for experiments on
    how much the z-scoring convention matters; selection always works on
    z-scores.
    """
    n = bundle.features.n_programs
    if not 1 <= K <= n:
        raise AssignmentError(f"K must be in [1, {n}], got {K}")
    z = standardize(bundle.features, bundle.manifest)
    sim = _matching_matrix(bundle, z, raw_distance)
    clustering = kmeans(sim, K, seed=derive_seed(seed, CLUSTER_TAG), restarts=restarts)
    training_rows = select_medoids(sim, clustering)

    plan = _build_plan(
        bundle, training_rows, "active", M, method, seed, folds, K,
        diagnostic=None, raw_distance=raw_distance,
    )

    diag: tuple[int, ...] | None = None
    try:
        repart = kmeans(
            sim[:, list(plan.selection.columns)], K,
            seed=derive_seed(seed, REPARTITION_TAG), restarts=restarts,
        )
        diag = repart.assignments
    except ClusteringError:
        diag = None  # selected subspace collapses duplicates; diagnostic only
    if diag is not None:
        plan = AssignmentPlan(
            scheme=plan.scheme, training_ids=plan.training_ids,
            optimal_records=plan.optimal_records, selection=plan.selection,
            assignments=plan.assignments, K=plan.K, M=plan.M,
            method=plan.method, folds=plan.folds, seed=plan.seed,
            diagnostic_repartition=diag, warnings=plan.warnings,
        )
    return plan


def run_passive(
    bundle: DatasetBundle,
    training_ids: Sequence[str],
    M: int = 10,
    method: str = "lasso",
    seed: int = 0,
    folds: int = 3,
    raw_distance: bool = False,
) -> AssignmentPlan:
    """Assign with a given training set (no clustering step).

    ``raw_distance`` as in :func:`run_active`.
    """
    training_ids = list(training_ids)
    if not training_ids:
        raise AssignmentError("training set must be non-empty")
    if len(set(training_ids)) != len(training_ids):
        raise AssignmentError("training ids must be distinct")
    rows = []
    for tid in training_ids:
        try:
            rows.append(bundle.features.row_index(tid))
        except UnknownIdError:
            raise AssignmentError(f"unknown training program id {tid!r}") from None
    return _build_plan(
        bundle, rows, "passive", M, method, seed, folds, K=len(rows),
        diagnostic=None, raw_distance=raw_distance,
    )


# ---------------------------------------------------------------------------
# plan (de)serialization


def plan_to_json(plan: AssignmentPlan, path: str | Path) -> None:
    doc = {
        "scheme": plan.scheme,
        "K": plan.K,
        "M": plan.M,
        "method": plan.method,
        "folds": plan.folds,
        "seed": plan.seed,
        "training_ids": list(plan.training_ids),
        "optimal_records": [
            {
                "program_id": r.program_id,
                "best_config_id": r.best_config_id,
                "best_time_seconds": r.best_time_seconds,
            }
            for r in plan.optimal_records
        ],
        "selection": {
            "method": plan.selection.method,
            "M": plan.selection.M,
            "ranked_features": [
                {
                    "feature_id": f.feature_id,
                    "column": f.column,
                    "rank": f.rank,
                    "score": f.score,
                }
                for f in plan.selection.ranked_features
            ],
            "provenance": {
                "folds": plan.selection.provenance.folds,
                "seed": plan.selection.provenance.seed,
                "lam": plan.selection.provenance.lam,
                "lambda_max": plan.selection.provenance.lambda_max,
                "warnings": list(plan.selection.provenance.warnings),
            },
        },
        "assignments": {
            pid: {
                "assigned_config_id": a.assigned_config_id,
                "matched_training_id": a.matched_training_id,
                "distance": a.distance,
            }
            for pid, a in plan.assignments.items()
        },
        "diagnostic_repartition": (
            list(plan.diagnostic_repartition)
            if plan.diagnostic_repartition is not None
            else None
        ),
        "warnings": list(plan.warnings),
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def plan_from_json(path: str | Path) -> AssignmentPlan:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    sel = doc["selection"]
    prov = sel["provenance"]
    selection = SelectionResult(
        method=sel["method"],
        ranked_features=tuple(
            RankedFeature(f["feature_id"], f["column"], f["rank"], f["score"])
            for f in sel["ranked_features"]
        ),
        M=sel["M"],
        provenance=SelectionProvenance(
            folds=prov["folds"],
            seed=prov["seed"],
            lam=prov["lam"],
            lambda_max=prov["lambda_max"],
            warnings=tuple(prov["warnings"]),
        ),
    )
    return AssignmentPlan(
        scheme=doc["scheme"],
        training_ids=tuple(doc["training_ids"]),
        optimal_records=tuple(
            OptimalRecord(r["program_id"], r["best_config_id"], r["best_time_seconds"])
            for r in doc["optimal_records"]
        ),
        selection=selection,
        assignments={
            pid: Assignment(
                a["assigned_config_id"], a["matched_training_id"], a["distance"]
            )
            for pid, a in doc["assignments"].items()
        },
        K=doc["K"],
        M=doc["M"],
        method=doc["method"],
        folds=doc["folds"],
        seed=doc["seed"],
        diagnostic_repartition=(
            tuple(doc["diagnostic_repartition"])
            if doc["diagnostic_repartition"] is not None
            else None
        ),
        warnings=tuple(doc["warnings"]),
    )
