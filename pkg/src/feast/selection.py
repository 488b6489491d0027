"""Feature-selection strategies over standardized features and target times.

All three strategies return the M most influential features with ranks
1..M, rank 1 most influential:

* L1 path: cross-validation picks the best penalty whose full-data fit keeps
  at least M features; rank by coefficient magnitude at that penalty.
* Forward greedy: grow from the empty set, each step adding the feature that
  minimizes the cross-validated OLS error; rank = order of addition.
* Backward greedy: shrink from the full set, each step removing the feature
  whose removal minimizes the cross-validated OLS error; survivors ranked by
  how long they last when the removal process is continued past the stopping
  point (the final survivor is rank 1).

Scores are method-specific (|coefficient| for the L1 path, the step's CV
error for the greedy searches) and recorded per ranked feature. Exact score
ties always break toward the lowest column index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .regression import (
    DegeneratePathError,
    OlsSubsetCv,
    lambda_path,
    lasso_path_fits,
    fold_indices,
)

METHODS = ("lasso", "sfs", "sbs", "all_features")

# stop walking the penalty path once the training fit explains this much
# variance: beyond interpolation the path only rebalances collinear columns
INTERPOLATION_R2 = 0.999


class SelectionError(ValueError):
    """Selection could not produce a ranked feature list."""


@dataclass(frozen=True)
class RankedFeature:
    feature_id: str
    column: int  # column index into the standardized matrix
    rank: int  # 1 = most influential
    score: float


@dataclass(frozen=True)
class SelectionProvenance:
    folds: int
    seed: int
    lam: float | None = None  # penalty the L1 ranking was read from
    lambda_max: float | None = None
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class SelectionResult:
    method: str
    ranked_features: tuple[RankedFeature, ...]
    M: int
    provenance: SelectionProvenance

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise SelectionError(f"unknown method {self.method!r}")
        ranks = [f.rank for f in self.ranked_features]
        if ranks != list(range(1, len(ranks) + 1)):
            raise SelectionError(f"ranks must be 1..{len(ranks)} in order, got {ranks}")
        ids = [f.feature_id for f in self.ranked_features]
        if len(set(ids)) != len(ids):
            raise SelectionError("ranked features must be distinct")

    @property
    def feature_ids(self) -> tuple[str, ...]:
        return tuple(f.feature_id for f in self.ranked_features)

    @property
    def columns(self) -> tuple[int, ...]:
        return tuple(f.column for f in self.ranked_features)


def _check_inputs(
    X: np.ndarray, y: np.ndarray, M: int, feature_ids: Sequence[str] | None
) -> tuple[np.ndarray, np.ndarray, int, tuple[str, ...], list[str]]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise SelectionError(f"bad shapes X{X.shape}, y{y.shape}")
    m = X.shape[1]
    if feature_ids is None:
        feature_ids = tuple(f"f{j}" for j in range(m))
    else:
        feature_ids = tuple(feature_ids)
        if len(feature_ids) != m:
            raise SelectionError(f"{len(feature_ids)} feature ids for {m} columns")
    if M < 1:
        raise SelectionError(f"M must be >= 1, got {M}")
    warnings: list[str] = []
    if M > m:
        warnings.append(f"M={M} exceeds the {m} available features; clamped to {m}")
        M = m
    if float(np.ptp(y)) == 0.0:
        raise SelectionError("no signal: target is constant across programs")
    return X, y, M, feature_ids, warnings


def _effective_folds(folds: int, n: int, warnings: list[str]) -> int:
    if folds < 2:
        raise SelectionError(f"folds must be >= 2, got {folds}")
    if folds > n:
        warnings.append(f"folds={folds} exceeds the {n} samples; clamped to {n}")
        return n
    return folds


def select_lasso(
    X: np.ndarray,
    y: np.ndarray,
    M: int,
    folds: int = 3,
    seed: int = 0,
    feature_ids: Sequence[str] | None = None,
    n_points: int = 100,
    path_ratio: float = 1e-3,
) -> SelectionResult:
    """Rank features by coefficient magnitude at a cross-validated penalty.

    The penalty grid runs geometrically down from the smallest all-zero
    penalty. Eligible grid points are those whose full-data fit retains at
    least M nonzero coefficients; among them the one with the lowest pooled
    CV error wins (ties toward stronger penalty). If no point is eligible the
    weakest penalty on the grid is used and the ranking is truncated to the
    nonzero support.
    """
    X, y, M, feature_ids, warns = _check_inputs(X, y, M, feature_ids)
    n = X.shape[0]
    folds = _effective_folds(folds, n, warns)
    try:
        path = lambda_path(X, y, n_points=n_points, ratio=path_ratio)
    except DegeneratePathError as exc:
        raise SelectionError(f"no signal: {exc}") from exc

    full_fits = lasso_path_fits(
        X, y, path, truncate_on_nonconvergence=True,
        stop_r2=INTERPOLATION_R2, min_support=M,
    )
    if len(full_fits) < len(path.lambdas):
        warns.append(
            f"path walk stopped after {len(full_fits)} of {len(path.lambdas)} "
            "penalties (training fit interpolates or descent stopped converging)"
        )
    support_sizes = np.array([len(f.support) for f in full_fits])
    eligible = np.flatnonzero(support_sizes >= M)

    if eligible.size:
        # pooled CV error along the path, one warm-started pass per fold;
        # penalties past a fold's own walk horizon score +inf so they can
        # never be chosen
        n_l = len(full_fits)
        sse = np.zeros(n_l)
        all_idx = np.arange(n)
        for test in fold_indices(n, folds, seed):
            train = np.setdiff1d(all_idx, test, assume_unique=True)
            fold_fits = lasso_path_fits(
                X[train], y[train], path,
                truncate_on_nonconvergence=True,
                stop_r2=INTERPOLATION_R2, min_support=M,
            )
            for k in range(n_l):
                if k < len(fold_fits):
                    r = y[test] - fold_fits[k].predict(X[test])
                    sse[k] += float(r @ r)
                else:
                    sse[k] = np.inf
        cv = sse / n
        if np.all(np.isinf(cv[eligible])):
            warns.append(
                "every eligible penalty lost a CV fold to non-convergence; "
                "using the weakest converged penalty"
            )
            best = len(full_fits) - 1
        else:
            best = int(eligible[np.argmin(cv[eligible])])
    else:
        warns.append(
            f"no penalty on the path kept >= {M} features; "
            "using the weakest penalty"
        )
        best = len(full_fits) - 1

    chosen = full_fits[best]
    coat = np.abs(chosen.coefficients)
    # stable sort on (-|coef|, column): exact ties go to the lower column
    order = np.lexsort((np.arange(len(coat)), -coat))
    top = [int(j) for j in order[:M] if coat[j] > 0.0]
    if len(top) < M:
        warns.append(
            f"only {len(top)} features have nonzero coefficients at the "
            f"chosen penalty; ranking truncated"
        )
    ranked = tuple(
        RankedFeature(feature_ids[j], j, r + 1, float(coat[j]))
        for r, j in enumerate(top)
    )
    return SelectionResult(
        "lasso", ranked, M,
        SelectionProvenance(folds, seed, lam=chosen.lam,
                            lambda_max=path.lambda_max, warnings=tuple(warns)),
    )


def select_sfs(
    X: np.ndarray,
    y: np.ndarray,
    M: int,
    folds: int = 3,
    seed: int = 0,
    feature_ids: Sequence[str] | None = None,
) -> SelectionResult:
    """Greedy forward selection scored by cross-validated OLS error."""
    X, y, M, feature_ids, warns = _check_inputs(X, y, M, feature_ids)
    folds = _effective_folds(folds, X.shape[0], warns)
    scorer = OlsSubsetCv(X, y, folds=folds, seed=seed)
    chosen: list[int] = []
    scores: list[float] = []
    remaining = list(range(X.shape[1]))
    for _ in range(M):
        best_j, best_s = None, np.inf
        for j in remaining:  # ascending index, so ties keep the lowest index
            s = scorer.score(chosen + [j])
            if s < best_s:
                best_j, best_s = j, s
        chosen.append(best_j)
        scores.append(best_s)
        remaining.remove(best_j)
    ranked = tuple(
        RankedFeature(feature_ids[j], j, r + 1, float(s))
        for r, (j, s) in enumerate(zip(chosen, scores))
    )
    return SelectionResult(
        "sfs", ranked, M,
        SelectionProvenance(folds, seed, warnings=tuple(warns)),
    )


def select_sbs(
    X: np.ndarray,
    y: np.ndarray,
    M: int,
    folds: int = 3,
    seed: int = 0,
    feature_ids: Sequence[str] | None = None,
) -> SelectionResult:
    """Greedy backward elimination scored by cross-validated OLS error.

    Removal continues (hypothetically) past the M-feature stopping point so
    the survivors acquire ranks: the i-th feature removed after the stopping
    point gets rank M+1-i, so the one that would be eliminated first among
    the survivors ranks M and the sole last survivor ranks 1. Each rank's
    score is the CV error of the subset left by that hypothetical removal.
    """
    X, y, M, feature_ids, warns = _check_inputs(X, y, M, feature_ids)
    folds = _effective_folds(folds, X.shape[0], warns)
    scorer = OlsSubsetCv(X, y, folds=folds, seed=seed)
    current = list(range(X.shape[1]))
    removal_log: list[tuple[int, float]] = []
    while current:
        if len(current) == 1:
            # final step: "removing" the last feature leaves the
            # intercept-only model
            removal_log.append((current[0], scorer.score(())))
            break
        cand_scores = scorer.score_removals(current)
        t = int(np.argmin(cand_scores))  # argmin takes the first = lowest index
        removal_log.append((current[t], float(cand_scores[t])))
        current.pop(t)
    # survivors at the stopping point are the last M removals, reversed
    survivors = removal_log[len(removal_log) - M:]
    ranked = tuple(
        RankedFeature(feature_ids[j], j, M - i, float(s))
        for i, (j, s) in enumerate(survivors)
    )
    ranked = tuple(sorted(ranked, key=lambda f: f.rank))
    return SelectionResult(
        "sbs", ranked, M,
        SelectionProvenance(folds, seed, warnings=tuple(warns)),
    )


def all_features_result(
    feature_ids: Sequence[str], folds: int = 0, seed: int = 0
) -> SelectionResult:
    """The no-selection baseline: every feature, ranked by column order."""
    ids = tuple(feature_ids)
    if not ids:
        raise SelectionError("no features to select from")
    ranked = tuple(
        RankedFeature(fid, j, j + 1, 0.0) for j, fid in enumerate(ids)
    )
    return SelectionResult(
        "all_features", ranked, len(ids), SelectionProvenance(folds, seed)
    )


def select(
    method: str,
    X: np.ndarray,
    y: np.ndarray,
    M: int,
    folds: int = 3,
    seed: int = 0,
    feature_ids: Sequence[str] | None = None,
) -> SelectionResult:
    """Dispatch by method name; ``all_features`` ignores X, y, M, and folds."""
    if method == "lasso":
        return select_lasso(X, y, M, folds, seed, feature_ids)
    if method == "sfs":
        return select_sfs(X, y, M, folds, seed, feature_ids)
    if method == "sbs":
        return select_sbs(X, y, M, folds, seed, feature_ids)
    if method == "all_features":
        if feature_ids is None:
            feature_ids = tuple(f"f{j}" for j in range(np.asarray(X).shape[1]))
        return all_features_result(feature_ids, folds, seed)
    raise SelectionError(f"unknown method {method!r}; expected one of {METHODS}")


def write_selection_csv(
    result: SelectionResult,
    path,
    categories: dict[str, str] | None = None,
) -> None:
    """`method,feature_id,rank,score` rows, plus a category column if given."""
    import csv
    from pathlib import Path

    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if categories is None:
            w.writerow(["method", "feature_id", "rank", "score"])
            for f in result.ranked_features:
                w.writerow([result.method, f.feature_id, f.rank, repr(f.score)])
        else:
            w.writerow(["method", "feature_id", "rank", "score", "category"])
            for f in result.ranked_features:
                w.writerow([
                    result.method, f.feature_id, f.rank, repr(f.score),
                    categories.get(f.feature_id, ""),
                ])
