"""Scoring assignment plans against recorded timings.

Core quantities, all in seconds:

* T_null      every program run with tuning disabled (the ``null`` config);
* T_minimal   every program at its own oracle-optimal configuration;
* T_auto      training programs at their optimal configuration plus untrained
              programs at their assigned configuration (``all_programs``
              total); the ``untrained_only`` total is also reported;
* T_exhaustive_K  cost of exhaustively tuning the K training programs: the
              sum of their recorded times over every catalog configuration.

Time reduction for an assumed per-program execution count Nexec:

    TR = Nexec * (T_null - T_auto) - T_exhaustive_K

All totals are sums over per-program contribution arrays built in bundle row
order, so repeated evaluation is bit-identical, and T_minimal <= T_auto holds
exactly (per-program domination is preserved by same-order summation).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .assignment import AssignmentPlan, optimal_config, run_active, run_passive
from .dataset import NULL_CONFIG_ID, DatasetBundle
from .seeding import derive_rng, derive_seed


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class ProgramOutcome:
    program_id: str
    role: str  # "trained" or "assigned"
    config_id: str
    seconds: float
    optimal_seconds: float


@dataclass(frozen=True)
class EvaluationReport:
    t_auto_all: float
    t_auto_untrained: float
    t_null: float
    t_minimal: float
    t_exhaustive_k: float
    K: int
    M: int
    method: str
    scheme: str
    seed: int
    per_program: tuple[ProgramOutcome, ...]


@dataclass(frozen=True)
class SweepPoint:
    K: int
    mean_t_auto_all: float
    std_t_auto_all: float
    mean_t_auto_untrained: float
    std_t_auto_untrained: float
    mean_t_exhaustive: float
    trials: int


@dataclass(frozen=True)
class TRGrid:
    K_values: tuple[int, ...]
    Nexec_values: tuple[int, ...]
    tr: np.ndarray  # (len(K_values), len(Nexec_values)), seconds, can be negative
    trials: int
    t_null: float
    mean_t_auto: tuple[float, ...]  # per K, all_programs total
    mean_t_exhaustive: tuple[float, ...]  # per K

    def __post_init__(self) -> None:
        tr = np.asarray(self.tr, dtype=float)
        if tr.shape != (len(self.K_values), len(self.Nexec_values)):
            raise EvaluationError(
                f"tr shape {tr.shape} inconsistent with "
                f"{len(self.K_values)} K values x {len(self.Nexec_values)} Nexec values"
            )
        tr.flags.writeable = False
        object.__setattr__(self, "tr", tr)


def t_null_total(bundle: DatasetBundle) -> float:
    contrib = np.array(
        [bundle.timings.time(pid, NULL_CONFIG_ID) for pid in bundle.program_ids]
    )
    return float(np.sum(contrib))


def t_minimal_total(bundle: DatasetBundle) -> float:
    contrib = np.array(
        [
            optimal_config(bundle.timings, bundle.catalog, pid).best_time_seconds
            for pid in bundle.program_ids
        ]
    )
    return float(np.sum(contrib))


def evaluate_plan(plan: AssignmentPlan, bundle: DatasetBundle) -> EvaluationReport:
    """Totals and per-program breakdown of a plan against recorded timings."""
    known = set(bundle.program_ids)
    for pid in plan.all_program_ids:
        if pid not in known:
            raise EvaluationError(f"plan references unknown program {pid!r}")

    optimal = {
        r.program_id: r for r in plan.optimal_records
    }
    outcomes: list[ProgramOutcome] = []
    auto_contrib = np.empty(len(bundle.program_ids))
    untrained_contrib: list[float] = []
    for row, pid in enumerate(bundle.program_ids):
        best = (
            optimal[pid]
            if pid in optimal
            else optimal_config(bundle.timings, bundle.catalog, pid)
        )
        if pid in plan.assignments:
            a = plan.assignments[pid]
            secs = bundle.timings.time(pid, a.assigned_config_id)
            outcomes.append(
                ProgramOutcome(pid, "assigned", a.assigned_config_id, secs,
                               best.best_time_seconds)
            )
            untrained_contrib.append(secs)
        elif pid in optimal:
            secs = best.best_time_seconds
            outcomes.append(
                ProgramOutcome(pid, "trained", best.best_config_id, secs,
                               best.best_time_seconds)
            )
        else:
            raise EvaluationError(f"plan covers neither trains nor assigns {pid!r}")
        auto_contrib[row] = secs

    exhaustive = np.array(
        [
            bundle.timings.time(tid, cid)
            for tid in plan.training_ids
            for cid in bundle.catalog.config_ids
        ]
    )

    report = EvaluationReport(
        t_auto_all=float(np.sum(auto_contrib)),
        t_auto_untrained=float(np.sum(np.array(untrained_contrib)))
        if untrained_contrib else 0.0,
        t_null=t_null_total(bundle),
        t_minimal=t_minimal_total(bundle),
        t_exhaustive_k=float(np.sum(exhaustive)),
        K=plan.K,
        M=plan.M,
        method=plan.method,
        scheme=plan.scheme,
        seed=plan.seed,
        per_program=tuple(outcomes),
    )
    if report.t_minimal > report.t_auto_all:
        raise AssertionError(
            f"oracle bound violated: T_minimal {report.t_minimal} > "
            f"T_auto {report.t_auto_all}"
        )
    return report


def time_reduction(report: EvaluationReport, n_exec: int) -> float:
    """TR = Nexec * (T_null - T_auto) - T_exhaustive_K, in seconds."""
    if n_exec < 1:
        raise EvaluationError(f"n_exec must be >= 1, got {n_exec}")
    return n_exec * (report.t_null - report.t_auto_all) - report.t_exhaustive_k


def _mean_std(values: np.ndarray) -> tuple[float, float]:
    if values.min() == values.max():
        # all trials identical: exact mean, exactly zero spread
        return float(values[0]), 0.0
    std = float(np.std(values, ddof=1)) if values.size >= 2 else 0.0
    return float(np.mean(values)), std


def sweep_K(
    bundle: DatasetBundle,
    scheme: str,
    method: str,
    K_values: Sequence[int],
    trials: int,
    seed: int = 0,
    M: int = 10,
    folds: int = 3,
) -> list[SweepPoint]:
    """Mean and spread of T_auto per K over repeated trials.

    Passive trials draw training sets uniformly without replacement; active
    trials rerun clustering under per-trial derived seeds. Trial t of size K
    uses the stream derived from (seed, K, t), so any (K, t) cell is
    reproducible in isolation.
    """
    if trials < 1:
        raise EvaluationError(f"trials must be >= 1, got {trials}")
    n = bundle.features.n_programs
    pids = bundle.program_ids
    points: list[SweepPoint] = []
    for K in K_values:
        if not 1 <= K <= n:
            raise EvaluationError(f"K must be in [1, {n}], got {K}")
        t_all = np.empty(trials)
        t_untr = np.empty(trials)
        t_exh = np.empty(trials)
        for t in range(trials):
            if scheme == "passive":
                rng = derive_rng(seed, K, t)
                rows = np.sort(rng.choice(n, size=K, replace=False))
                plan = run_passive(
                    bundle, [pids[i] for i in rows], M=M, method=method,
                    seed=derive_seed(seed, K, t), folds=folds,
                )
            elif scheme == "active":
                plan = run_active(
                    bundle, K, M=M, method=method,
                    seed=derive_seed(seed, K, t), folds=folds,
                )
            else:
                raise EvaluationError(f"unknown scheme {scheme!r}")
            report = evaluate_plan(plan, bundle)
            t_all[t] = report.t_auto_all
            t_untr[t] = report.t_auto_untrained
            t_exh[t] = report.t_exhaustive_k
        mean_all, std_all = _mean_std(t_all)
        mean_untr, std_untr = _mean_std(t_untr)
        mean_exh, _ = _mean_std(t_exh)
        points.append(
            SweepPoint(K, mean_all, std_all, mean_untr, std_untr, mean_exh, trials)
        )
    return points


def grid_from_points(
    points: Sequence[SweepPoint], t_null: float, Nexec_values: Sequence[int]
) -> TRGrid:
    """Assemble the TR grid from already-computed sweep points."""
    for ne in Nexec_values:
        if ne < 1:
            raise EvaluationError(f"Nexec values must be >= 1, got {ne}")
    if not points:
        raise EvaluationError("need at least one sweep point")
    trials = points[0].trials
    tr = np.empty((len(points), len(Nexec_values)))
    for i, p in enumerate(points):
        for j, ne in enumerate(Nexec_values):
            tr[i, j] = ne * (t_null - p.mean_t_auto_all) - p.mean_t_exhaustive
    return TRGrid(
        K_values=tuple(p.K for p in points),
        Nexec_values=tuple(int(v) for v in Nexec_values),
        tr=tr,
        trials=trials,
        t_null=t_null,
        mean_t_auto=tuple(p.mean_t_auto_all for p in points),
        mean_t_exhaustive=tuple(p.mean_t_exhaustive for p in points),
    )


def tr_grid(
    bundle: DatasetBundle,
    scheme: str,
    method: str,
    K_values: Sequence[int],
    Nexec_values: Sequence[int],
    trials: int,
    seed: int = 0,
    M: int = 10,
    folds: int = 3,
) -> TRGrid:
    """TR over a (K, Nexec) grid using per-K trial means of T_auto."""
    points = sweep_K(bundle, scheme, method, K_values, trials, seed, M, folds)
    return grid_from_points(points, t_null_total(bundle), Nexec_values)


# ---------------------------------------------------------------------------
# writers


def write_report_json(report: EvaluationReport, path: str | Path) -> None:
    doc = {
        "T_auto": {
            "all_programs": report.t_auto_all,
            "untrained_only": report.t_auto_untrained,
        },
        "T_null": report.t_null,
        "T_minimal": report.t_minimal,
        "T_exhaustive_K": report.t_exhaustive_k,
        "K": report.K,
        "M": report.M,
        "method": report.method,
        "scheme": report.scheme,
        "seed": report.seed,
        "per_program": [
            {
                "program_id": o.program_id,
                "role": o.role,
                "config_id": o.config_id,
                "seconds": o.seconds,
                "optimal_seconds": o.optimal_seconds,
            }
            for o in report.per_program
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def write_sweep_csv(points: Sequence[SweepPoint], path: str | Path) -> None:
    """`K,mean_T_auto,std_T_auto,trials`; T_auto is the all-programs total."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["K", "mean_T_auto", "std_T_auto", "trials"])
        for p in points:
            w.writerow([p.K, repr(p.mean_t_auto_all), repr(p.std_t_auto_all), p.trials])


def write_trgrid_csv(grid: TRGrid, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["K", "Nexec", "TR"])
        for i, K in enumerate(grid.K_values):
            for j, ne in enumerate(grid.Nexec_values):
                w.writerow([K, ne, repr(float(grid.tr[i, j]))])
