"""Timing-table production: compile and time a corpus under every config.

All subprocess interaction goes through the :class:`Runner` protocol so tests
substitute a scripted mock and CI never needs a real compiler. The real
:class:`SubprocessRunner` honors a ``FEAST_RUNNER`` environment variable
naming a wrapper executable to prepend to every command (test hook).

Measurements are strictly sequential by contract: overlapping runs corrupt
wall-clock timings, so this module never parallelizes anything.

Every attempted (program, config) cell ends up either as a timing record or
as a quarantined row in a failures sidecar; nothing is interpolated. Both
files are written incrementally, and a rerun resumes by skipping every cell
already present in either file.
"""

from __future__ import annotations

import csv
import os
import re
import shlex
import statistics
import subprocess
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .dataset import ConfigEntry, ConfigurationCatalog, TimingRecord, TimingTable

PLACEHOLDERS = ("{source}", "{flags}", "{output}")
STATISTICS = {
    "mean": statistics.fmean,
    "median": statistics.median,
    "min": min,
}


class MeasureError(RuntimeError):
    """Base class for measurement failures."""


class CompileError(MeasureError):
    def __init__(self, message: str, stdout: str = "", stderr: str = ""):
        super().__init__(message)
        self.stdout = stdout
        self.stderr = stderr


class ExecutionError(MeasureError):
    def __init__(self, message: str, stdout: str = "", stderr: str = ""):
        super().__init__(message)
        self.stdout = stdout
        self.stderr = stderr


class MeasureTimeout(MeasureError):
    pass


@dataclass(frozen=True)
class RunResult:
    returncode: int
    stdout: str
    stderr: str
    seconds: float  # wall-clock duration of the invocation


class Runner(Protocol):
    def run(self, argv: Sequence[str], timeout: float) -> RunResult: ...


class SubprocessRunner:
    """Runs commands with subprocess, timing them with a monotonic clock."""

    def run(self, argv: Sequence[str], timeout: float) -> RunResult:
        override = os.environ.get("FEAST_RUNNER")
        if override:
            argv = [override, *argv]
        start = time.perf_counter()
        try:
            proc = subprocess.run(
                list(argv), capture_output=True, text=True, timeout=timeout
            )
        except subprocess.TimeoutExpired as exc:
            raise MeasureTimeout(
                f"command exceeded {timeout}s: {shlex.join(argv)}"
            ) from exc
        seconds = time.perf_counter() - start
        return RunResult(proc.returncode, proc.stdout, proc.stderr, seconds)


@dataclass(frozen=True)
class CorpusProgram:
    program_id: str
    source: str
    run_args: tuple[str, ...] = ()


@dataclass(frozen=True)
class MeasurePlan:
    corpus: tuple[CorpusProgram, ...]
    compile_template: str  # must contain {source} {flags} {output}
    run_repetitions: int = 3
    timeout_seconds: float = 60.0
    statistic: str = "median"

    def __post_init__(self) -> None:
        for ph in PLACEHOLDERS:
            if ph not in self.compile_template:
                raise ValueError(f"compile template is missing placeholder {ph}")
        if self.run_repetitions < 1:
            raise ValueError(f"run_repetitions must be >= 1, got {self.run_repetitions}")
        if self.timeout_seconds <= 0:
            raise ValueError(f"timeout_seconds must be positive, got {self.timeout_seconds}")
        if self.statistic not in STATISTICS:
            raise ValueError(
                f"statistic must be one of {sorted(STATISTICS)}, got {self.statistic!r}"
            )
        ids = [p.program_id for p in self.corpus]
        if len(set(ids)) != len(ids):
            raise ValueError("corpus program ids must be distinct")


@dataclass(frozen=True)
class MeasureFailure:
    program_id: str
    config_id: str
    stage: str  # "compile" or "run"
    message: str


def _safe_name(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", text)


def compile_program(
    plan: MeasurePlan,
    program: CorpusProgram,
    config: ConfigEntry,
    runner: Runner,
    workdir: str | Path,
) -> Path:
    """Run the substituted compile command; the produced executable path is
    returned only if the command exits 0 AND the output file exists.
    """
    source = Path(program.source)
    if not source.exists():
        raise MeasureError(f"source file not found: {source}")
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    output = workdir / f"{_safe_name(program.program_id)}__{_safe_name(config.config_id)}.bin"
    command = plan.compile_template.format(
        source=str(source), flags=" ".join(config.flags), output=str(output)
    )
    result = runner.run(shlex.split(command), plan.timeout_seconds)
    if result.returncode != 0:
        raise CompileError(
            f"compiler exited {result.returncode} for "
            f"({program.program_id}, {config.config_id})",
            stdout=result.stdout, stderr=result.stderr,
        )
    if not output.exists():
        raise CompileError(
            f"compiler exited 0 but produced no output file {output}",
            stdout=result.stdout, stderr=result.stderr,
        )
    return output


def time_execution(
    executable: str | Path,
    args: Sequence[str],
    repetitions: int,
    statistic: str,
    timeout: float,
    runner: Runner,
) -> tuple[float, int]:
    """Strictly sequential timed runs summarized by the chosen statistic."""
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    if statistic not in STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}")
    durations: list[float] = []
    for _ in range(repetitions):
        result = runner.run([str(executable), *args], timeout)
        if result.returncode != 0:
            raise ExecutionError(
                f"run of {executable} exited {result.returncode}",
                stdout=result.stdout, stderr=result.stderr,
            )
        durations.append(result.seconds)
    return float(STATISTICS[statistic](durations)), repetitions


def _read_existing_timings(path: Path) -> dict[tuple[str, str], TimingRecord]:
    records: dict[tuple[str, str], TimingRecord] = {}
    if not path.exists():
        return records
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["program_id", "config_id", "mean_seconds", "repetitions"]:
            raise MeasureError(f"{path}: unexpected header {header}")
        for row in reader:
            if not row:
                continue
            pid, cid, secs, reps = row
            records[(pid, cid)] = TimingRecord(float(secs), int(reps))
    return records


def _read_existing_failures(path: Path) -> list[MeasureFailure]:
    failures: list[MeasureFailure] = []
    if not path.exists():
        return failures
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["program_id", "config_id", "stage", "message"]:
            raise MeasureError(f"{path}: unexpected header {header}")
        for row in reader:
            if not row:
                continue
            failures.append(MeasureFailure(*row))
    return failures


def build_timing_table(
    plan: MeasurePlan,
    catalog: ConfigurationCatalog,
    runner: Runner,
    workdir: str | Path,
    resume: bool = True,
) -> tuple[TimingTable, list[MeasureFailure]]:
    """Measure every (program, config) cell, resuming past completed work.

    Successes land in ``workdir/timings.csv`` and failures (compile or run)
    in ``workdir/failures.csv``, both appended cell by cell so an interrupted
    run loses at most the in-flight cell. The returned failure list includes
    quarantined rows from earlier resumed runs.
    """
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    timings_path = workdir / "timings.csv"
    failures_path = workdir / "failures.csv"

    records = _read_existing_timings(timings_path) if resume else {}
    failures = _read_existing_failures(failures_path) if resume else []
    if not resume:
        timings_path.unlink(missing_ok=True)
        failures_path.unlink(missing_ok=True)
    attempted = set(records) | {(f.program_id, f.config_id) for f in failures}

    def append_row(path: Path, header: list[str], row: list) -> None:
        new = not path.exists()
        with path.open("a", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            if new:
                w.writerow(header)
            w.writerow(row)

    for program in plan.corpus:
        for config in catalog.entries:
            key = (program.program_id, config.config_id)
            if key in attempted:
                continue
            attempted.add(key)
            try:
                exe = compile_program(plan, program, config, runner, workdir / "bin")
            except MeasureError as exc:
                failures.append(
                    MeasureFailure(program.program_id, config.config_id,
                                   "compile", str(exc))
                )
                append_row(failures_path,
                           ["program_id", "config_id", "stage", "message"],
                           [program.program_id, config.config_id, "compile", str(exc)])
                continue
            try:
                secs, reps = time_execution(
                    exe, program.run_args, plan.run_repetitions,
                    plan.statistic, plan.timeout_seconds, runner,
                )
            except MeasureError as exc:
                failures.append(
                    MeasureFailure(program.program_id, config.config_id,
                                   "run", str(exc))
                )
                append_row(failures_path,
                           ["program_id", "config_id", "stage", "message"],
                           [program.program_id, config.config_id, "run", str(exc)])
                continue
            records[key] = TimingRecord(secs, reps)
            append_row(timings_path,
                       ["program_id", "config_id", "mean_seconds", "repetitions"],
                       [program.program_id, config.config_id, repr(secs), reps])

    return TimingTable(records), failures


def load_measure_plan(path: str | Path) -> MeasurePlan:
    """Read a measurement plan from a TOML file.

    Top-level keys: ``template`` (required), ``repetitions``,
    ``timeout_seconds``, ``statistic``; one ``[[program]]`` table per corpus
    entry with ``id``, ``source``, and optional ``args`` list.
    """
    path = Path(path)
    with path.open("rb") as fh:
        doc = tomllib.load(fh)
    if "template" not in doc:
        raise ValueError(f"{path}: missing required key 'template'")
    programs = doc.get("program", [])
    if not programs:
        raise ValueError(f"{path}: no [[program]] entries")
    corpus = []
    for i, p in enumerate(programs):
        if "id" not in p or "source" not in p:
            raise ValueError(f"{path}: program entry {i} needs 'id' and 'source'")
        corpus.append(
            CorpusProgram(
                str(p["id"]), str(p["source"]),
                tuple(str(a) for a in p.get("args", [])),
            )
        )
    return MeasurePlan(
        corpus=tuple(corpus),
        compile_template=str(doc["template"]),
        run_repetitions=int(doc.get("repetitions", 3)),
        timeout_seconds=float(doc.get("timeout_seconds", 60.0)),
        statistic=str(doc.get("statistic", "median")),
    )
