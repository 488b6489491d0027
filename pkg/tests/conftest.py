"""Shared fixtures: hand-written bundles, synthetic corpora, and a scripted
runner so the measurement driver never needs a real compiler."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from feast.dataset import (
    ConfigEntry,
    ConfigurationCatalog,
    DatasetBundle,
    FeatureManifest,
    FeatureMatrix,
    ManifestEntry,
    TimingRecord,
    TimingTable,
)
from feast.measure import RunResult
from feast.synthetic import SyntheticSpec, make_bundle


def manifest_of(p: int) -> FeatureManifest:
    return FeatureManifest(tuple(ManifestEntry(f"ft{j + 1}") for j in range(p)))


def bundle_from_arrays(
    values: np.ndarray,
    times: dict[tuple[str, str], float],
    config_ids: list[str],
    program_ids: list[str] | None = None,
) -> DatasetBundle:
    """Assemble a bundle from literal arrays and a {(pid, cid): secs} dict."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if program_ids is None:
        program_ids = [f"p{i}" for i in range(n)]
    features = FeatureMatrix(tuple(program_ids), values)
    catalog = ConfigurationCatalog(
        tuple(ConfigEntry(cid, (f"-{cid}",)) for cid in config_ids)
    )
    records = {k: TimingRecord(v, 1) for k, v in times.items()}
    return DatasetBundle(
        manifest_of(values.shape[1]), features, catalog, TimingTable(records)
    )


@pytest.fixture
def tiny_bundle() -> DatasetBundle:
    """3 programs x 2 configs with every total checkable by hand.

            null   fast
    p0      10.0    4.0     (optimal: fast)
    p1       8.0    9.0     (optimal: null)
    p2       6.0    5.0     (optimal: fast)
    """
    values = [[0.0, 1.0], [1.0, 0.0], [2.0, 2.0]]
    times = {
        ("p0", "null"): 10.0, ("p0", "fast"): 4.0,
        ("p1", "null"): 8.0, ("p1", "fast"): 9.0,
        ("p2", "null"): 6.0, ("p2", "fast"): 5.0,
    }
    return bundle_from_arrays(values, times, ["null", "fast"])


@pytest.fixture(scope="session")
def small_synthetic():
    """12 programs x 8 features, 3 true features, 4 configs."""
    return make_bundle(
        SyntheticSpec(n_programs=12, n_features=8, n_true=3, n_configs=4, seed=3)
    )


@pytest.fixture(scope="session")
def wide_synthetic():
    """The reference experimental shape: 30 programs, 56 features, 10 true."""
    return make_bundle(
        SyntheticSpec(n_programs=30, n_features=56, n_true=10, n_configs=8, seed=42)
    )


class MockRunner:
    """Scripted stand-in for the subprocess runner.

    Compile invocations are recognized by the fake compiler name in argv[0];
    on success the file named after ``-o`` is created, mirroring what a real
    compiler would leave behind. Execution invocations return scripted
    durations (popped from ``durations``, then ``default_duration``). Every
    invocation is logged for call counting.

    ``fail_compile`` / ``fail_run`` are substrings matched against the
    joined argv; a hit returns exit code 1 with a diagnostic on stderr.
    ``raise_for`` maps a substring to an exception to raise instead.
    """

    def __init__(
        self,
        compiler: str = "fakecc",
        durations: list[float] | None = None,
        default_duration: float = 0.01,
        fail_compile: tuple[str, ...] = (),
        fail_run: tuple[str, ...] = (),
        no_output: tuple[str, ...] = (),
        raise_for: dict[str, Exception] | None = None,
    ):
        self.compiler = compiler
        self.durations = list(durations or [])
        self.default_duration = default_duration
        self.fail_compile = fail_compile
        self.fail_run = fail_run
        self.no_output = no_output
        self.raise_for = raise_for or {}
        self.calls: list[tuple[str, tuple[str, ...]]] = []

    def _kind(self, argv: list[str]) -> str:
        return "compile" if Path(argv[0]).name == self.compiler else "run"

    def run(self, argv, timeout: float) -> RunResult:
        argv = [str(a) for a in argv]
        kind = self._kind(argv)
        self.calls.append((kind, tuple(argv)))
        joined = " ".join(argv)
        for pattern, exc in self.raise_for.items():
            if pattern in joined:
                raise exc
        if kind == "compile":
            if any(p in joined for p in self.fail_compile):
                return RunResult(1, "", f"mock compile failure for {joined}", 0.0)
            if not any(p in joined for p in self.no_output):
                out = argv[argv.index("-o") + 1]
                Path(out).parent.mkdir(parents=True, exist_ok=True)
                Path(out).write_bytes(b"\x7fELF-mock")
            return RunResult(0, "compiled", "", 0.0)
        if any(p in joined for p in self.fail_run):
            return RunResult(1, "", f"mock run failure for {joined}", 0.0)
        secs = self.durations.pop(0) if self.durations else self.default_duration
        return RunResult(0, "ran", "", secs)

    def count(self, kind: str) -> int:
        return sum(1 for k, _ in self.calls if k == kind)
