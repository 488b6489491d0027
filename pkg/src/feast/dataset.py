"""Canonical dataset types, CSV ingestion, validation, and standardization.

Interchange formats (comma-separated, UTF-8, header row, "." decimal point):

* ``features.csv``  header ``program_id,ft1,...,ftN``; one row per program.
* ``timings.csv``   header ``program_id,config_id,mean_seconds,repetitions``.
* ``configs.csv``   header ``config_id,flags``; flags is a space-separated
  token list; the config id ``null`` is the mandatory no-tuning baseline.
* ``manifest.csv``  header ``feature_id,description,category`` (optional
  override of the built-in 56-feature manifest).

All types are immutable after construction and safe for concurrent reads.
Floats are written with ``repr`` so a write/load round trip is bit-exact.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

NULL_CONFIG_ID = "null"

CATEGORIES = ("cfg", "op", "phi", "other")


class DatasetError(ValueError):
    """Base class for dataset validation failures."""


class SchemaError(DatasetError):
    """Header or column structure does not match the expected schema."""


class ParseError(DatasetError):
    """A cell could not be parsed as the expected type."""


class DuplicateIdError(DatasetError):
    """An identifier that must be unique appeared more than once."""


class UnknownIdError(DatasetError):
    """A record references a program or configuration id that does not exist."""


class InsufficientDataError(DatasetError):
    """Not enough rows to perform the requested computation."""


# The 56 original static program features (counts extracted from a method's
# intermediate representation without executing it), with coarse categories:
# cfg = control-flow structure, op = instruction/operation mix, phi = SSA
# phi-node statistics, other = variable reference summaries.
_DEFAULT_FEATURES: tuple[tuple[str, str, str], ...] = (
    ("ft1", "number of basic blocks in the method", "cfg"),
    ("ft2", "number of basic blocks with a single successor", "cfg"),
    ("ft3", "number of basic blocks with two successors", "cfg"),
    ("ft4", "number of basic blocks with more than two successors", "cfg"),
    ("ft5", "number of basic blocks with a single predecessor", "cfg"),
    ("ft6", "number of basic blocks with two predecessors", "cfg"),
    ("ft7", "number of basic blocks with more than two predecessors", "cfg"),
    ("ft8", "number of basic blocks with a single predecessor and a single successor", "cfg"),
    ("ft9", "number of basic blocks with a single predecessor and two successors", "cfg"),
    ("ft10", "number of basic blocks with two predecessors and one successor", "cfg"),
    ("ft11", "number of basic blocks with two successors and two predecessors", "cfg"),
    ("ft12", "number of basic blocks with more than two successors and more than two predecessors", "cfg"),
    ("ft13", "number of basic blocks with number of instructions less than 15", "cfg"),
    ("ft14", "number of basic blocks with number of instructions in the interval [15, 500]", "cfg"),
    ("ft15", "number of basic blocks with number of instructions greater than 500", "cfg"),
    ("ft16", "number of edges in the control flow graph", "cfg"),
    ("ft17", "number of critical edges in the control flow graph", "cfg"),
    ("ft18", "number of abnormal edges in the control flow graph", "cfg"),
    ("ft19", "number of direct calls in the method", "op"),
    ("ft20", "number of conditional branches in the method", "cfg"),
    ("ft21", "number of assignment instructions in the method", "op"),
    ("ft22", "number of binary integer operations in the method", "op"),
    ("ft23", "number of binary floating point operations in the method", "op"),
    ("ft24", "number of instructions in the method", "op"),
    ("ft25", "average number of instructions in basic blocks", "op"),
    ("ft26", "average number of phi nodes at the beginning of a basic block", "phi"),
    ("ft27", "average number of arguments of a phi node", "phi"),
    ("ft28", "number of basic blocks with no phi nodes", "phi"),
    ("ft29", "number of basic blocks with phi nodes in the interval [0, 3]", "phi"),
    ("ft30", "number of basic blocks with more than 3 phi nodes", "phi"),
    ("ft31", "number of basic blocks where the total number of arguments of all phi nodes is greater than 5", "phi"),
    ("ft32", "number of basic blocks where the total number of arguments of all phi nodes is in the interval [1, 5]", "phi"),
    ("ft33", "number of switch instructions in the method", "op"),
    ("ft34", "number of unary operations in the method", "op"),
    ("ft35", "number of instructions that do pointer arithmetic in the method", "op"),
    ("ft36", "number of indirect references via pointers", "op"),
    ("ft37", "number of times the address of a variable is taken", "op"),
    ("ft38", "number of times the address of a function is taken", "op"),
    ("ft39", "number of indirect calls in the method", "op"),
    ("ft40", "number of assignment instructions with the left operand an integer constant in the method", "op"),
    ("ft41", "number of binary operations with one of the operands an integer constant in the method", "op"),
    ("ft42", "number of calls with pointers as arguments", "op"),
    ("ft43", "number of calls with the number of arguments greater than 4", "op"),
    ("ft44", "number of calls that return a pointer", "op"),
    ("ft45", "number of calls that return an integer", "op"),
    ("ft46", "number of occurrences of integer constant zero", "op"),
    ("ft47", "number of occurrences of 32-bit integer constants", "op"),
    ("ft48", "number of occurrences of integer constant one", "op"),
    ("ft49", "number of occurrences of 64-bit integer constants", "op"),
    ("ft50", "number of references of local variables in the method", "other"),
    ("ft51", "number of references (def/use) of static or extern variables in the method", "other"),
    ("ft52", "number of local variables referred in the method", "other"),
    ("ft53", "number of static or extern variables referred in the method", "other"),
    ("ft54", "number of local variables that are pointers in the method", "other"),
    ("ft55", "number of static or extern variables that are pointers in the method", "other"),
    ("ft56", "number of unconditional branches in the method", "cfg"),
)


@dataclass(frozen=True)
class ManifestEntry:
    feature_id: str
    description: str = ""
    category: str | None = None


@dataclass(frozen=True)
class FeatureManifest:
    """Ordered feature schema; the order fixes feature-matrix column order."""

    entries: tuple[ManifestEntry, ...]

    def __post_init__(self) -> None:
        ids = [e.feature_id for e in self.entries]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise DuplicateIdError(f"duplicate feature ids in manifest: {dupes}")
        for e in self.entries:
            if e.category is not None and e.category not in CATEGORIES:
                raise SchemaError(
                    f"feature {e.feature_id!r}: unknown category {e.category!r} "
                    f"(expected one of {CATEGORIES})"
                )

    @property
    def feature_ids(self) -> tuple[str, ...]:
        return tuple(e.feature_id for e in self.entries)

    def category_of(self, feature_id: str) -> str | None:
        for e in self.entries:
            if e.feature_id == feature_id:
                return e.category
        raise UnknownIdError(f"unknown feature id {feature_id!r}")

    def __len__(self) -> int:
        return len(self.entries)


def default_manifest() -> FeatureManifest:
    """The built-in 56-feature static program characterization manifest."""
    return FeatureManifest(
        tuple(ManifestEntry(fid, desc, cat) for fid, desc, cat in _DEFAULT_FEATURES)
    )


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class FeatureMatrix:
    """n x p table of static feature values; rows are programs."""

    program_ids: tuple[str, ...]
    values: np.ndarray  # (n, p) float64

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise SchemaError(f"feature values must be 2-D, got shape {values.shape}")
        n, _ = values.shape
        if n != len(self.program_ids):
            raise SchemaError(
                f"{len(self.program_ids)} program ids but {n} feature rows"
            )
        if n < 1 or values.shape[1] < 1:
            raise SchemaError("feature matrix must be at least 1 x 1")
        if len(set(self.program_ids)) != n:
            ids = list(self.program_ids)
            dupes = sorted({p for p in ids if ids.count(p) > 1})
            raise DuplicateIdError(f"duplicate program ids: {dupes}")
        if not np.all(np.isfinite(values)):
            raise DatasetError("feature values must be finite")
        if np.any(values < 0):
            i, j = np.argwhere(values < 0)[0]
            raise DatasetError(
                f"feature values are counts and must be nonnegative; "
                f"program {self.program_ids[i]!r}, column {j} is {values[i, j]}"
            )
        object.__setattr__(self, "values", _freeze(values))

    @property
    def n_programs(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def row_index(self, program_id: str) -> int:
        try:
            return self.program_ids.index(program_id)
        except ValueError:
            raise UnknownIdError(f"unknown program id {program_id!r}") from None


@dataclass(frozen=True)
class StandardizedMatrix:
    """Per-column z-scores of a feature matrix, zero-variance columns dropped."""

    program_ids: tuple[str, ...]
    feature_ids: tuple[str, ...]  # retained columns, in original order
    values: np.ndarray  # (n, m) z-scores
    means: np.ndarray  # (m,) raw-column means
    stds: np.ndarray  # (m,) raw-column sample standard deviations
    dropped_columns: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _freeze(np.asarray(self.values, dtype=float)))
        object.__setattr__(self, "means", _freeze(np.asarray(self.means, dtype=float)))
        object.__setattr__(self, "stds", _freeze(np.asarray(self.stds, dtype=float)))
        if set(self.dropped_columns) & set(self.feature_ids):
            raise DatasetError("a column cannot be both dropped and retained")

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def column_index(self, feature_id: str) -> int:
        try:
            return self.feature_ids.index(feature_id)
        except ValueError:
            raise UnknownIdError(
                f"feature {feature_id!r} is not a retained column"
            ) from None


@dataclass(frozen=True)
class ConfigEntry:
    config_id: str
    flags: tuple[str, ...]


@dataclass(frozen=True)
class ConfigurationCatalog:
    """Ordered compiler-parameter configurations; catalog order breaks ties."""

    entries: tuple[ConfigEntry, ...]

    def __post_init__(self) -> None:
        ids = [e.config_id for e in self.entries]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise DuplicateIdError(f"duplicate config ids: {dupes}")
        if NULL_CONFIG_ID not in ids:
            raise DatasetError(
                f"catalog must include the no-tuning baseline config {NULL_CONFIG_ID!r}"
            )

    @property
    def config_ids(self) -> tuple[str, ...]:
        return tuple(e.config_id for e in self.entries)

    def flags_of(self, config_id: str) -> tuple[str, ...]:
        for e in self.entries:
            if e.config_id == config_id:
                return e.flags
        raise UnknownIdError(f"unknown config id {config_id!r}")

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class TimingRecord:
    mean_seconds: float
    repetitions: int


@dataclass(frozen=True)
class TimingTable:
    """Measured execution times keyed by (program_id, config_id)."""

    records: dict[tuple[str, str], TimingRecord] = field(default_factory=dict)

    def time(self, program_id: str, config_id: str) -> float:
        try:
            return self.records[(program_id, config_id)].mean_seconds
        except KeyError:
            raise UnknownIdError(
                f"no timing record for ({program_id!r}, {config_id!r})"
            ) from None

    def missing_configs(self, program_id: str, catalog: ConfigurationCatalog) -> tuple[str, ...]:
        return tuple(
            cid for cid in catalog.config_ids if (program_id, cid) not in self.records
        )

    def is_complete_for(self, program_id: str, catalog: ConfigurationCatalog) -> bool:
        return not self.missing_configs(program_id, catalog)

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class DatasetBundle:
    manifest: FeatureManifest
    features: FeatureMatrix
    catalog: ConfigurationCatalog
    timings: TimingTable

    def __post_init__(self) -> None:
        if len(self.manifest) != self.features.n_features:
            raise SchemaError(
                f"manifest lists {len(self.manifest)} features but matrix has "
                f"{self.features.n_features} columns"
            )
        programs = set(self.features.program_ids)
        configs = set(self.catalog.config_ids)
        for pid, cid in self.timings.records:
            if pid not in programs:
                raise UnknownIdError(f"timing row references unknown program {pid!r}")
            if cid not in configs:
                raise UnknownIdError(f"timing row references unknown config {cid!r}")

    @property
    def program_ids(self) -> tuple[str, ...]:
        return self.features.program_ids


# ---------------------------------------------------------------------------
# loading


def _read_rows(path: str | Path) -> tuple[list[str], list[list[str]], Path]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty, expected a header row") from None
        rows = [row for row in reader if row]
    return header, rows, path


def load_manifest(path: str | Path) -> FeatureManifest:
    header, rows, path = _read_rows(path)
    if header != ["feature_id", "description", "category"]:
        raise SchemaError(f"{path}: expected header feature_id,description,category")
    entries = []
    for row in rows:
        fid, desc, cat = (row + ["", ""])[:3]
        entries.append(ManifestEntry(fid, desc, cat if cat else None))
    return FeatureManifest(tuple(entries))


def load_feature_matrix(path: str | Path, manifest: FeatureManifest) -> FeatureMatrix:
    header, rows, path = _read_rows(path)
    expected = ["program_id", *manifest.feature_ids]
    if header != expected:
        for pos, (got, want) in enumerate(zip(header, expected)):
            if got != want:
                raise SchemaError(
                    f"{path}: column {pos} is {got!r}, expected {want!r}"
                )
        if len(header) < len(expected):
            raise SchemaError(f"{path}: missing column {expected[len(header)]!r}")
        raise SchemaError(f"{path}: unexpected extra column {header[len(expected)]!r}")
    program_ids: list[str] = []
    values = np.empty((len(rows), len(manifest)), dtype=float)
    for i, row in enumerate(rows):
        if len(row) != len(expected):
            raise SchemaError(
                f"{path}: row {i + 2} has {len(row)} cells, expected {len(expected)}"
            )
        program_ids.append(row[0])
        for j, cell in enumerate(row[1:]):
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}: row {i + 2}, column {manifest.feature_ids[j]!r}: "
                    f"{cell!r} is not a number"
                ) from None
    if len(set(program_ids)) != len(program_ids):
        dupes = sorted({p for p in program_ids if program_ids.count(p) > 1})
        raise DuplicateIdError(f"{path}: duplicate program ids {dupes}")
    return FeatureMatrix(tuple(program_ids), values)


def load_catalog(path: str | Path) -> ConfigurationCatalog:
    header, rows, path = _read_rows(path)
    if header != ["config_id", "flags"]:
        raise SchemaError(f"{path}: expected header config_id,flags")
    entries = []
    for row in rows:
        cid = row[0]
        flags = tuple(row[1].split()) if len(row) > 1 else ()
        entries.append(ConfigEntry(cid, flags))
    return ConfigurationCatalog(tuple(entries))


def load_timing_table(
    path: str | Path, features: FeatureMatrix, catalog: ConfigurationCatalog
) -> TimingTable:
    header, rows, path = _read_rows(path)
    if header != ["program_id", "config_id", "mean_seconds", "repetitions"]:
        raise SchemaError(
            f"{path}: expected header program_id,config_id,mean_seconds,repetitions"
        )
    programs = set(features.program_ids)
    configs = set(catalog.config_ids)
    records: dict[tuple[str, str], TimingRecord] = {}
    for i, row in enumerate(rows):
        if len(row) != 4:
            raise SchemaError(f"{path}: row {i + 2} has {len(row)} cells, expected 4")
        pid, cid, secs_s, reps_s = row
        if pid not in programs:
            raise UnknownIdError(f"{path}: row {i + 2}: unknown program id {pid!r}")
        if cid not in configs:
            raise UnknownIdError(f"{path}: row {i + 2}: unknown config id {cid!r}")
        try:
            secs = float(secs_s)
        except ValueError:
            raise ParseError(
                f"{path}: row {i + 2}, column 'mean_seconds': {secs_s!r} is not a number"
            ) from None
        try:
            reps = int(reps_s)
        except ValueError:
            raise ParseError(
                f"{path}: row {i + 2}, column 'repetitions': {reps_s!r} is not an integer"
            ) from None
        if not np.isfinite(secs) or secs <= 0:
            raise DatasetError(
                f"{path}: row {i + 2}: mean_seconds must be positive, got {secs_s}"
            )
        if reps < 1:
            raise DatasetError(
                f"{path}: row {i + 2}: repetitions must be positive, got {reps}"
            )
        key = (pid, cid)
        if key in records:
            raise DuplicateIdError(f"{path}: duplicate timing row for {key}")
        records[key] = TimingRecord(secs, reps)
    return TimingTable(records)


def load_bundle(
    features_path: str | Path,
    timings_path: str | Path,
    configs_path: str | Path,
    manifest_path: str | Path | None = None,
) -> DatasetBundle:
    manifest = load_manifest(manifest_path) if manifest_path else default_manifest()
    features = load_feature_matrix(features_path, manifest)
    catalog = load_catalog(configs_path)
    timings = load_timing_table(timings_path, features, catalog)
    return DatasetBundle(manifest, features, catalog, timings)


# ---------------------------------------------------------------------------
# writing (repr keeps float round trips bit-exact)


def write_manifest(manifest: FeatureManifest, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["feature_id", "description", "category"])
        for e in manifest.entries:
            w.writerow([e.feature_id, e.description, e.category or ""])


def write_feature_matrix(
    features: FeatureMatrix, manifest: FeatureManifest, path: str | Path
) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["program_id", *manifest.feature_ids])
        for pid, row in zip(features.program_ids, features.values):
            w.writerow([pid, *(repr(float(v)) for v in row)])


def write_catalog(catalog: ConfigurationCatalog, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["config_id", "flags"])
        for e in catalog.entries:
            w.writerow([e.config_id, " ".join(e.flags)])


def write_timing_table(timings: TimingTable, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["program_id", "config_id", "mean_seconds", "repetitions"])
        for (pid, cid), rec in timings.records.items():
            w.writerow([pid, cid, repr(float(rec.mean_seconds)), rec.repetitions])


# ---------------------------------------------------------------------------
# standardization


def standardize(features: FeatureMatrix, manifest: FeatureManifest) -> StandardizedMatrix:
    """Z-score each column (sample standard deviation, denominator n-1).

    Zero-variance columns carry no information and cannot be scaled; they are
    dropped from the output and reported in ``dropped_columns``. Retained
    columns keep their manifest order.

    Raises InsufficientDataError when fewer than two programs are present.
    """
    if features.n_programs < 2:
        raise InsufficientDataError(
            "standardization needs at least 2 programs to estimate a variance"
        )
    if len(manifest) != features.n_features:
        raise SchemaError(
            f"manifest lists {len(manifest)} features but matrix has "
            f"{features.n_features} columns"
        )
    values = features.values
    means = values.mean(axis=0)
    stds = values.std(axis=0, ddof=1)
    keep = stds > 0.0
    cols = np.arange(values.shape[1])
    retained = cols[keep]
    dropped = cols[~keep]
    z = (values[:, retained] - means[retained]) / stds[retained]
    ids = manifest.feature_ids
    return StandardizedMatrix(
        program_ids=features.program_ids,
        feature_ids=tuple(ids[j] for j in retained),
        values=z,
        means=means[retained],
        stds=stds[retained],
        dropped_columns=tuple(ids[j] for j in dropped),
    )
