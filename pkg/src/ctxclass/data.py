"""Dataset representation, schemas with feature roles, loaders, and splits.

Cells are either floats (continuous features), strings (discrete symbols), or
the MISSING sentinel.  Discrete symbols stay symbolic here; numeric encoding
is the preprocess module's job.
"""

from __future__ import annotations

import csv
import json
import random
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence


class LoadError(Exception):
    """Raised when an input file cannot be parsed into a Dataset."""


class _Missing:
    """Singleton marker for an absent cell value."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "MISSING"


MISSING = _Missing()

Cell = "float | str | _Missing"


class FeatureRole(Enum):
    CLASS = "class"
    PRIMARY = "primary"
    CONTEXTUAL = "contextual"


@dataclass(frozen=True)
class Feature:
    name: str
    role: FeatureRole
    kind: str  # "discrete" or "continuous"
    alphabet: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("discrete", "continuous"):
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if self.kind == "discrete" and not self.alphabet:
            raise ValueError(f"discrete feature {self.name!r} needs a non-empty alphabet")
        if self.kind == "continuous" and self.alphabet is not None:
            raise ValueError(f"continuous feature {self.name!r} must not carry an alphabet")


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature descriptions; exactly one feature has the class role."""

    features: tuple[Feature, ...]

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        n_class = sum(1 for f in self.features if f.role is FeatureRole.CLASS)
        if n_class != 1:
            raise ValueError(f"schema must have exactly one class feature, got {n_class}")

    def __len__(self):
        return len(self.features)

    def __iter__(self):
        return iter(self.features)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def index_of(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise KeyError(f"no feature named {name!r}")

    @property
    def class_index(self) -> int:
        return next(i for i, f in enumerate(self.features) if f.role is FeatureRole.CLASS)

    @property
    def class_feature(self) -> Feature:
        return self.features[self.class_index]

    @property
    def primary_indices(self) -> tuple[int, ...]:
        return tuple(i for i, f in enumerate(self.features) if f.role is FeatureRole.PRIMARY)

    @property
    def contextual_indices(self) -> tuple[int, ...]:
        return tuple(i for i, f in enumerate(self.features) if f.role is FeatureRole.CONTEXTUAL)

    def check_row(self, row: Sequence, where: str = "") -> None:
        if len(row) != len(self.features):
            raise ValueError(f"row{where} has {len(row)} cells, schema has {len(self.features)}")
        for f, cell in zip(self.features, row):
            if cell is MISSING:
                if f.role is FeatureRole.CLASS:
                    raise ValueError(f"class cell{where} is MISSING")
                continue
            if f.kind == "discrete":
                if not isinstance(cell, str) or cell not in f.alphabet:
                    raise ValueError(f"value {cell!r}{where} not in alphabet of {f.name!r}")
            else:
                if not isinstance(cell, (int, float)) or isinstance(cell, bool):
                    raise ValueError(f"continuous feature {f.name!r}{where} got {cell!r}")


@dataclass(frozen=True)
class Dataset:
    """Immutable table of observations conforming to a schema."""

    schema: FeatureSchema
    rows: tuple[tuple, ...]

    @classmethod
    def build(cls, schema: FeatureSchema, rows: Iterable[Sequence]) -> "Dataset":
        frozen = tuple(tuple(r) for r in rows)
        for i, r in enumerate(frozen):
            schema.check_row(r, where=f" (row {i})")
        return cls(schema, frozen)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def column(self, index: int) -> tuple:
        return tuple(r[index] for r in self.rows)

    def class_labels(self) -> tuple[str, ...]:
        return self.column(self.schema.class_index)

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset(self.schema, tuple(self.rows[i] for i in indices))

    def with_rows(self, rows: Iterable[Sequence]) -> "Dataset":
        return Dataset.build(self.schema, rows)

    def missing_count(self) -> int:
        return sum(1 for r in self.rows for c in r if c is MISSING)


# ---------------------------------------------------------------------------
# UCI loaders

VOWEL_TRAIN_ROWS = 528
VOWEL_TEST_ROWS = 462


def _vowel_schema(speakers: Sequence[str]) -> FeatureSchema:
    feats = [
        Feature("speaker", FeatureRole.CONTEXTUAL, "discrete", tuple(speakers)),
        Feature("sex", FeatureRole.CONTEXTUAL, "discrete", ("0", "1")),
    ]
    feats += [Feature(f"f{i}", FeatureRole.PRIMARY, "continuous") for i in range(1, 11)]
    feats.append(Feature("vowel", FeatureRole.CLASS, "discrete", tuple(str(i) for i in range(11))))
    return FeatureSchema(tuple(feats))


def _parse_vowel_file(path) -> list[tuple[int, str, str, list[float], str]]:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 14:
                raise LoadError(f"{path}: line {lineno}: expected 14 fields, got {len(fields)}")
            try:
                flag = int(fields[0])
                speaker = str(int(fields[1]))
                sex = str(int(fields[2]))
                values = [float(v) for v in fields[3:13]]
                vowel = str(int(fields[13]))
            except ValueError as exc:
                raise LoadError(f"{path}: line {lineno}: {exc}") from None
            rows.append((flag, speaker, sex, values, vowel))
    if not rows:
        raise LoadError(f"{path}: file contains no data rows")
    return rows


def load_vowel(train_path, test_path) -> tuple[Dataset, Dataset]:
    """Load the vowel benchmark (whitespace layout: flag, speaker, sex, 10 reals, class).

    Accepts either pre-split files or the combined file passed for both paths;
    when a file mixes train and test flags, rows are filtered by flag
    (0 = train, 1 = test).
    """
    raw_train = _parse_vowel_file(train_path)
    raw_test = _parse_vowel_file(test_path)

    def select(raw, wanted_flag):
        flags = {r[0] for r in raw}
        if len(flags) > 1:
            return [r for r in raw if r[0] == wanted_flag]
        return raw

    tr = select(raw_train, 0)
    te = select(raw_test, 1)
    speakers = sorted({r[1] for r in tr} | {r[1] for r in te}, key=lambda s: (len(s), s))
    schema = _vowel_schema(speakers)

    def to_rows(raw):
        return [(spk, sex, *vals, vowel) for _, spk, sex, vals, vowel in raw]

    train = Dataset.build(schema, to_rows(tr))
    test = Dataset.build(schema, to_rows(te))
    if train.n_rows != VOWEL_TRAIN_ROWS:
        warnings.warn(f"vowel train has {train.n_rows} rows, expected {VOWEL_TRAIN_ROWS}")
    if test.n_rows != VOWEL_TEST_ROWS:
        warnings.warn(f"vowel test has {test.n_rows} rows, expected {VOWEL_TEST_ROWS}")
    train_speakers = set(train.column(0))
    if train_speakers & set(test.column(0)):
        warnings.warn("vowel train and test share speaker identities")
    return train, test


HEPATITIS_COLUMNS = (
    ("class", FeatureRole.CLASS, "discrete", ("die", "live")),
    ("age", FeatureRole.CONTEXTUAL, "continuous", None),
    ("sex", FeatureRole.CONTEXTUAL, "discrete", ("1", "2")),
    ("steroid", FeatureRole.PRIMARY, "discrete", ("1", "2")),
    ("antivirals", FeatureRole.PRIMARY, "discrete", ("1", "2")),
    ("fatigue", FeatureRole.PRIMARY, "discrete", ("1", "2")),
    ("malaise", FeatureRole.PRIMARY, "discrete", ("1", "2")),
    ("anorexia", FeatureRole.PRIMARY, "discrete", ("1", "2")),
    ("liver_big", FeatureRole.PRIMARY, "discrete", ("1", "2")),
    ("liver_firm", FeatureRole.PRIMARY, "discrete", ("1", "2")),
    ("spleen_palpable", FeatureRole.PRIMARY, "discrete", ("1", "2")),
    ("spiders", FeatureRole.PRIMARY, "discrete", ("1", "2")),
    ("ascites", FeatureRole.PRIMARY, "discrete", ("1", "2")),
    ("varices", FeatureRole.PRIMARY, "discrete", ("1", "2")),
    ("bilirubin", FeatureRole.PRIMARY, "continuous", None),
    ("alk_phosphate", FeatureRole.PRIMARY, "continuous", None),
    ("sgot", FeatureRole.PRIMARY, "continuous", None),
    ("albumin", FeatureRole.PRIMARY, "continuous", None),
    ("protime", FeatureRole.PRIMARY, "continuous", None),
    ("histology", FeatureRole.PRIMARY, "discrete", ("1", "2")),
)

# UCI encodes the class as 1/2; symbolic names avoid off-by-one mistakes.
HEPATITIS_CLASS_MAP = {"1": "die", "2": "live"}


def hepatitis_schema() -> FeatureSchema:
    return FeatureSchema(tuple(Feature(n, r, k, a) for n, r, k, a in HEPATITIS_COLUMNS))


def load_hepatitis(path) -> Dataset:
    """Load the UCI hepatitis file (comma layout, "?" for missing, class first)."""
    schema = hepatitis_schema()
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != len(schema):
                raise LoadError(
                    f"{path}: line {lineno}: expected {len(schema)} fields, got {len(fields)}"
                )
            row = []
            for feat, raw in zip(schema, fields):
                raw = raw.strip()
                if raw == "?":
                    row.append(MISSING)
                    continue
                if feat.name == "class":
                    if raw not in HEPATITIS_CLASS_MAP:
                        raise LoadError(f"{path}: line {lineno}: unknown class symbol {raw!r}")
                    row.append(HEPATITIS_CLASS_MAP[raw])
                elif feat.kind == "discrete":
                    if raw not in feat.alphabet:
                        raise LoadError(
                            f"{path}: line {lineno}: symbol {raw!r} not valid for {feat.name!r}"
                        )
                    row.append(raw)
                else:
                    try:
                        row.append(float(raw))
                    except ValueError:
                        raise LoadError(
                            f"{path}: line {lineno}: bad number {raw!r} for {feat.name!r}"
                        ) from None
            rows.append(row)
    if not rows:
        raise LoadError(f"{path}: file contains no data rows")
    return Dataset.build(schema, rows)


# ---------------------------------------------------------------------------
# Generic CSV + schema-sidecar loader

_ROLE_BY_NAME = {r.value: r for r in FeatureRole}


def load_schema(schema_path) -> FeatureSchema:
    """Read a JSON sidecar: a list of {name, role, kind, alphabet?} objects."""
    try:
        entries = json.loads(Path(schema_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise LoadError(f"{schema_path}: {exc}") from None
    if not isinstance(entries, list):
        raise LoadError(f"{schema_path}: schema sidecar must be a JSON list")
    feats = []
    for e in entries:
        try:
            role = _ROLE_BY_NAME[e["role"]]
            alphabet = tuple(e["alphabet"]) if e.get("alphabet") is not None else None
            feats.append(Feature(e["name"], role, e["kind"], alphabet))
        except (KeyError, TypeError, ValueError) as exc:
            raise LoadError(f"{schema_path}: bad schema entry {e!r}: {exc}") from None
    try:
        return FeatureSchema(tuple(feats))
    except ValueError as exc:
        raise LoadError(f"{schema_path}: {exc}") from None


def schema_to_json(schema: FeatureSchema) -> str:
    entries = []
    for f in schema:
        e = {"name": f.name, "role": f.role.value, "kind": f.kind}
        if f.alphabet is not None:
            e["alphabet"] = list(f.alphabet)
        entries.append(e)
    return json.dumps(entries, indent=2)


def load_table(path, schema_path) -> Dataset:
    """Load a comma-separated data file against its JSON schema sidecar."""
    schema = load_schema(schema_path)
    rows = []
    with open(path, newline="") as fh:
        for lineno, fields in enumerate(csv.reader(fh), start=1):
            if not fields:
                continue
            if len(fields) != len(schema):
                raise LoadError(
                    f"{path}: line {lineno}: expected {len(schema)} fields, got {len(fields)}"
                )
            row = []
            for feat, raw in zip(schema, fields):
                raw = raw.strip()
                if raw in ("?", ""):
                    row.append(MISSING)
                elif feat.kind == "discrete":
                    if raw not in feat.alphabet:
                        raise LoadError(
                            f"{path}: line {lineno}: symbol {raw!r} not valid for {feat.name!r}"
                        )
                    row.append(raw)
                else:
                    try:
                        row.append(float(raw))
                    except ValueError:
                        raise LoadError(
                            f"{path}: line {lineno}: bad number {raw!r} for {feat.name!r}"
                        ) from None
            rows.append(row)
    try:
        return Dataset.build(schema, rows)
    except ValueError as exc:
        raise LoadError(f"{path}: {exc}") from None


def write_table(dataset: Dataset, path, schema_path=None) -> None:
    """Write a dataset as CSV (floats via repr, so values round-trip exactly)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in dataset.rows:
            out = []
            for cell in row:
                if cell is MISSING:
                    out.append("?")
                elif isinstance(cell, str):
                    out.append(cell)
                else:
                    out.append(repr(float(cell)))
            writer.writerow(out)
    if schema_path is not None:
        Path(schema_path).write_text(schema_to_json(dataset.schema) + "\n")


# ---------------------------------------------------------------------------
# Splits

def split_random(dataset: Dataset, n_train: int, seed: int) -> tuple[Dataset, Dataset]:
    """Unstratified random partition via Fisher-Yates (Python's MT19937 shuffle).

    The PRNG identity is part of the interface: the same (dataset, n_train,
    seed) always yields the same partition.  Row order inside each part
    follows the original dataset order.
    """
    n = dataset.n_rows
    if not 0 < n_train < n:
        raise ValueError(f"n_train must be in (0, {n}), got {n_train}")
    indices = list(range(n))
    random.Random(seed).shuffle(indices)
    train_idx = sorted(indices[:n_train])
    test_idx = sorted(indices[n_train:])
    return dataset.subset(train_idx), dataset.subset(test_idx)


# ---------------------------------------------------------------------------
# Joint distributions and synthetic generation

@dataclass(frozen=True)
class JointSpec:
    """Explicit discrete joint distribution: variables, alphabets, tuple -> prob.

    The first variable is taken as the class when sampling.
    """

    variables: tuple[str, ...]
    alphabets: tuple[tuple[str, ...], ...]
    probs: Mapping[tuple[str, ...], float] = field(hash=False)

    def __post_init__(self):
        if len(self.variables) != len(self.alphabets):
            raise ValueError("one alphabet per variable required")
        total = 0.0
        for tup, p in self.probs.items():
            if len(tup) != len(self.variables):
                raise ValueError(f"tuple {tup!r} does not match variable count")
            for sym, alpha in zip(tup, self.alphabets):
                if sym not in alpha:
                    raise ValueError(f"symbol {sym!r} not in alphabet")
            if p < 0:
                raise ValueError(f"negative probability for {tup!r}")
            total += p
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total!r}, not 1")

    @classmethod
    def from_json(cls, text: str) -> "JointSpec":
        doc = json.loads(text)
        variables = tuple(v["name"] for v in doc["variables"])
        alphabets = tuple(tuple(v["values"]) for v in doc["variables"])
        probs = {tuple(entry["tuple"]): float(entry["prob"]) for entry in doc["probabilities"]}
        return cls(variables, alphabets, probs)

    def to_json(self) -> str:
        doc = {
            "variables": [
                {"name": n, "values": list(a)} for n, a in zip(self.variables, self.alphabets)
            ],
            "probabilities": [
                {"tuple": list(t), "prob": p} for t, p in sorted(self.probs.items())
            ],
        }
        return json.dumps(doc, indent=2)

    def schema(self) -> FeatureSchema:
        feats = [Feature(self.variables[0], FeatureRole.CLASS, "discrete", self.alphabets[0])]
        feats += [
            Feature(n, FeatureRole.PRIMARY, "discrete", a)
            for n, a in zip(self.variables[1:], self.alphabets[1:])
        ]
        return FeatureSchema(tuple(feats))


def sample_from(spec: JointSpec, n: int, seed: int) -> Dataset:
    """Draw n i.i.d. rows from an explicit joint distribution."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    tuples = sorted(spec.probs)
    cumulative = []
    total = 0.0
    for t in tuples:
        total += spec.probs[t]
        cumulative.append(total)
    rng = random.Random(seed)
    rows = []
    for _ in range(n):
        u = rng.random() * total
        lo, hi = 0, len(tuples) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if u <= cumulative[mid]:
                hi = mid
            else:
                lo = mid + 1
        rows.append(tuples[lo])
    return Dataset.build(spec.schema(), rows)


@dataclass(frozen=True)
class PlantedContextParams:
    """Generator parameters for the synthetic context-shift benchmark.

    Each primary feature is class signal (class index, spaced 1.0 apart)
    plus ``shift`` times a continuous context value plus Gaussian noise.
    Train and test draw their context from disjoint ranges, so a classifier
    that ignores context faces an out-of-range offset at test time.
    """

    n_classes: int = 4
    n_primary: int = 3
    n_train: int = 200
    n_test: int = 200
    shift: float = 5.0
    noise: float = 0.1
    train_context: tuple[float, float] = (0.0, 1.0)
    test_context: tuple[float, float] = (2.0, 3.0)

    def __post_init__(self):
        if self.n_classes < 2 or self.n_primary < 1:
            raise ValueError("need at least 2 classes and 1 primary feature")
        if self.n_train < self.n_classes or self.n_test < 1:
            raise ValueError("too few rows requested")
        if self.noise < 0 or self.shift < 0:
            raise ValueError("shift and noise must be nonnegative")
        for lo, hi in (self.train_context, self.test_context):
            if not lo < hi:
                raise ValueError("context ranges must be non-degenerate (lo < hi)")


def planted_context_schema(params: PlantedContextParams) -> FeatureSchema:
    feats = [Feature("condition", FeatureRole.CONTEXTUAL, "continuous")]
    feats += [Feature(f"p{i}", FeatureRole.PRIMARY, "continuous") for i in range(1, params.n_primary + 1)]
    feats.append(
        Feature(
            "class",
            FeatureRole.CLASS,
            "discrete",
            tuple(f"c{i}" for i in range(params.n_classes)),
        )
    )
    return FeatureSchema(tuple(feats))


def plant_context_dataset(
    params: PlantedContextParams, seed: int
) -> tuple[Dataset, Dataset]:
    """Generate a train/test pair whose contexts do not overlap."""
    schema = planted_context_schema(params)
    rng = random.Random(seed)

    def make(n: int, ctx_range: tuple[float, float]) -> Dataset:
        lo, hi = ctx_range
        rows = []
        for r in range(n):
            cls = r % params.n_classes  # every class present in every set
            c = rng.uniform(lo, hi)
            feats = [
                float(cls) + params.shift * c + params.noise * rng.gauss(0.0, 1.0)
                for _ in range(params.n_primary)
            ]
            rows.append((c, *feats, f"c{cls}"))
        return Dataset.build(schema, rows)

    return make(params.n_train, params.train_context), make(params.n_test, params.test_context)
