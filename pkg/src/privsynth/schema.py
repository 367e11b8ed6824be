"""Categorical dataset schemas, CSV ingestion, one-hot encoding, and binning.

A dataset is a table of categorical features. Each feature i has a fixed,
ordered list of t_i category labels; a row stores one category index per
feature. The one-hot layout concatenates, per feature, a block of t_i binary
columns, so the encoded width is d_prime = sum(t_i). Column offsets into that
layout are owned by the Schema and shared by every module downstream.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class SchemaError(ValueError):
    """Data does not conform to the schema (bad label, ragged row, ...)."""


@dataclass(frozen=True)
class FeatureSpec:
    """One categorical feature: a name plus its ordered category labels."""

    name: str
    categories: tuple[str, ...]

    def __post_init__(self):
        if len(self.categories) < 1:
            raise SchemaError(f"feature {self.name!r} has no categories")
        if len(set(self.categories)) != len(self.categories):
            raise SchemaError(f"feature {self.name!r} has duplicate categories")

    @property
    def cardinality(self) -> int:
        return len(self.categories)


@dataclass(frozen=True)
class Schema:
    """Ordered feature list with the derived one-hot column layout."""

    features: tuple[FeatureSpec, ...]

    def __post_init__(self):
        if len(self.features) == 0:
            raise SchemaError("schema has no features")
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate feature names")

    @property
    def d(self) -> int:
        return len(self.features)

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(f.cardinality for f in self.features)

    @property
    def offsets(self) -> tuple[int, ...]:
        """Starting one-hot column of each feature block."""
        out, acc = [], 0
        for f in self.features:
            out.append(acc)
            acc += f.cardinality
        return tuple(out)

    @property
    def d_prime(self) -> int:
        return sum(f.cardinality for f in self.features)

    def feature_names(self) -> list[str]:
        return [f.name for f in self.features]

    def to_json_dict(self) -> list[dict]:
        return [{"name": f.name, "categories": list(f.categories)} for f in self.features]

    @classmethod
    def from_json_dict(cls, obj: list[dict]) -> "Schema":
        return cls(tuple(FeatureSpec(e["name"], tuple(e["categories"])) for e in obj))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Schema":
        return cls.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def schema_from_cardinalities(t, prefix: str = "f") -> Schema:
    """Convenience constructor: features named f0, f1, ... with integer labels."""
    feats = []
    for i, ti in enumerate(t):
        feats.append(FeatureSpec(f"{prefix}{i}", tuple(str(v) for v in range(ti))))
    return Schema(tuple(feats))


@dataclass(frozen=True)
class DiscreteDataset:
    """n rows of per-feature category indices under a Schema."""

    schema: Schema
    rows: np.ndarray  # (n, d) integer category indices

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        object.__setattr__(self, "rows", rows)
        if rows.ndim != 2 or rows.shape[1] != self.schema.d:
            raise SchemaError(f"rows must be (n, {self.schema.d}), got {rows.shape}")
        t = np.asarray(self.schema.cardinalities)
        if rows.size and ((rows < 0).any() or (rows >= t[None, :]).any()):
            raise SchemaError("category index out of range for its feature")

    @property
    def n(self) -> int:
        return self.rows.shape[0]


@dataclass(frozen=True)
class OneHotDataset:
    """One-hot encoded rows: per feature block, exactly one 1 per row."""

    schema: Schema
    bits: np.ndarray  # (n, d_prime) in {0, 1}

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        object.__setattr__(self, "bits", bits)
        if bits.ndim != 2 or bits.shape[1] != self.schema.d_prime:
            raise SchemaError(f"bits must be (n, {self.schema.d_prime}), got {bits.shape}")

    @property
    def n(self) -> int:
        return self.bits.shape[0]

    def as_relaxed(self) -> "RelaxedDataset":
        return RelaxedDataset(self.schema, self.bits.astype(np.float64))


@dataclass(frozen=True)
class RelaxedDataset:
    """Real-valued stand-in for a one-hot dataset: an (n_rows, d_prime) matrix.

    Rows are interpretable per feature block as (sparse) probability
    distributions once normalized; see privsynth.projection.normalize_rows.
    """

    schema: Schema
    data: np.ndarray  # (n_rows, d_prime) float

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        object.__setattr__(self, "data", data)
        if data.ndim != 2 or data.shape[1] != self.schema.d_prime:
            raise SchemaError(f"data must be (n, {self.schema.d_prime}), got {data.shape}")

    @property
    def n(self) -> int:
        return self.data.shape[0]


def one_hot(dataset: DiscreteDataset) -> OneHotDataset:
    """Encode category indices to the concatenated one-hot layout."""
    schema = dataset.schema
    n = dataset.n
    bits = np.zeros((n, schema.d_prime), dtype=np.uint8)
    offsets = np.asarray(schema.offsets)
    cols = dataset.rows + offsets[None, :]
    bits[np.arange(n)[:, None], cols] = 1
    return OneHotDataset(schema, bits)


def decode_row(bits_row, schema: Schema) -> np.ndarray:
    """Invert one-hot encoding for a single row.

    Raises SchemaError (naming the feature) if any block does not contain
    exactly one 1.
    """
    bits_row = np.asarray(bits_row)
    if bits_row.shape != (schema.d_prime,):
        raise SchemaError(f"expected length-{schema.d_prime} row, got {bits_row.shape}")
    out = np.empty(schema.d, dtype=np.int64)
    for i, (off, ti) in enumerate(zip(schema.offsets, schema.cardinalities)):
        block = bits_row[off : off + ti]
        hot = np.flatnonzero(block == 1)
        if hot.size != 1 or block.sum() != 1:
            raise SchemaError(f"feature {i} block has {block.sum()} ones, expected exactly 1")
        out[i] = hot[0]
    return out


def decode(encoded: OneHotDataset) -> DiscreteDataset:
    """Invert one-hot encoding for a whole dataset."""
    rows = np.stack([decode_row(r, encoded.schema) for r in encoded.bits]) if encoded.n else np.zeros((0, encoded.schema.d), dtype=np.int64)
    return DiscreteDataset(encoded.schema, rows)


def load_csv(path, schema: Schema | None = None) -> DiscreteDataset:
    """Load a categorical dataset from a UTF-8 CSV file with a header row.

    Without a schema, categories are inferred per column as the sorted
    distinct labels (lexicographic), which makes inference reproducible.
    With a schema, the header must match the schema's feature names and every
    cell must be a known label. Empty cells are rejected; this pipeline
    assumes complete categorical data.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected a header row")
        raw = list(reader)

    d = len(header)
    for r, row in enumerate(raw):
        if len(row) != d:
            raise SchemaError(f"{path}: row {r} has {len(row)} cells, expected {d}")
        for c, cell in enumerate(row):
            if cell == "":
                raise SchemaError(f"{path}: missing value at row {r}, column {header[c]!r}")

    if schema is None:
        feats = []
        for c, name in enumerate(header):
            labels = sorted({row[c] for row in raw})
            if not labels:
                labels = ["0"]  # empty data file: single placeholder category
            feats.append(FeatureSpec(name, tuple(labels)))
        schema = Schema(tuple(feats))
    else:
        if header != schema.feature_names():
            raise SchemaError(
                f"{path}: header {header} does not match schema features {schema.feature_names()}"
            )

    lookup = [{lab: j for j, lab in enumerate(f.categories)} for f in schema.features]
    rows = np.empty((len(raw), d), dtype=np.int64)
    for r, row in enumerate(raw):
        for c, cell in enumerate(row):
            try:
                rows[r, c] = lookup[c][cell]
            except KeyError:
                raise SchemaError(
                    f"{path}: unknown label {cell!r} at row {r}, column {header[c]!r}"
                ) from None
    return DiscreteDataset(schema, rows)


def save_csv(dataset: DiscreteDataset, path) -> None:
    """Write a dataset as CSV using the schema's category labels."""
    schema = dataset.schema
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(schema.feature_names())
        for row in dataset.rows:
            writer.writerow([schema.features[i].categories[v] for i, v in enumerate(row)])


def bin_numeric(values, num_bins: int, name: str = "binned") -> tuple[np.ndarray, FeatureSpec]:
    """Bucket real values into equal-width bins over [min, max].

    The maximum value maps to the last bin. A constant column collapses to a
    single bin regardless of num_bins. Bin labels record the interval
    endpoints.
    """
    if num_bins < 1:
        raise ValueError("num_bins must be >= 1")
    vals = np.asarray(values, dtype=np.float64)
    if vals.size == 0:
        raise ValueError("values must be non-empty")
    if not np.isfinite(vals).all():
        raise ValueError("values must all be finite")
    lo, hi = float(vals.min()), float(vals.max())
    if lo == hi:
        spec = FeatureSpec(name, (f"[{lo:.6g}, {hi:.6g}]",))
        return np.zeros(vals.shape[0], dtype=np.int64), spec
    scaled = (vals - lo) / (hi - lo) * num_bins
    idx = np.clip(scaled.astype(np.int64), 0, num_bins - 1)
    edges = lo + (hi - lo) * np.arange(num_bins + 1) / num_bins
    labels = [f"[{edges[b]:.6g}, {edges[b + 1]:.6g})" for b in range(num_bins - 1)]
    labels.append(f"[{edges[num_bins - 1]:.6g}, {edges[num_bins]:.6g}]")
    return idx, FeatureSpec(name, tuple(labels))
