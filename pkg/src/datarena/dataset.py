"""Embedding dataset container and its manifest/CSV file format.

A dataset is an ordered set of (example_id, embedding, label) rows.
Row order is canonical (sorted by example_id) so every downstream
computation is independent of on-disk ordering.  Missing feature values
are carried as NaN ("NULL" slots); missing labels as -1.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DuplicateIds, DimensionMismatch, ParseError

UNLABELED = -1


@dataclass(frozen=True)
class Dataset:
    id: str
    dim: int
    classes: tuple[str, ...]
    example_ids: tuple[str, ...]
    X: np.ndarray  # (n, dim) float64, NaN marks a NULL slot
    y: np.ndarray  # (n,) int64, UNLABELED marks a hidden/absent label
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def build(cls, id, dim, classes, example_ids, X, y=None) -> "Dataset":
        """Validate, canonicalize row order, and freeze the arrays."""
        example_ids = [str(e) for e in example_ids]
        if len(set(example_ids)) != len(example_ids):
            raise DuplicateIds(f"dataset {id!r} has duplicate example ids")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != dim:
            raise DimensionMismatch(
                f"dataset {id!r}: feature matrix is {X.shape}, expected (*, {dim})"
            )
        if y is None:
            y = np.full(X.shape[0], UNLABELED, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        if y.shape != (X.shape[0],):
            raise DimensionMismatch("label vector length does not match rows")
        if ((y < UNLABELED) | (y >= len(classes))).any():
            raise ParseError(f"dataset {id!r}: label index out of range")
        order = np.argsort(np.array(example_ids, dtype=object), kind="stable")
        example_ids = tuple(example_ids[i] for i in order)
        X = np.ascontiguousarray(X[order])
        y = np.ascontiguousarray(y[order])
        X.setflags(write=False)
        y.setflags(write=False)
        ds = cls(str(id), int(dim), tuple(classes), example_ids, X, y)
        object.__setattr__(ds, "_index", {e: i for i, e in enumerate(example_ids)})
        return ds

    def __post_init__(self):
        if not self._index:
            object.__setattr__(
                self, "_index", {e: i for i, e in enumerate(self.example_ids)}
            )

    def __len__(self) -> int:
        return len(self.example_ids)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Dataset)
            and self.id == other.id
            and self.dim == other.dim
            and self.classes == other.classes
            and self.example_ids == other.example_ids
            and np.array_equal(self.X, other.X, equal_nan=True)
            and np.array_equal(self.y, other.y)
        )

    def row_of(self, example_id: str) -> int:
        return self._index[example_id]

    def has_example(self, example_id: str) -> bool:
        return example_id in self._index

    @property
    def has_nulls(self) -> bool:
        return bool(np.isnan(self.X).any())

    @property
    def labeled(self) -> bool:
        return bool((self.y != UNLABELED).all()) and len(self) > 0

    def label_of(self, example_id: str) -> int:
        return int(self.y[self.row_of(example_id)])

    def subset(self, example_ids, id=None) -> "Dataset":
        rows = [self.row_of(e) for e in example_ids]
        return Dataset.build(
            id or self.id,
            self.dim,
            self.classes,
            [self.example_ids[i] for i in rows],
            self.X[rows],
            self.y[rows],
        )

    def without_labels(self, id=None) -> "Dataset":
        return Dataset.build(
            id or self.id, self.dim, self.classes, self.example_ids, self.X, None
        )

    def replace(self, X=None, y=None, id=None) -> "Dataset":
        return Dataset.build(
            id or self.id,
            self.dim,
            self.classes,
            self.example_ids,
            self.X if X is None else X,
            self.y if y is None else y,
        )


def _format_value(v: float) -> str:
    return "" if np.isnan(v) else repr(float(v))


def write_dataset(dataset: Dataset, manifest_path, data_name=None) -> Path:
    """Write a dataset as manifest JSON plus a sibling CSV; returns manifest path."""
    manifest_path = Path(manifest_path)
    data_name = data_name or manifest_path.stem + ".csv"
    header = ["example_id", "label"] + [f"f{i}" for i in range(dataset.dim)]
    with open(manifest_path.parent / data_name, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, eid in enumerate(dataset.example_ids):
            label = "" if dataset.y[i] == UNLABELED else dataset.classes[dataset.y[i]]
            writer.writerow([eid, label] + [_format_value(v) for v in dataset.X[i]])
    manifest = {
        "id": dataset.id,
        "dim": dataset.dim,
        "classes": list(dataset.classes),
        "data": data_name,
    }
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    return manifest_path


def load_dataset(manifest_path) -> Dataset:
    """Load a dataset from its manifest JSON. Features parse bit-exactly as float64."""
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read dataset manifest {manifest_path}: {exc}")
    dim = int(manifest["dim"])
    classes = list(manifest["classes"])
    class_index = {c: i for i, c in enumerate(classes)}
    ids, rows, labels = [], [], []
    csv_path = manifest_path.parent / manifest["data"]
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["example_id", "label"] + [f"f{i}" for i in range(dim)]
        if header != expected:
            raise ParseError(f"{csv_path}: unexpected header {header!r}")
        for row in reader:
            if len(row) != dim + 2:
                raise ParseError(f"{csv_path}: row with {len(row)} cells, expected {dim + 2}")
            ids.append(row[0])
            label = row[1]
            if label == "":
                labels.append(UNLABELED)
            elif label in class_index:
                labels.append(class_index[label])
            else:
                raise ParseError(f"{csv_path}: unknown class {label!r}")
            rows.append([float(c) if c != "" else np.nan for c in row[2:]])
    X = np.array(rows, dtype=np.float64).reshape(len(ids), dim)
    return Dataset.build(manifest["id"], dim, classes, ids, X, labels)
