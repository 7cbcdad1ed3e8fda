"""Readers for the participant-visible half of a problem bundle.

A bundle directory holds manifest.json plus one manifest/CSV pair per
dataset. The CSV schema is `example_id,label,f0..f{dim-1}`; an empty label
cell means unlabeled, an empty feature cell means missing.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class PublicDataset:
    id: str
    classes: tuple
    example_ids: tuple
    X: np.ndarray
    labels: tuple  # class name strings, None where unlabeled

    def __len__(self):
        return len(self.example_ids)

    def label_indices(self) -> np.ndarray:
        index = {c: i for i, c in enumerate(self.classes)}
        return np.array([-1 if l is None else index[l] for l in self.labels])


def load_public_dataset(manifest_path) -> PublicDataset:
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    dim = int(manifest["dim"])
    ids, rows, labels = [], [], []
    with open(manifest_path.parent / manifest["data"], newline="") as fh:
        reader = csv.reader(fh)
        next(reader)  # header
        for row in reader:
            ids.append(row[0])
            labels.append(row[1] or None)
            rows.append([float(v) if v else float("nan") for v in row[2:]])
    X = np.asarray(rows, dtype=np.float64).reshape(len(ids), dim)
    return PublicDataset(manifest["id"], tuple(manifest["classes"]),
                         tuple(ids), X, tuple(labels))


@dataclass(frozen=True)
class PublicBundle:
    manifest: dict
    datasets: dict  # key -> PublicDataset

    @property
    def task_type(self) -> str:
        return self.manifest["task_type"]

    @property
    def params(self) -> dict:
        return self.manifest["params"]

    @property
    def suite(self) -> dict:
        return self.manifest["suite"]

    @classmethod
    def load(cls, root) -> "PublicBundle":
        root = Path(root)
        manifest = json.loads((root / "manifest.json").read_text())
        datasets = {}
        for key, rel in manifest["files"]["public"].items():
            path = root / rel
            meta = json.loads(path.read_text())
            if isinstance(meta, dict) and "data" in meta and "dim" in meta:
                datasets[key] = load_public_dataset(path)
        return cls(manifest, datasets)
