"""Problem bundle directories.

A bundle is: manifest.json (type, seed, suite, params, file table, hashes),
participant-visible dataset/aux files at the top level, and a hidden/
subdirectory holding truth the arena never serves to participants.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .dataset import Dataset, load_dataset, write_dataset
from .errors import BundleHashMismatch, ParseError
from .models import LinearModel, SuiteConfig, canonical_json, sha256_text
from .problems import (
    DebuggingProblem,
    SelectionProblem,
    SliceCase,
    SlicingProblem,
    TestSetProblem,
    TrainingSetProblem,
    ValuationCase,
    ValuationProblem,
)

MANIFEST_NAME = "manifest.json"


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")


class _BundleWriter:
    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "hidden").mkdir(exist_ok=True)
        self.files = {"public": {}, "hidden": {}}

    def dataset(self, section: str, key: str, ds: Dataset):
        rel = (f"hidden/{key}.json" if section == "hidden" else f"{key}.json")
        write_dataset(ds, self.root / rel)
        self.files[section][key] = rel

    def json(self, section: str, key: str, obj):
        rel = (f"hidden/{key}.json" if section == "hidden" else f"{key}.json")
        _write_json(self.root / rel, obj)
        self.files[section][key] = rel

    def finish(self, problem, params: dict) -> str:
        hashes = {}
        for section in self.files.values():
            for rel in section.values():
                hashes[rel] = _sha256_file(self.root / rel)
                csv_rel = rel[:-5] + ".csv"
                if (self.root / csv_rel).exists():
                    hashes[csv_rel] = _sha256_file(self.root / csv_rel)
        manifest = {
            "task_type": problem.task_type,
            "problem_id": problem.problem_id,
            "seed": problem.seed,
            "suite": problem.suite.to_dict(),
            "params": params,
            "files": self.files,
            "hashes": {k: hashes[k] for k in sorted(hashes)},
        }
        _write_json(self.root / MANIFEST_NAME, manifest)
        return sha256_text(canonical_json(manifest))


def write_bundle(problem, root) -> str:
    """Serialize a problem to a bundle directory; returns the manifest hash."""
    w = _BundleWriter(root)
    if isinstance(problem, TrainingSetProblem):
        w.dataset("public", "reference_train", problem.reference_train)
        w.dataset("public", "validation", problem.validation)
        w.dataset("hidden", "test", problem.hidden_test)
        w.json("hidden", "meta", {"baseline_accuracy": problem.baseline_accuracy})
        return w.finish(problem, {"size_cap": problem.size_cap})
    if isinstance(problem, TestSetProblem):
        w.dataset("public", "reference_train", problem.reference_train)
        w.dataset("public", "pool", problem.pool)
        w.dataset("hidden", "pool_truth", problem.pool_truth)
        w.json("hidden", "models", [m.to_dict() for m in problem.frozen_models])
        return w.finish(problem, {"submission_cap": problem.submission_cap})
    if isinstance(problem, SelectionProblem):
        w.dataset("public", "pool", problem.pool)
        w.dataset("public", "probe", problem.probe)
        w.dataset("hidden", "test", problem.hidden_test)
        has_concealed = problem.concealed is not None
        if has_concealed:
            write_bundle(problem.concealed, Path(root) / "hidden" / "concealed")
        return w.finish(problem, {"budget": problem.budget,
                                  "concealed": has_concealed})
    if isinstance(problem, DebuggingProblem):
        w.dataset("public", "dirty_train", problem.dirty_train)
        w.dataset("public", "validation", problem.validation)
        w.json("public", "candidates", problem.candidates)
        w.dataset("hidden", "test", problem.hidden_test)
        w.json("hidden", "repairs", problem.repairs)
        return w.finish(problem, {"mode": problem.mode, "budget": problem.budget,
                                  "step": problem.step})
    if isinstance(problem, ValuationProblem):
        truth = {}
        for case in problem.cases:
            w.dataset("public", f"{case.case_id}_d_a", case.d_a)
            w.dataset("public", f"{case.case_id}_d_b", case.d_b)
            w.dataset("hidden", f"{case.case_id}_d_b_truth", case.d_b_truth)
            w.dataset("hidden", f"{case.case_id}_d_test", case.d_test)
            truth[case.case_id] = case.true_union_accuracy
        w.json("hidden", "truth", truth)
        return w.finish(problem, {"case_ids": [c.case_id for c in problem.cases]})
    if isinstance(problem, SlicingProblem):
        slices = {}
        for case in problem.cases:
            w.dataset("public", f"{case.case_id}_dataset", case.dataset)
            w.json("public", f"{case.case_id}_model", case.model.to_dict())
            slices[case.case_id] = {
                "slices": [sorted(s) for s in case.slices],
                "underperformance_gap": case.underperformance_gap,
                "realized_seed": case.realized_seed,
            }
        w.json("hidden", "slices", slices)
        return w.finish(problem, {"k": problem.k,
                                  "case_ids": [c.case_id for c in problem.cases]})
    raise ParseError(f"cannot serialize problem type {type(problem).__name__}")


def read_manifest(root) -> dict:
    path = Path(root) / MANIFEST_NAME
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read bundle manifest at {path}: {exc}")


def manifest_hash(manifest: dict) -> str:
    return sha256_text(canonical_json(manifest))


def public_manifest(manifest: dict) -> dict:
    """Participant-facing view: the hidden file table is stripped entirely."""
    out = {k: v for k, v in manifest.items() if k != "hashes"}
    out["files"] = {"public": manifest["files"]["public"]}
    return out


def verify_bundle(root) -> dict:
    """Recompute every file hash against the manifest; returns the manifest."""
    root = Path(root)
    manifest = read_manifest(root)
    for rel, want in manifest["hashes"].items():
        path = root / rel
        if not path.exists():
            raise BundleHashMismatch(f"bundle file missing: {rel}")
        got = _sha256_file(path)
        if got != want:
            raise BundleHashMismatch(f"hash mismatch for {rel}")
    return manifest


def load_bundle(root, verify: bool = True):
    """Reconstruct the problem object from a bundle directory."""
    root = Path(root)
    manifest = verify_bundle(root) if verify else read_manifest(root)
    suite = SuiteConfig.from_dict(manifest["suite"])
    params = manifest["params"]
    files = manifest["files"]

    def ds(section, key) -> Dataset:
        return load_dataset(root / files[section][key])

    def js(section, key):
        return json.loads((root / files[section][key]).read_text())

    kind = manifest["task_type"]
    pid, seed = manifest["problem_id"], manifest["seed"]
    if kind == "training_set":
        return TrainingSetProblem(pid, seed, suite, params["size_cap"],
                                  ds("public", "reference_train"),
                                  ds("public", "validation"),
                                  ds("hidden", "test"),
                                  js("hidden", "meta")["baseline_accuracy"])
    if kind == "test_set":
        return TestSetProblem(pid, seed, suite, params["submission_cap"],
                              ds("public", "reference_train"),
                              ds("public", "pool"), ds("hidden", "pool_truth"),
                              tuple(LinearModel.from_dict(d)
                                    for d in js("hidden", "models")))
    if kind == "selection":
        concealed = None
        if params.get("concealed"):
            concealed = load_bundle(root / "hidden" / "concealed", verify=verify)
        return SelectionProblem(pid, seed, suite, params["budget"],
                                ds("public", "pool"), ds("public", "probe"),
                                ds("hidden", "test"), concealed)
    if kind == "debugging":
        return DebuggingProblem(pid, seed, suite, params["mode"],
                                params["budget"], params["step"],
                                ds("public", "dirty_train"),
                                js("hidden", "repairs"),
                                js("public", "candidates"),
                                ds("public", "validation"),
                                ds("hidden", "test"))
    if kind == "valuation":
        truth = js("hidden", "truth")
        cases = tuple(
            ValuationCase(cid, ds("public", f"{cid}_d_a"),
                          ds("public", f"{cid}_d_b"),
                          ds("hidden", f"{cid}_d_b_truth"),
                          ds("hidden", f"{cid}_d_test"), truth[cid])
            for cid in params["case_ids"])
        return ValuationProblem(pid, seed, suite, cases)
    if kind == "slicing":
        info = js("hidden", "slices")
        cases = tuple(
            SliceCase(cid, ds("public", f"{cid}_dataset"),
                      LinearModel.from_dict(js("public", f"{cid}_model")),
                      tuple(frozenset(s) for s in info[cid]["slices"]),
                      info[cid]["underperformance_gap"],
                      info[cid]["realized_seed"])
            for cid in params["case_ids"])
        return SlicingProblem(pid, seed, suite, params["k"], cases)
    raise ParseError(f"unknown bundle task_type {kind!r}")
