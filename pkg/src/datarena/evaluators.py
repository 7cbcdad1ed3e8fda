"""One scoring engine per benchmark type.

Each evaluator consumes a problem plus a validated submission payload and
emits a ScoreRecord.  Evaluators are pure: identical (problem, submission)
pairs produce bit-identical records, breakdowns included.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import __version__ as HARNESS_VERSION
from .dataset import UNLABELED, Dataset
from .errors import (
    BudgetExceeded,
    DegenerateProblem,
    DimensionMismatch,
    EmptySubmission,
    EstimateOutOfRange,
    MissingEstimate,
    ParseError,
    TooManySlices,
    UnknownExample,
)
from .metrics import accuracy, check_ranking, precision_at_k
from .models import (
    aggregate,
    canonical_json,
    predict_labels,
    sha256_text,
    train_suite,
)
from .problems import (
    DebuggingProblem,
    SelectionProblem,
    SlicingProblem,
    TestSetProblem,
    TrainingSetProblem,
    ValuationProblem,
)

DIVISIONS = ("open", "closed")

GAP_CLAMP = (-1.0, 2.0)  # leaderboard display range; raw value kept in breakdown
DEGENERATE_EPS = 1e-9
INSPECTION_TARGET = 0.95  # fraction of clean accuracy the walk must reach


@dataclass(frozen=True)
class Submission:
    task_id: str
    division: str
    payload: dict
    method_description: str = ""
    submitter: str = "anonymous"
    regeneration_artifact: dict | None = None  # {"command": str, "output_hash": str}

    def to_dict(self):
        d = {"task_id": self.task_id, "division": self.division,
             "payload": self.payload, "method_description": self.method_description,
             "submitter": self.submitter}
        if self.regeneration_artifact is not None:
            d["regeneration_artifact"] = self.regeneration_artifact
        return d

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(str(d["task_id"]), str(d["division"]), d["payload"],
                       str(d.get("method_description", "")),
                       str(d.get("submitter", "anonymous")),
                       d.get("regeneration_artifact"))
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed submission envelope: {exc}")

    @property
    def payload_hash(self) -> str:
        return sha256_text(canonical_json(self.payload))


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    def add(self, code: str, detail: str):
        self.violations.append({"code": code, "detail": detail})

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self):
        return {"ok": self.ok, "violations": self.violations}


@dataclass(frozen=True)
class ScoreRecord:
    submission_id: str
    metric_name: str
    value: float
    breakdown: dict
    provenance: dict
    concealed: bool = False

    def to_dict(self):
        return {"submission_id": self.submission_id, "metric_name": self.metric_name,
                "value": self.value, "breakdown": self.breakdown,
                "provenance": self.provenance, "concealed": self.concealed}

    @classmethod
    def from_dict(cls, d):
        return cls(d["submission_id"], d["metric_name"], d["value"],
                   d["breakdown"], d["provenance"], d.get("concealed", False))

    def to_json(self) -> str:
        return canonical_json(self.to_dict())


def problem_hash(problem) -> str:
    return sha256_text(canonical_json(
        {"problem_id": problem.problem_id, "seed": problem.seed,
         "type": problem.task_type, "suite": problem.suite.hash}))


def _record(problem, submission_id, value, breakdown, concealed=False):
    name, _ = problem.metric
    return ScoreRecord(submission_id, name, float(value), breakdown,
                       {"problem_hash": problem_hash(problem),
                        "suite_hash": problem.suite.hash,
                        "harness_version": HARNESS_VERSION},
                       concealed)


# --- submission validation ------------------------------------------------

def _check_id_list(report, ids, pool: Dataset, what: str):
    seen = set()
    for e in ids:
        if e in seen:
            report.add("DuplicateId", f"{what}: duplicate id {e!r}")
        seen.add(e)
        if not pool.has_example(e):
            report.add("ForeignExample", f"{what}: id {e!r} not in candidate pool")


def validate(submission: Submission, problem) -> ValidationReport:
    """Structural and budget checks; violations are report content, not errors."""
    report = ValidationReport()
    if submission.division not in DIVISIONS:
        report.add("UnknownDivision", f"division {submission.division!r}")
    if submission.division == "closed" and not submission.regeneration_artifact:
        report.add("MissingArtifact",
                   "closed division requires a regeneration artifact")
    payload = submission.payload
    if not isinstance(payload, dict):
        report.add("MalformedPayload", "payload must be a JSON object")
        return report

    if isinstance(problem, SelectionProblem):
        ids = payload.get("selected_ids")
        if not isinstance(ids, list):
            report.add("MalformedPayload", "selection payload needs 'selected_ids'")
            return report
        _check_id_list(report, ids, problem.pool, "selected_ids")
        if len(ids) > problem.budget:
            report.add("BudgetExceeded",
                       f"{len(ids)} ids submitted, budget is {problem.budget}")

    elif isinstance(problem, TrainingSetProblem):
        examples = payload.get("examples")
        if not isinstance(examples, list):
            report.add("MalformedPayload", "training-set payload needs 'examples'")
            return report
        if len(examples) > problem.size_cap:
            report.add("BudgetExceeded",
                       f"{len(examples)} examples, cap is {problem.size_cap}")
        seen = set()
        for ex in examples:
            eid = ex.get("example_id") if isinstance(ex, dict) else None
            if eid is None or "features" not in ex or "label" not in ex:
                report.add("MalformedPayload",
                           "each example needs example_id, label, features")
                return report
            if eid in seen:
                report.add("DuplicateId", f"duplicate id {eid!r}")
            seen.add(eid)
            if len(ex["features"]) != problem.reference_train.dim:
                report.add("DimensionMismatch",
                           f"example {eid!r} has {len(ex['features'])} features, "
                           f"expected {problem.reference_train.dim}")
            if ex["label"] not in problem.reference_train.classes:
                report.add("LabelNotAllowed", f"label {ex['label']!r} unknown")

    elif isinstance(problem, TestSetProblem):
        examples = payload.get("examples")
        if not isinstance(examples, list):
            report.add("MalformedPayload", "test-set payload needs 'examples'")
            return report
        if len(examples) > problem.submission_cap:
            report.add("BudgetExceeded",
                       f"{len(examples)} examples, cap is {problem.submission_cap}")
        seen = set()
        for ex in examples:
            eid = ex.get("example_id") if isinstance(ex, dict) else None
            if eid is None or "label" not in ex:
                report.add("MalformedPayload", "each entry needs example_id and label")
                return report
            if eid in seen:
                report.add("DuplicateId", f"duplicate id {eid!r}")
            seen.add(eid)
            if not problem.pool.has_example(eid):
                report.add("ForeignExample", f"id {eid!r} not in candidate pool")
            if ex["label"] not in problem.allowed_labels:
                report.add("LabelNotAllowed", f"label {ex['label']!r} not allowed")

    elif isinstance(problem, DebuggingProblem):
        if problem.mode == "gap":
            ids = payload.get("repair_ids")
            if not isinstance(ids, list):
                report.add("MalformedPayload", "debugging payload needs 'repair_ids'")
                return report
            _check_id_list(report, ids, problem.dirty_train, "repair_ids")
            if problem.budget is not None and len(ids) > problem.budget:
                report.add("BudgetExceeded",
                           f"{len(ids)} repairs, budget is {problem.budget}")
        else:
            ids = payload.get("priority")
            if not isinstance(ids, list):
                report.add("MalformedPayload", "debugging payload needs 'priority'")
                return report
            _check_id_list(report, ids, problem.dirty_train, "priority")

    elif isinstance(problem, ValuationProblem):
        estimates = payload.get("estimates")
        if not isinstance(estimates, dict):
            report.add("MalformedPayload", "valuation payload needs 'estimates'")
            return report
        known = {c.case_id for c in problem.cases}
        for case_id, value in estimates.items():
            if case_id not in known:
                report.add("ForeignExample", f"unknown problem {case_id!r}")
            elif not isinstance(value, (int, float)) or not 0.0 <= value <= 1.0:
                report.add("EstimateOutOfRange",
                           f"estimate for {case_id!r} must be in [0,1]")
        for case in problem.cases:
            if case.case_id not in estimates:
                report.add("MissingEstimate", f"no estimate for {case.case_id!r}")

    elif isinstance(problem, SlicingProblem):
        rankings = payload.get("rankings")
        if not isinstance(rankings, dict):
            report.add("MalformedPayload", "slicing payload needs 'rankings'")
            return report
        cases = {c.case_id: c for c in problem.cases}
        for case_id, case_rankings in rankings.items():
            case = cases.get(case_id)
            if case is None:
                report.add("ForeignExample", f"unknown problem {case_id!r}")
                continue
            if not isinstance(case_rankings, list) or not case_rankings:
                report.add("MalformedPayload",
                           f"{case_id}: needs a list of 1-5 rankings")
                continue
            if len(case_rankings) > 5:
                report.add("TooManySlices",
                           f"{case_id}: {len(case_rankings)} rankings, max is 5")
            for ranking in case_rankings:
                if len(ranking) < problem.k:
                    report.add("RankingTooShort",
                               f"{case_id}: ranking shorter than k={problem.k}")
                _check_id_list(report, ranking, case.dataset, case_id)
        for case_id in cases:
            if case_id not in rankings:
                report.add("MissingEstimate", f"no rankings for problem {case_id!r}")

    else:
        report.add("MalformedPayload", f"unknown problem type {type(problem).__name__}")
    return report


# --- repair / imputation oracle --------------------------------------------

def repair_and_impute(dataset: Dataset, repairs: dict) -> Dataset:
    """Apply hidden-truth repairs, then mean-impute any remaining NULL slot.

    repairs: example_id -> {"label": int | None, "features": {col: value}}.
    """
    X = dataset.X.copy()
    y = dataset.y.copy()
    for eid, fix in repairs.items():
        if not dataset.has_example(eid):
            raise UnknownExample(f"repair target {eid!r} not in dataset")
        i = dataset.row_of(eid)
        if fix.get("label") is not None:
            y[i] = int(fix["label"])
        for col, value in fix.get("features", {}).items():
            X[i, int(col)] = float(value)
    if np.isnan(X).any():
        col_mean = np.nanmean(np.where(np.isnan(X), np.nan, X), axis=0)
        col_mean = np.where(np.isnan(col_mean), 0.0, col_mean)
        nan_rows, nan_cols = np.nonzero(np.isnan(X))
        X[nan_rows, nan_cols] = col_mean[nan_cols]
    return dataset.replace(X=X, y=y)


# --- evaluators -------------------------------------------------------------

def _suite_scores(problem, train_ds: Dataset, test_ds: Dataset):
    models = train_suite(problem.suite, train_ds)
    per_member = [
        {"kind": m.kind,
         "accuracy": accuracy(predict_labels(m, test_ds), test_ds.y)}
        for m in models
    ]
    value = aggregate([p["accuracy"] for p in per_member],
                      problem.suite.aggregation)
    return value, per_member


def _payload_to_dataset(payload, reference: Dataset) -> Dataset:
    examples = payload.get("examples", [])
    if not examples:
        raise EmptySubmission("submitted dataset has no examples")
    class_index = {c: i for i, c in enumerate(reference.classes)}
    ids, X, y = [], [], []
    for ex in examples:
        ids.append(ex["example_id"])
        feats = [float(v) for v in ex["features"]]
        if len(feats) != reference.dim:
            raise DimensionMismatch(
                f"example {ex['example_id']!r}: {len(feats)} features, "
                f"expected {reference.dim}")
        X.append(feats)
        y.append(class_index[ex["label"]])
    return Dataset.build("submitted", reference.dim, reference.classes, ids, X, y)


def eval_training_set(submitted: Dataset, problem: TrainingSetProblem,
                      submission_id: str = "local") -> ScoreRecord:
    if len(submitted) == 0:
        raise EmptySubmission("empty training-set submission")
    if submitted.dim != problem.hidden_test.dim:
        raise DimensionMismatch(
            f"submitted dim {submitted.dim} != test dim {problem.hidden_test.dim}")
    value, per_member = _suite_scores(problem, submitted, problem.hidden_test)
    return _record(problem, submission_id, value,
                   {"per_member": per_member,
                    "baseline_accuracy": problem.baseline_accuracy})


def eval_test_set(payload: dict, problem: TestSetProblem, containment_counts: dict,
                  submission_id: str = "local") -> ScoreRecord:
    """Adversarial credit: model-failure fraction x human verification,
    diluted by how many submissions contain the example."""
    per_example = {}
    total = 0.0
    truth_ds = problem.pool_truth
    preds = [predict_labels(m, truth_ds) for m in problem.frozen_models]
    for ex in payload.get("examples", []):
        eid = ex["example_id"]
        if not truth_ds.has_example(eid):
            raise UnknownExample(f"id {eid!r} not in candidate pool")
        i = truth_ds.row_of(eid)
        truth = int(truth_ds.y[i])
        fail_fraction = float(np.mean([p[i] != truth for p in preds]))
        human_ok = 1.0 if ex["label"] == truth_ds.classes[truth] else 0.0
        containment = containment_counts.get(eid, 1)
        credit = fail_fraction * human_ok / containment
        per_example[eid] = {"model_failure_fraction": fail_fraction,
                            "human_ok": human_ok, "containment": containment,
                            "credit": credit}
        total += credit
    return _record(problem, submission_id, total, {"per_example": per_example})


def eval_selection(selected_ids, problem: SelectionProblem,
                   submission_id: str = "local",
                   concealed: bool = False) -> ScoreRecord:
    selected_ids = list(selected_ids)
    if len(selected_ids) > problem.budget:
        raise BudgetExceeded(
            f"{len(selected_ids)} ids exceed budget {problem.budget}")
    if not selected_ids:
        raise EmptySubmission("empty selection")
    for e in selected_ids:
        if not problem.pool.has_example(e):
            raise UnknownExample(f"id {e!r} not in training pool")
    subset = problem.pool.subset(sorted(set(selected_ids)), id="selected")
    value, per_member = _suite_scores(problem, subset, problem.hidden_test)
    return _record(problem, submission_id, value,
                   {"per_member": per_member, "selected": len(subset)},
                   concealed=concealed)


def gap_closed(perf_err: float, perf_rep: float, perf_alg: float) -> float:
    """(perf_alg - perf_err) / (perf_rep - perf_err), the debugging gap score."""
    denom = perf_rep - perf_err
    if abs(denom) < DEGENERATE_EPS:
        raise DegenerateProblem(
            "dirty and repaired baselines coincide; problem cannot be scored")
    return (perf_alg - perf_err) / denom


def eval_debugging_gap(repair_ids, problem: DebuggingProblem,
                       submission_id: str = "local") -> ScoreRecord:
    repair_ids = list(repair_ids)
    if problem.budget is not None and len(repair_ids) > problem.budget:
        raise BudgetExceeded(
            f"{len(repair_ids)} repairs exceed budget {problem.budget}")
    for e in repair_ids:
        if not problem.dirty_train.has_example(e):
            raise UnknownExample(f"repair id {e!r} not in dirty train set")
    dirty = repair_and_impute(problem.dirty_train, {})
    clean = repair_and_impute(problem.dirty_train, problem.repairs)
    chosen = {e: problem.repairs[e] for e in repair_ids if e in problem.repairs}
    fixed = repair_and_impute(problem.dirty_train, chosen)
    perf_err, err_members = _suite_scores(problem, dirty, problem.hidden_test)
    perf_rep, rep_members = _suite_scores(problem, clean, problem.hidden_test)
    perf_alg, alg_members = _suite_scores(problem, fixed, problem.hidden_test)
    raw = gap_closed(perf_err, perf_rep, perf_alg)
    value = min(max(raw, GAP_CLAMP[0]), GAP_CLAMP[1])
    return _record(problem, submission_id, value,
                   {"perf_err": perf_err, "perf_rep": perf_rep,
                    "perf_alg": perf_alg, "raw_gap_closed": raw,
                    "post_repair_accuracy": perf_alg,
                    "per_member": {"err": err_members, "rep": rep_members,
                                   "alg": alg_members},
                    "repairs_applied": len(chosen)})


def eval_debugging_inspection(priority, problem: DebuggingProblem,
                              step: int | None = None,
                              submission_id: str = "local") -> ScoreRecord:
    """Walk the priority list in blocks of `step`, oracle-repairing inspected
    items, until retrained accuracy reaches 95% of clean accuracy.

    step=1 is the faithful mode; step>1 trades precision (overestimates the
    count by < step) for fewer retrainings.
    """
    step = problem.step if step is None else step
    if step < 1:
        raise BudgetExceeded("step must be >= 1")
    priority = list(check_ranking(priority))
    for e in priority:
        if not problem.dirty_train.has_example(e):
            raise UnknownExample(f"priority id {e!r} not in dirty train set")
    listed = set(priority)
    # unlisted items appended in ascending example_id order
    order = priority + [e for e in problem.dirty_train.example_ids
                        if e not in listed]
    n = len(order)
    clean = repair_and_impute(problem.dirty_train, problem.repairs)
    clean_acc, _ = _suite_scores(problem, clean, problem.hidden_test)
    threshold = INSPECTION_TARGET * clean_acc
    dirty_acc, _ = _suite_scores(
        problem, repair_and_impute(problem.dirty_train, {}), problem.hidden_test)
    inspected = 0
    acc = dirty_acc
    applied = {}
    retrains = 0
    while acc < threshold and inspected < n:
        block = order[inspected:inspected + step]
        inspected += len(block)
        effective = {e: problem.repairs[e] for e in block if e in problem.repairs}
        if effective:
            # blocks without corrupted items cannot change the dataset, so
            # the previous accuracy carries over exactly
            applied.update(effective)
            fixed = repair_and_impute(problem.dirty_train, applied)
            acc, _ = _suite_scores(problem, fixed, problem.hidden_test)
            retrains += 1
    value = inspected / n
    return _record(problem, submission_id, value,
                   {"clean_accuracy": clean_acc, "dirty_accuracy": dirty_acc,
                    "threshold": threshold, "inspections": inspected,
                    "reached_accuracy": acc, "step": step, "n": n,
                    "retrains": retrains})


def eval_valuation(estimates: dict, problem: ValuationProblem,
                   submission_id: str = "local") -> ScoreRecord:
    per_case = {}
    squared = []
    for case in problem.cases:
        if case.case_id not in estimates:
            raise MissingEstimate(f"no estimate for problem {case.case_id!r}")
        est = float(estimates[case.case_id])
        if not 0.0 <= est <= 1.0:
            raise EstimateOutOfRange(f"estimate {est} for {case.case_id!r}")
        err = abs(est - case.true_union_accuracy)
        per_case[case.case_id] = {"absolute_error": err}
        squared.append(err * err)
    value = float(np.sqrt(np.mean(squared)))
    return _record(problem, submission_id, value, {"per_problem": per_case})


def eval_slicing(rankings: dict, problem: SlicingProblem,
                 submission_id: str = "local") -> ScoreRecord:
    per_case = {}
    values = []
    for case in problem.cases:
        case_rankings = rankings.get(case.case_id)
        if not case_rankings:
            raise MissingEstimate(f"no rankings for problem {case.case_id!r}")
        if len(case_rankings) > 5:
            raise TooManySlices(
                f"{len(case_rankings)} rankings for {case.case_id!r}, max is 5")
        best = 0.0
        for ranking in case_rankings:
            for truth in case.slices:
                best = max(best, precision_at_k(ranking, truth, problem.k))
        per_case[case.case_id] = {"max_precision_at_k": best}
        values.append(best)
    return _record(problem, submission_id, float(np.mean(values)),
                   {"per_problem": per_case, "k": problem.k})


# --- dispatch ----------------------------------------------------------------

def evaluate(problem, submission: Submission,
             containment_counts: dict | None = None,
             submission_id: str = "local") -> list[ScoreRecord]:
    """Type-appropriate evaluation; selection problems with a concealed
    counterpart yield a second, flagged record."""
    payload = submission.payload
    if isinstance(problem, TrainingSetProblem):
        submitted = _payload_to_dataset(payload, problem.reference_train)
        return [eval_training_set(submitted, problem, submission_id)]
    if isinstance(problem, TestSetProblem):
        return [eval_test_set(payload, problem, containment_counts or {},
                              submission_id)]
    if isinstance(problem, SelectionProblem):
        records = [eval_selection(payload["selected_ids"], problem, submission_id)]
        if problem.concealed is not None:
            records.append(eval_selection(payload["selected_ids"],
                                          problem.concealed, submission_id,
                                          concealed=True))
        return records
    if isinstance(problem, DebuggingProblem):
        if problem.mode == "gap":
            return [eval_debugging_gap(payload["repair_ids"], problem,
                                       submission_id)]
        return [eval_debugging_inspection(payload["priority"], problem,
                                          submission_id=submission_id)]
    if isinstance(problem, ValuationProblem):
        return [eval_valuation(payload["estimates"], problem, submission_id)]
    if isinstance(problem, SlicingProblem):
        return [eval_slicing(payload["rankings"], problem, submission_id)]
    raise ParseError(f"unknown problem type {type(problem).__name__}")
