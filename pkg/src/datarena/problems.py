"""Benchmark problem bundles: one dataclass per benchmark type.

Every problem separates participant-visible material from hidden truth;
bundle serialization (bundles module) enforces the same split on disk.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .dataset import Dataset
from .models import LinearModel, SuiteConfig

BENCHMARK_TYPES = (
    "training_set", "test_set", "selection", "debugging", "valuation", "slicing",
)

# headline metric name and leaderboard direction per benchmark type
METRIC_INFO = {
    "training_set": ("suite_accuracy", "max"),
    "test_set": ("adversarial_credit", "max"),
    "selection": ("suite_accuracy", "max"),
    "debugging_gap": ("gap_closed", "max"),
    "debugging_inspection": ("inspection_fraction", "min"),
    "valuation": ("rmse", "min"),
    "slicing": ("mean_max_precision_at_k", "max"),
}


@dataclass(frozen=True)
class TrainingSetProblem:
    problem_id: str
    seed: int
    suite: SuiteConfig
    size_cap: int
    reference_train: Dataset
    validation: Dataset
    hidden_test: Dataset
    baseline_accuracy: float  # suite trained on reference_train, stored at forge time

    task_type = "training_set"

    @property
    def metric(self):
        return METRIC_INFO["training_set"]


@dataclass(frozen=True)
class TestSetProblem:
    problem_id: str
    seed: int
    suite: SuiteConfig
    submission_cap: int
    reference_train: Dataset
    pool: Dataset  # participant view: labels stripped
    pool_truth: Dataset  # hidden
    frozen_models: tuple[LinearModel, ...]

    task_type = "test_set"

    @property
    def allowed_labels(self):
        return self.pool.classes

    @property
    def metric(self):
        return METRIC_INFO["test_set"]


@dataclass(frozen=True)
class SelectionProblem:
    problem_id: str
    seed: int
    suite: SuiteConfig
    budget: int
    pool: Dataset  # labeled training pool
    probe: Dataset  # small published labeled split for participant probes
    hidden_test: Dataset
    concealed: "SelectionProblem | None" = None

    task_type = "selection"

    @property
    def metric(self):
        return METRIC_INFO["selection"]


@dataclass(frozen=True)
class DebuggingProblem:
    problem_id: str
    seed: int
    suite: SuiteConfig
    mode: str  # "gap" (budget-B id list) or "inspection" (priority walk)
    budget: int | None  # required in gap mode
    step: int  # inspection block size; 1 is the faithful mode
    dirty_train: Dataset
    # hidden truth: example_id -> {"label": int | None, "features": {col: value}}
    repairs: dict
    # missing-value mode: example_id -> {col: [3 candidate values]}
    candidates: dict
    validation: Dataset
    hidden_test: Dataset

    task_type = "debugging"

    @property
    def metric(self):
        return METRIC_INFO["debugging_" + self.mode]

    def clean_train(self) -> Dataset:
        """Reference dataset with every hidden repair applied."""
        from .evaluators import repair_and_impute  # cycle guard
        return repair_and_impute(self.dirty_train, self.repairs)


@dataclass(frozen=True)
class ValuationCase:
    case_id: str
    d_a: Dataset  # labeled
    d_b: Dataset  # participant view: labels stripped
    d_b_truth: Dataset  # hidden
    d_test: Dataset  # hidden
    true_union_accuracy: float


@dataclass(frozen=True)
class ValuationProblem:
    problem_id: str
    seed: int
    suite: SuiteConfig
    cases: tuple[ValuationCase, ...]

    task_type = "valuation"

    @property
    def metric(self):
        return METRIC_INFO["valuation"]


@dataclass(frozen=True)
class SliceCase:
    case_id: str
    dataset: Dataset  # labeled evaluation dataset (participant-visible)
    model: LinearModel  # the underperforming trained model (participant-visible)
    slices: tuple[frozenset, ...]  # hidden ground-truth slices
    underperformance_gap: float
    realized_seed: int


@dataclass(frozen=True)
class SlicingProblem:
    problem_id: str
    seed: int
    suite: SuiteConfig
    k: int
    cases: tuple[SliceCase, ...]

    task_type = "slicing"

    @property
    def metric(self):
        return METRIC_INFO["slicing"]
