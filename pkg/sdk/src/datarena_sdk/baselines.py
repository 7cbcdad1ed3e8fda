"""Reference baseline algorithms, one per submission type they exercise.

The probe model is the task suite's own logistic regression trained on the
published probe split with the training configuration the manifest
declares, so baselines need no access beyond public files.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundles import PublicDataset


class BudgetExceedsPool(Exception):
    pass


def baseline_random_selection(pool_ids, budget: int, seed: int) -> list:
    """Seeded sample without replacement from the candidate pool."""
    pool_ids = list(pool_ids)
    if budget > len(pool_ids):
        raise BudgetExceedsPool(f"budget {budget} > pool {len(pool_ids)}")
    rng = np.random.default_rng(seed)
    return list(rng.choice(pool_ids, size=budget, replace=False))


@dataclass(frozen=True)
class ProbeModel:
    weights: np.ndarray  # (num_classes, dim)
    bias: np.ndarray

    def probabilities(self, X: np.ndarray) -> np.ndarray:
        scores = X @ self.weights.T + self.bias
        shifted = scores - scores.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        return exp / exp.sum(axis=1, keepdims=True)


def train_probe(dataset: PublicDataset, member_config: dict) -> ProbeModel:
    """Full-batch gradient-descent logistic regression from zero weights,
    following the training configuration published in the task manifest."""
    if member_config.get("kind") != "logreg":
        raise ValueError("probe training expects a logreg member config")
    y = dataset.label_indices()
    if np.any(y < 0):
        raise ValueError("probe split must be fully labeled")
    X = dataset.X
    k, dim = len(dataset.classes), X.shape[1]
    lr = float(member_config["learning_rate"])
    l2 = float(member_config["l2_lambda"])
    W = np.zeros((k, dim))
    b = np.zeros(k)
    onehot = np.eye(k)[y]
    for _ in range(int(member_config["iterations"])):
        scores = X @ W.T + b
        shifted = scores - scores.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        probs = exp / exp.sum(axis=1, keepdims=True)
        delta = (probs - onehot) / len(X)
        W -= lr * (delta.T @ X + l2 * W)
        b -= lr * delta.sum(axis=0)
    return ProbeModel(W, b)


def _margins(probabilities: np.ndarray) -> np.ndarray:
    probabilities = np.asarray(probabilities, dtype=np.float64)
    if probabilities.ndim == 1:  # binary shorthand: p(positive class)
        probabilities = np.column_stack([1.0 - probabilities, probabilities])
    top2 = np.sort(probabilities, axis=1)[:, -2:]
    return top2[:, 1] - top2[:, 0]


def baseline_uncertainty_selection(pool_ids, probabilities,
                                   budget: int) -> list:
    """Pick the budget pool examples with the smallest top-two class
    probability margin; ties break by ascending example id."""
    pool_ids = list(pool_ids)
    if budget > len(pool_ids):
        raise BudgetExceedsPool(f"budget {budget} > pool {len(pool_ids)}")
    margins = _margins(probabilities)
    if len(margins) != len(pool_ids):
        raise ValueError("one probability row per pool id required")
    order = sorted(range(len(pool_ids)),
                   key=lambda i: (margins[i], pool_ids[i]))
    return [pool_ids[i] for i in order[:budget]]


def baseline_smallloss_debug_priority(dataset: PublicDataset,
                                      probe: ProbeModel) -> list:
    """Rank training examples by descending cross-entropy loss under the
    probe (most suspicious first); ties break by ascending example id."""
    y = dataset.label_indices()
    if np.any(y < 0):
        raise ValueError("debug priority needs a labeled dataset")
    probs = probe.probabilities(dataset.X)
    losses = -np.log(np.clip(probs[np.arange(len(y)), y], 1e-300, None))
    order = sorted(range(len(y)),
                   key=lambda i: (-losses[i], dataset.example_ids[i]))
    return [dataset.example_ids[i] for i in order]
