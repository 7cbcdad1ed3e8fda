"""Metric primitives shared by the evaluators.

mAP here is the *non-interpolated* variant: per class, examples are
ranked by descending score (ties broken by ascending example_id) and AP
is the mean of precision-at-rank over the positive examples.
"""
from __future__ import annotations

import numpy as np

from .errors import (
    DuplicateIds,
    EmptyInput,
    EmptySlice,
    LengthMismatch,
    NoPositiveExamples,
    RankingTooShort,
)


def check_ranking(ranking) -> tuple[str, ...]:
    """Validate a ranking: ordered example_ids, highest priority first, no dups."""
    ranking = tuple(str(e) for e in ranking)
    if len(set(ranking)) != len(ranking):
        raise DuplicateIds("ranking contains duplicate example ids")
    return ranking


def accuracy(predictions, truth) -> float:
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape != truth.shape:
        raise LengthMismatch(
            f"predictions ({predictions.shape}) vs truth ({truth.shape})")
    if predictions.size == 0:
        raise EmptyInput("accuracy of zero examples is undefined")
    return float(np.mean(predictions == truth))


def average_precision(scores, positives, example_ids) -> float:
    """Non-interpolated AP for one class.

    scores: per-example real scores; positives: binary truth;
    example_ids: tie-break keys (ascending on equal score).
    """
    scores = np.asarray(scores, dtype=np.float64)
    positives = np.asarray(positives, dtype=bool)
    n_pos = int(positives.sum())
    if n_pos == 0:
        raise NoPositiveExamples("class has no positive examples")
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], example_ids[i]))
    hits = 0
    total = 0.0
    for rank, i in enumerate(order, start=1):
        if positives[i]:
            hits += 1
            total += hits / rank
    return total / n_pos


def mean_average_precision(per_class_scores, binary_truth_per_class, example_ids) -> float:
    """Unweighted mean of per-class non-interpolated AP.

    per_class_scores: (n, k) scores; binary_truth_per_class: (n, k) 0/1.
    """
    S = np.asarray(per_class_scores, dtype=np.float64)
    T = np.asarray(binary_truth_per_class)
    if S.shape != T.shape:
        raise LengthMismatch(f"scores {S.shape} vs truth {T.shape}")
    if S.size == 0:
        raise EmptyInput("mAP of zero examples is undefined")
    aps = [average_precision(S[:, c], T[:, c], example_ids) for c in range(S.shape[1])]
    return float(np.mean(aps))


def precision_at_k(predicted, slice_membership, k: int) -> float:
    """|top-k(predicted) ∩ slice| / k.  Depends only on the top-k SET."""
    predicted = check_ranking(predicted)
    if k < 1:
        raise RankingTooShort("k must be a positive integer")
    if len(predicted) < k:
        raise RankingTooShort(f"ranking has {len(predicted)} entries, need k={k}")
    members = set(slice_membership)
    if not members:
        raise EmptySlice("slice membership is empty")
    return sum(1 for e in predicted[:k] if e in members) / k
