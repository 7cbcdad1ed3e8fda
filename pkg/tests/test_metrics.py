import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from datarena.errors import (
    DuplicateIds,
    EmptyInput,
    EmptySlice,
    LengthMismatch,
    NoPositiveExamples,
    RankingTooShort,
)
from datarena.metrics import (
    accuracy,
    average_precision,
    mean_average_precision,
    precision_at_k,
)


def brute_force_ap(labels_in_rank_order):
    """Direct enumeration of the non-interpolated AP definition."""
    total, hits = 0.0, 0
    for rank, lab in enumerate(labels_in_rank_order, start=1):
        if lab:
            hits += 1
            total += hits / rank
    return total / sum(labels_in_rank_order)


class TestAccuracy:
    def test_perfect(self):
        assert accuracy([1, 0, 2], [1, 0, 2]) == 1.0

    def test_half(self):
        assert accuracy([1, 1, 0, 0], [1, 0, 0, 1]) == 0.5

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            accuracy([1, 2], [1])

    def test_empty(self):
        with pytest.raises(EmptyInput):
            accuracy([], [])

    def test_flip_complement_binary(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            t = rng.integers(0, 2, size=17)
            p = rng.integers(0, 2, size=17)
            assert accuracy(p, t) + accuracy(1 - p, t) == pytest.approx(1.0)


class TestAveragePrecision:
    def test_all_positives_first(self):
        ids = ["a", "b", "c"]
        assert average_precision([3.0, 2.0, 1.0], [1, 1, 0], ids) == 1.0

    def test_interleaved(self):
        # descending-score label sequence [1,0,1] -> (1/1 + 2/3)/2
        ids = ["a", "b", "c"]
        got = average_precision([3.0, 2.0, 1.0], [1, 0, 1], ids)
        assert got == pytest.approx((1.0 + 2.0 / 3.0) / 2.0, abs=1e-15)

    def test_no_positives(self):
        with pytest.raises(NoPositiveExamples):
            average_precision([1.0, 0.0], [0, 0], ["a", "b"])

    def test_score_ties_broken_by_ascending_id(self):
        # tie at score 1.0: "a" outranks "b"
        got = average_precision([1.0, 1.0], [1, 0], ["a", "b"])
        assert got == 1.0
        got = average_precision([1.0, 1.0], [0, 1], ["a", "b"])
        assert got == 0.5

    def test_matches_brute_force_all_orderings_n_le_6(self):
        # oracle equivalence over ALL orderings and label patterns, n <= 6
        for n in range(1, 7):
            scores = [float(n - i) for i in range(n)]  # distinct, descending
            ids = [f"e{i}" for i in range(n)]
            for labels in itertools.product([0, 1], repeat=n):
                if sum(labels) == 0:
                    continue
                for perm in itertools.permutations(range(n)):
                    per_scores = [0.0] * n
                    per_labels = [0] * n
                    for rank, i in enumerate(perm):
                        per_scores[i] = scores[rank]
                        per_labels[i] = labels[rank]
                    want = brute_force_ap([labels[r] for r in range(n)])
                    got = average_precision(per_scores, per_labels, ids)
                    assert got == pytest.approx(want, abs=1e-12)


class TestMeanAveragePrecision:
    def test_unweighted_mean_over_classes(self):
        ids = ["a", "b", "c"]
        S = np.array([[3.0, 3.0], [2.0, 2.0], [1.0, 1.0]])
        T = np.array([[1, 1], [1, 0], [0, 1]])
        ap0 = average_precision(S[:, 0], T[:, 0], ids)
        ap1 = average_precision(S[:, 1], T[:, 1], ids)
        got = mean_average_precision(S, T, ids)
        assert got == pytest.approx((ap0 + ap1) / 2)

    def test_class_without_positives_raises(self):
        with pytest.raises(NoPositiveExamples):
            mean_average_precision([[1.0], [0.5]], [[0], [0]], ["a", "b"])


class TestPrecisionAtK:
    def test_all_in_slice(self):
        assert precision_at_k(["a", "b", "c"], {"a", "b", "c"}, 3) == 1.0

    def test_half(self):
        assert precision_at_k(["a", "b", "c", "d"], {"a", "c"}, 4) == 0.5

    def test_set_dependence(self):
        s = {"a", "c", "x"}
        assert precision_at_k(["a", "b", "c", "d"], s, 3) == precision_at_k(
            ["c", "a", "b", "d"], s, 3)

    def test_too_short(self):
        with pytest.raises(RankingTooShort):
            precision_at_k(["a"], {"a"}, 2)

    def test_empty_slice(self):
        with pytest.raises(EmptySlice):
            precision_at_k(["a", "b"], set(), 2)

    def test_duplicates_rejected(self):
        with pytest.raises(DuplicateIds):
            precision_at_k(["a", "a"], {"a"}, 2)

    @settings(max_examples=60, deadline=None)
    @given(st.data())
    def test_monotone_in_slice_superset(self, data):
        n = data.draw(st.integers(3, 10))
        ids = [f"e{i}" for i in range(n)]
        k = data.draw(st.integers(1, n))
        small = set(data.draw(st.lists(st.sampled_from(ids), min_size=1, unique=True)))
        extra = set(data.draw(st.lists(st.sampled_from(ids), unique=True)))
        big = small | extra
        assert precision_at_k(ids, big, k) >= precision_at_k(ids, small, k)
