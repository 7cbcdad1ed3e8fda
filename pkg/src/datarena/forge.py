"""Deterministic generation of desk-scale benchmark problems.

Everything here is a pure function of (spec, seed): Gaussian cluster
datasets, label/feature corruption with hidden ground truth, engineered
underperforming slices, valuation splits, and adversarial candidate
pools.  Repeated calls are byte-identical after serialization.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import CannotRealizeGap, InvalidSpec, RateOutOfRange
from .metrics import accuracy
from .models import (
    SuiteConfig,
    SuiteMember,
    aggregate,
    default_suite,
    predict_labels,
    train,
    train_suite,
)
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

# class means sit on seeded random directions at this radius; cluster_spread
# is the isotropic per-dimension sigma around them
CLASS_MEAN_RADIUS = 2.5

SPLIT_NAMES = ("train", "validation", "test")


@dataclass(frozen=True)
class ForgeSpec:
    seed: int = 0
    num_classes: int = 6
    per_class_count: int = 167  # floor(0.6 * 167) * 6 = 600 train examples
    dim: int = 32
    cluster_spread: float = 1.0
    splits: tuple[float, float, float] = (0.6, 0.2, 0.2)

    def __post_init__(self):
        if self.num_classes < 2 or self.dim < 1:
            raise InvalidSpec("need num_classes >= 2 and dim >= 1")
        if self.per_class_count < 4:
            raise InvalidSpec("per_class_count must be >= 4 so every split is populated")
        if self.cluster_spread <= 0:
            raise InvalidSpec("cluster_spread must be positive")
        if len(self.splits) != 3 or any(not 0 < f < 1 for f in self.splits):
            raise InvalidSpec("splits must be three fractions in (0,1)")
        if abs(sum(self.splits) - 1.0) > 1e-12:
            raise InvalidSpec("split fractions must sum to 1")

    def to_dict(self):
        return {"seed": self.seed, "num_classes": self.num_classes,
                "per_class_count": self.per_class_count, "dim": self.dim,
                "cluster_spread": self.cluster_spread, "splits": list(self.splits)}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["seed"]), int(d["num_classes"]), int(d["per_class_count"]),
                   int(d["dim"]), float(d["cluster_spread"]), tuple(d["splits"]))


def _split_counts(total: int, fractions) -> list[int]:
    counts = [int(np.floor(f * total)) for f in fractions[:-1]]
    counts.append(total - sum(counts))
    return counts


def _class_means(rng, num_classes, dim):
    means = rng.normal(size=(num_classes, dim))
    means /= np.linalg.norm(means, axis=1, keepdims=True)
    return means * CLASS_MEAN_RADIUS


def gen_dataset(spec: ForgeSpec, id=None, rng=None, extra_rows=None):
    """Seeded Gaussian mixture dataset plus a class-stratified split index.

    extra_rows: optional list of (embedding, label) appended before ids are
    assigned (used by the slice forge to add a shifted sub-cluster).
    """
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    means = _class_means(rng, spec.num_classes, spec.dim)
    X_parts, y_parts = [], []
    for c in range(spec.num_classes):
        X_parts.append(means[c] + spec.cluster_spread
                       * rng.normal(size=(spec.per_class_count, spec.dim)))
        y_parts.append(np.full(spec.per_class_count, c))
    X = np.vstack(X_parts)
    y = np.concatenate(y_parts)
    if extra_rows:
        X = np.vstack([X] + [np.asarray(e)[None, :] for e, _ in extra_rows])
        y = np.concatenate([y, [lab for _, lab in extra_rows]])
    n = len(y)
    # shuffle before assigning sequential ids so an id's rank leaks nothing
    perm = rng.permutation(n)
    X, y = X[perm], y[perm]
    ids = [f"ex{i:05d}" for i in range(n)]
    classes = [f"class_{c}" for c in range(spec.num_classes)]
    ds = Dataset.build(id or f"gm-s{spec.seed}", spec.dim, classes, ids, X, y)
    # stratified split: per class, seeded shuffle then contiguous allocation
    split_index = {name: [] for name in SPLIT_NAMES}
    for c in range(spec.num_classes):
        class_ids = [e for e, lab in zip(ds.example_ids, ds.y) if lab == c]
        order = rng.permutation(len(class_ids))
        shuffled = [class_ids[i] for i in order]
        counts = _split_counts(len(class_ids), spec.splits)
        pos = 0
        for name, cnt in zip(SPLIT_NAMES, counts):
            split_index[name].extend(shuffled[pos:pos + cnt])
            pos += cnt
    split_index = {k: sorted(v) for k, v in split_index.items()}
    return ds, split_index


def _check_rate(rate):
    if not 0.0 <= rate <= 1.0:
        raise RateOutOfRange(f"rate {rate} outside [0,1]")


def corrupt_labels(dataset: Dataset, rate: float, mode: str, seed: int,
                   weak_member: SuiteMember | None = None):
    """Corrupt exactly floor(rate*n) labels; returns (dirty, hidden_repairs).

    flip: a uniformly chosen different class.  machine_label: predictions
    of a deliberately weak suite member (10 iterations on a 10% seeded
    subsample), imitating algorithmic labeling noise.
    """
    _check_rate(rate)
    if mode not in ("flip", "machine_label"):
        raise RateOutOfRange(f"unknown corruption mode {mode!r}")
    rng = np.random.default_rng(seed)
    n = len(dataset)
    count = int(np.floor(rate * n))
    chosen = sorted(rng.choice(n, size=count, replace=False).tolist()) if count else []
    y = dataset.y.copy()
    if mode == "machine_label" and count:
        weak_member = weak_member or SuiteMember("logreg", iterations=10)
        sub_n = max(1, int(np.floor(0.1 * n)))
        sub_rows = rng.choice(n, size=sub_n, replace=False)
        weak = train(weak_member,
                     dataset.subset([dataset.example_ids[i] for i in sub_rows]))
        machine = predict_labels(weak, dataset)
    repairs = {}
    for i in chosen:
        eid = dataset.example_ids[i]
        true = int(dataset.y[i])
        if mode == "flip":
            others = [c for c in range(len(dataset.classes)) if c != true]
            y[i] = int(rng.choice(others))
        else:
            y[i] = int(machine[i])
        repairs[eid] = {"label": true, "features": {}}
    return dataset.replace(y=y), repairs


def corrupt_features(dataset: Dataset, null_rate: float, seed: int):
    """NULL out floor(null_rate*n*dim) feature cells.

    Returns (dirty, hidden_repairs, candidates): every NULL slot gets a
    3-element candidate list containing the truth plus two offsets drawn
    uniform in [0.5, 2] column sigmas, in seeded-shuffled order.
    """
    _check_rate(null_rate)
    rng = np.random.default_rng(seed)
    n, dim = len(dataset), dataset.dim
    count = int(np.floor(null_rate * n * dim))
    X = dataset.X.copy()
    col_sigma = np.std(dataset.X, axis=0)
    col_sigma[col_sigma == 0.0] = 1.0
    cells = rng.choice(n * dim, size=count, replace=False) if count else []
    repairs, candidates = {}, {}
    for cell in sorted(int(c) for c in cells):
        i, j = divmod(cell, dim)
        eid = dataset.example_ids[i]
        truth = float(X[i, j])
        offsets = rng.uniform(0.5 * col_sigma[j], 2.0 * col_sigma[j], size=2)
        signs = rng.choice([-1.0, 1.0], size=2)
        cand = [truth, truth + signs[0] * offsets[0], truth + signs[1] * offsets[1]]
        rng.shuffle(cand)
        X[i, j] = np.nan
        repairs.setdefault(eid, {"label": None, "features": {}})
        repairs[eid]["features"][str(j)] = truth
        candidates.setdefault(eid, {})[str(j)] = [float(v) for v in cand]
    return dataset.replace(X=X), repairs, candidates


def _merge_repairs(a: dict, b: dict) -> dict:
    merged = {k: {"label": v["label"], "features": dict(v["features"])}
              for k, v in a.items()}
    for k, v in b.items():
        slot = merged.setdefault(k, {"label": None, "features": {}})
        if v["label"] is not None:
            slot["label"] = v["label"]
        slot["features"].update(v["features"])
    return merged


def _suite_test_accuracy(suite: SuiteConfig, train_set: Dataset, test_set: Dataset):
    models = train_suite(suite, train_set)
    per_member = [accuracy(predict_labels(m, test_set), test_set.y) for m in models]
    return aggregate(per_member, suite.aggregation), per_member


def forge_training_set_problem(spec: ForgeSpec, suite: SuiteConfig | None = None,
                               size_cap: int = 1000) -> TrainingSetProblem:
    suite = suite or default_suite()
    ds, splits = gen_dataset(spec)
    ref = ds.subset(splits["train"], id=f"{ds.id}-train")
    val = ds.subset(splits["validation"], id=f"{ds.id}-val")
    test = ds.subset(splits["test"], id=f"{ds.id}-test")
    baseline, _ = _suite_test_accuracy(suite, ref, test)
    return TrainingSetProblem(f"training_set-s{spec.seed}", spec.seed, suite,
                              size_cap, ref, val, test, baseline)


def forge_test_set_problem(spec: ForgeSpec, suite: SuiteConfig | None = None,
                           submission_cap: int = 100) -> TestSetProblem:
    suite = suite or default_suite()
    ds, splits = gen_dataset(spec)
    ref = ds.subset(splits["train"], id=f"{ds.id}-train")
    pool_truth = ds.subset(splits["test"], id=f"{ds.id}-pool")
    frozen = tuple(train_suite(suite, ref))
    return TestSetProblem(f"test_set-s{spec.seed}", spec.seed, suite,
                          submission_cap, ref, pool_truth.without_labels(),
                          pool_truth, frozen)


def _plant_confident_noise(pool: Dataset, probe: Dataset, fraction: float,
                           member: SuiteMember, seed: int) -> Dataset:
    """Flip labels of the pool examples a probe model is most confident about.

    Selection pools need noise that selection can avoid: the planted errors
    sit in high-confidence regions (imitating annotation mistakes a model
    would flag), so picking informative examples genuinely beats picking at
    random.
    """
    _check_rate(fraction)
    count = int(np.floor(fraction * len(pool)))
    if count == 0:
        return pool
    probe_model = train(member, probe)
    scores = pool.X @ probe_model.weights.T + probe_model.bias
    shifted = np.exp(scores - scores.max(axis=1, keepdims=True))
    proba = shifted / shifted.sum(axis=1, keepdims=True)
    top2 = np.sort(proba, axis=1)[:, -2:]
    margin = top2[:, 1] - top2[:, 0]
    order = sorted(range(len(pool)),
                   key=lambda i: (-margin[i], pool.example_ids[i]))
    rng = np.random.default_rng(seed)
    y = pool.y.copy()
    for i in order[:count]:
        others = [c for c in range(len(pool.classes)) if c != y[i]]
        y[i] = int(rng.choice(others))
    return pool.replace(y=y)


def forge_selection_problem(spec: ForgeSpec, suite: SuiteConfig | None = None,
                            budget: int = 50, noise_fraction: float = 0.3,
                            with_concealed: bool = False,
                            _concealed_seed_offset: int = 7919) -> SelectionProblem:
    suite = suite or default_suite()
    ds, splits = gen_dataset(spec)
    pool = ds.subset(splits["train"], id=f"{ds.id}-pool")
    probe = ds.subset(splits["validation"], id=f"{ds.id}-probe")
    test = ds.subset(splits["test"], id=f"{ds.id}-test")
    pool = _plant_confident_noise(pool, probe, noise_fraction,
                                  suite.members[0], spec.seed + 1)
    concealed = None
    if with_concealed:
        c_spec = ForgeSpec(spec.seed + _concealed_seed_offset, spec.num_classes,
                           spec.per_class_count, spec.dim, spec.cluster_spread,
                           spec.splits)
        raw = forge_selection_problem(c_spec, suite, budget, noise_fraction,
                                      with_concealed=False)
        # a selection submission is an id list over the PUBLIC pool; the
        # concealed pool reuses that id namespace positionally so the same
        # list resolves against fresh data
        mapping = dict(zip(raw.pool.example_ids, pool.example_ids))
        c_pool = Dataset.build(raw.pool.id, raw.pool.dim, raw.pool.classes,
                               [mapping[e] for e in raw.pool.example_ids],
                               raw.pool.X, raw.pool.y)
        concealed = SelectionProblem(raw.problem_id + "-concealed", c_spec.seed,
                                     suite, budget, c_pool, raw.probe,
                                     raw.hidden_test, None)
    return SelectionProblem(f"selection-s{spec.seed}", spec.seed, suite, budget,
                            pool, probe, test, concealed)


def forge_debugging_problem(spec: ForgeSpec, suite: SuiteConfig | None = None,
                            rate: float = 0.3, mode: str = "flip",
                            null_rate: float = 0.0, budget: int | None = None,
                            eval_mode: str = "gap", step: int = 1,
                            seed: int | None = None) -> DebuggingProblem:
    if eval_mode not in ("gap", "inspection"):
        raise InvalidSpec(f"unknown debugging eval mode {eval_mode!r}")
    suite = suite or default_suite()
    corruption_seed = spec.seed if seed is None else seed
    ds, splits = gen_dataset(spec)
    clean_train = ds.subset(splits["train"], id=f"{ds.id}-train")
    val = ds.subset(splits["validation"], id=f"{ds.id}-val")
    test = ds.subset(splits["test"], id=f"{ds.id}-test")
    dirty, label_repairs = corrupt_labels(clean_train, rate, mode, corruption_seed)
    candidates = {}
    repairs = label_repairs
    if null_rate > 0:
        dirty, feat_repairs, candidates = corrupt_features(
            dirty, null_rate, corruption_seed + 1)
        repairs = _merge_repairs(label_repairs, feat_repairs)
    if eval_mode == "gap" and budget is None:
        budget = max(1, len(repairs))
    if budget is not None and budget > len(dirty):
        raise InvalidSpec("budget_B cannot exceed the dirty train size")
    return DebuggingProblem(f"debugging-s{spec.seed}", spec.seed, suite, eval_mode,
                            budget, step, dirty, repairs, candidates, val, test)


def forge_valuation_batch(spec: ForgeSpec, num_problems: int = 5,
                          b_fraction_range=(0.5, 1.5), seed: int | None = None,
                          suite: SuiteConfig | None = None) -> ValuationProblem:
    if num_problems < 1:
        raise InvalidSpec("need at least one valuation problem")
    lo, hi = b_fraction_range
    if not (0 < lo <= hi):
        raise InvalidSpec("b_fraction_range must be 0 < lo <= hi")
    suite = suite or default_suite()
    base_seed = spec.seed if seed is None else seed
    cases = []
    for p in range(num_problems):
        rng = np.random.default_rng([base_seed, p])
        case_spec = ForgeSpec(base_seed, spec.num_classes, spec.per_class_count,
                              spec.dim, spec.cluster_spread, spec.splits)
        ds, splits = gen_dataset(case_spec, id=f"val-s{base_seed}-p{p}", rng=rng)
        d_test = ds.subset(splits["test"], id=f"{ds.id}-test")
        pool_ids = splits["train"]
        frac = rng.uniform(lo, hi)
        n_a = max(1, int(round(len(pool_ids) / (1.0 + frac))))
        order = rng.permutation(len(pool_ids))
        a_ids = sorted(pool_ids[i] for i in order[:n_a])
        b_ids = sorted(pool_ids[i] for i in order[n_a:])
        d_a = ds.subset(a_ids, id=f"{ds.id}-a")
        d_b_truth = ds.subset(b_ids, id=f"{ds.id}-b")
        union = ds.subset(pool_ids, id=f"{ds.id}-union")
        true_acc, _ = _suite_test_accuracy(suite, union, d_test)
        cases.append(ValuationCase(f"p{p}", d_a, d_b_truth.without_labels(),
                                   d_b_truth, d_test, true_acc))
    return ValuationProblem(f"valuation-s{base_seed}", base_seed, suite, tuple(cases))


# sub-cluster placement for the planted slice: fraction of the way from its
# own class mean toward the next class's mean
SLICE_SHIFT = 0.7
SLICE_RETRY_BOUND = 25


def _forge_slice_case(spec: ForgeSpec, suite: SuiteConfig, case_id: str,
                      slice_fraction: float, undersample_factor: float,
                      min_gap: float, seed: int, k: int):
    if not 0 < slice_fraction <= 0.5:
        raise InvalidSpec("slice_fraction must be in (0, 0.5]")
    if not 0 < undersample_factor <= 1.0:
        raise InvalidSpec("undersample_factor must be in (0, 1]")
    if min_gap <= 0:
        raise InvalidSpec("min_gap must be positive")
    for attempt in range(SLICE_RETRY_BOUND):
        attempt_seed = seed + attempt
        rng = np.random.default_rng(attempt_seed)
        means = _class_means(rng, spec.num_classes, spec.dim)
        slice_mean = means[0] + SLICE_SHIFT * (means[1] - means[0])
        slice_count = int(np.floor(slice_fraction * spec.per_class_count))
        main_count = spec.per_class_count - slice_count
        X_parts = [means[0] + spec.cluster_spread * rng.normal(size=(main_count, spec.dim)),
                   slice_mean + spec.cluster_spread * rng.normal(size=(slice_count, spec.dim))]
        y_parts = [np.zeros(main_count, dtype=int), np.zeros(slice_count, dtype=int)]
        in_slice = [np.zeros(main_count, dtype=bool), np.ones(slice_count, dtype=bool)]
        for c in range(1, spec.num_classes):
            X_parts.append(means[c] + spec.cluster_spread
                           * rng.normal(size=(spec.per_class_count, spec.dim)))
            y_parts.append(np.full(spec.per_class_count, c))
            in_slice.append(np.zeros(spec.per_class_count, dtype=bool))
        X = np.vstack(X_parts)
        y = np.concatenate(y_parts)
        sliced = np.concatenate(in_slice)
        n = len(y)
        perm = rng.permutation(n)
        X, y, sliced = X[perm], y[perm], sliced[perm]
        ids = [f"ex{i:05d}" for i in range(n)]
        classes = [f"class_{c}" for c in range(spec.num_classes)]
        ds = Dataset.build(f"slice-{case_id}-s{attempt_seed}", spec.dim, classes,
                           ids, X, y)
        slice_ids = {e for e, flag in zip(ids, sliced) if flag}
        # stratify by (class, slice membership) so both splits see the slice
        groups = {}
        for e, lab in zip(ds.example_ids, ds.y):
            groups.setdefault((int(lab), e in slice_ids), []).append(e)
        train_ids, eval_ids = [], []
        train_frac = spec.splits[0]
        for key in sorted(groups):
            members = groups[key]
            order = rng.permutation(len(members))
            cut = int(np.floor(train_frac * len(members)))
            train_ids.extend(members[i] for i in order[:cut])
            eval_ids.extend(members[i] for i in order[cut:])
        # undersample the slice inside the training split
        train_slice = sorted(e for e in train_ids if e in slice_ids)
        keep = int(np.floor(undersample_factor * len(train_slice)))
        kept = set(train_slice[:keep])
        final_train = sorted(e for e in train_ids
                             if e not in slice_ids or e in kept)
        model = train(suite.members[0], ds.subset(final_train, id=f"{ds.id}-train"))
        eval_ds = ds.subset(sorted(eval_ids), id=f"{ds.id}-eval")
        eval_slice = frozenset(e for e in eval_ds.example_ids if e in slice_ids)
        if not eval_slice or len(eval_slice) == len(eval_ds):
            continue
        preds = predict_labels(model, eval_ds)
        overall = accuracy(preds, eval_ds.y)
        rows = [eval_ds.row_of(e) for e in sorted(eval_slice)]
        slice_acc = accuracy(preds[rows], eval_ds.y[rows])
        gap = overall - slice_acc
        if gap >= min_gap:
            return SliceCase(case_id, eval_ds, model, (eval_slice,), gap, attempt_seed)
    raise CannotRealizeGap(
        f"no seed in {SLICE_RETRY_BOUND} attempts realized a gap >= {min_gap}")


def forge_slicing_batch(spec: ForgeSpec, num_problems: int = 3,
                        slice_fraction: float = 0.3,
                        undersample_factor: float = 0.1, min_gap: float = 0.2,
                        k: int = 10, suite: SuiteConfig | None = None) -> SlicingProblem:
    if num_problems < 1:
        raise InvalidSpec("need at least one slice problem")
    suite = suite or default_suite()
    cases = tuple(
        _forge_slice_case(spec, suite, f"p{p}", slice_fraction,
                          undersample_factor, min_gap,
                          seed=spec.seed + 1000 * p, k=k)
        for p in range(num_problems))
    return SlicingProblem(f"slicing-s{spec.seed}", spec.seed, suite, k, cases)


def forge_slice_problem(spec: ForgeSpec, slice_fraction: float = 0.3,
                        undersample_factor: float = 0.1, min_gap: float = 0.2,
                        seed: int | None = None, k: int = 10,
                        suite: SuiteConfig | None = None) -> SliceCase:
    """Forge a single slice-discovery case (see forge_slicing_batch for batches)."""
    suite = suite or default_suite()
    return _forge_slice_case(spec, suite, "p0", slice_fraction,
                             undersample_factor, min_gap,
                             spec.seed if seed is None else seed, k)
