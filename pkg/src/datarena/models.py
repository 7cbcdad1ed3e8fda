"""The fixed deterministic model suite.

Two linear classifiers (multinomial logistic regression and a one-vs-rest
linear SVM) trained by full-batch gradient descent from zero-initialized
weights for a fixed iteration count.  No randomness anywhere: identical
inputs produce bit-identical weights, which is what lets every score in
the harness be replayed exactly.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_X_y

from .dataset import Dataset
from .errors import DimensionMismatch, EmptyTrainSet, HarnessError

KINDS = ("logreg", "linear_svm")

# Fixed defaults: determinism and speed over accuracy ceiling. All
# submitters face the same suite.
DEFAULT_LEARNING_RATE = 0.1
DEFAULT_ITERATIONS = 500
DEFAULT_L2 = 1e-3


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def loss_and_gradient(kind, W, b, X, y, l2_lambda):
    """Loss, dW, db for one suite member at parameters (W, b).

    logreg: mean multinomial cross-entropy.  linear_svm: sum over classes
    of mean one-vs-rest hinge.  Both plus 0.5 * l2 * ||W||^2 (bias
    unregularized).
    """
    n = X.shape[0]
    scores = X @ W.T + b  # (n, k)
    if kind == "logreg":
        shifted = scores - scores.max(axis=1, keepdims=True)
        logz = np.log(np.exp(shifted).sum(axis=1))
        loss = float(np.mean(logz - shifted[np.arange(n), y]))
        P = np.exp(shifted)
        P /= P.sum(axis=1, keepdims=True)
        P[np.arange(n), y] -= 1.0
        G = P / n
    elif kind == "linear_svm":
        Y = np.where(y[:, None] == np.arange(W.shape[0])[None, :], 1.0, -1.0)
        margins = 1.0 - Y * scores
        loss = float(np.maximum(margins, 0.0).sum(axis=0).mean() * W.shape[0] / n)
        G = np.where(margins > 0.0, -Y, 0.0) / n
    else:
        raise HarnessError(f"unknown suite member kind {kind!r}")
    loss += 0.5 * l2_lambda * float((W * W).sum())
    dW = G.T @ X + l2_lambda * W
    db = G.sum(axis=0)
    return loss, dW, db


class FixedIterationLinearClassifier(BaseEstimator, ClassifierMixin):
    """Full-batch gradient-descent linear classifier with a fixed step count.

    No early stopping and no random state: training is a pure function of
    (hyperparameters, data).  `n_classes` pins the output width so a
    training set that happens to miss a class still yields a model over
    the full class set.
    """

    def __init__(self, kind="logreg", learning_rate=DEFAULT_LEARNING_RATE,
                 iterations=DEFAULT_ITERATIONS, l2_lambda=DEFAULT_L2,
                 n_classes=None):
        self.kind = kind
        self.learning_rate = learning_rate
        self.iterations = iterations
        self.l2_lambda = l2_lambda
        self.n_classes = n_classes

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        if self.kind not in KINDS:
            raise HarnessError(f"unknown suite member kind {self.kind!r}")
        if self.iterations < 1 or self.l2_lambda < 0:
            raise HarnessError("iterations >= 1 and l2_lambda >= 0 required")
        k = self.n_classes if self.n_classes is not None else int(y.max()) + 1
        W = np.zeros((k, X.shape[1]))
        b = np.zeros(k)
        lr = self.learning_rate
        for _ in range(self.iterations):
            _, dW, db = loss_and_gradient(self.kind, W, b, X, y, self.l2_lambda)
            W -= lr * dW
            b -= lr * db
        self.coef_ = W
        self.intercept_ = b
        self.classes_ = np.arange(k)
        return self

    def decision_function(self, X):
        X = check_array(X, dtype=np.float64)
        return X @ self.coef_.T + self.intercept_

    def predict(self, X):
        # argmax breaks score ties toward the lowest class index
        return np.argmax(self.decision_function(X), axis=1)


@dataclass(frozen=True)
class SuiteMember:
    kind: str
    learning_rate: float = DEFAULT_LEARNING_RATE
    iterations: int = DEFAULT_ITERATIONS
    l2_lambda: float = DEFAULT_L2

    def to_dict(self):
        return {"kind": self.kind, "learning_rate": self.learning_rate,
                "iterations": self.iterations, "l2_lambda": self.l2_lambda}

    @classmethod
    def from_dict(cls, d):
        return cls(str(d["kind"]), float(d["learning_rate"]),
                   int(d["iterations"]), float(d["l2_lambda"]))


@dataclass(frozen=True)
class SuiteConfig:
    members: tuple[SuiteMember, ...]
    seed: int = 0
    aggregation: str = "mean"  # "mean" (default) or "min"

    def __post_init__(self):
        if not self.members:
            raise HarnessError("suite needs at least one member")
        if self.aggregation not in ("mean", "min"):
            raise HarnessError(f"unknown aggregation {self.aggregation!r}")
        for m in self.members:
            if m.kind not in KINDS:
                raise HarnessError(f"unknown suite member kind {m.kind!r}")
            if m.iterations < 1 or m.l2_lambda < 0:
                raise HarnessError("iterations >= 1 and l2_lambda >= 0 required")

    def to_dict(self):
        return {"members": [m.to_dict() for m in self.members],
                "seed": self.seed, "aggregation": self.aggregation}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(SuiteMember.from_dict(m) for m in d["members"]),
                   int(d.get("seed", 0)), str(d.get("aggregation", "mean")))

    @property
    def hash(self) -> str:
        return sha256_text(canonical_json(self.to_dict()))


def default_suite(kinds=KINDS, aggregation="mean", seed=0) -> SuiteConfig:
    return SuiteConfig(tuple(SuiteMember(k) for k in kinds), seed, aggregation)


@dataclass(frozen=True)
class LinearModel:
    """Frozen weights of one trained suite member."""
    kind: str
    weights: np.ndarray  # (num_classes, dim)
    bias: np.ndarray  # (num_classes,)
    training_config_hash: str

    def __post_init__(self):
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias).all()):
            raise HarnessError("model weights must be finite")
        self.weights.setflags(write=False)
        self.bias.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    def __eq__(self, other):
        return (isinstance(other, LinearModel) and self.kind == other.kind
                and np.array_equal(self.weights, other.weights)
                and np.array_equal(self.bias, other.bias)
                and self.training_config_hash == other.training_config_hash)

    def to_dict(self):
        return {"kind": self.kind,
                "weights": [[repr(v) for v in row] for row in self.weights.tolist()],
                "bias": [repr(v) for v in self.bias.tolist()],
                "training_config_hash": self.training_config_hash}

    @classmethod
    def from_dict(cls, d):
        W = np.array([[float(v) for v in row] for row in d["weights"]], dtype=np.float64)
        b = np.array([float(v) for v in d["bias"]], dtype=np.float64)
        return cls(str(d["kind"]), W, b, str(d["training_config_hash"]))


def train(member: SuiteMember, train_set: Dataset) -> LinearModel:
    """Train one suite member on a labeled dataset. Deterministic."""
    if len(train_set) == 0:
        raise EmptyTrainSet("cannot train on an empty dataset")
    if train_set.has_nulls:
        raise HarnessError("train set contains NULL features; impute before training")
    if not train_set.labeled:
        raise HarnessError("train set has unlabeled examples")
    est = FixedIterationLinearClassifier(
        kind=member.kind, learning_rate=member.learning_rate,
        iterations=member.iterations, l2_lambda=member.l2_lambda,
        n_classes=len(train_set.classes),
    ).fit(train_set.X, train_set.y)
    return LinearModel(member.kind, est.coef_, est.intercept_,
                       sha256_text(canonical_json(member.to_dict())))


def train_suite(suite: SuiteConfig, train_set: Dataset) -> list[LinearModel]:
    return [train(m, train_set) for m in suite.members]


def predict_scores(model: LinearModel, data: Dataset) -> np.ndarray:
    """Per-example per-class scores W.x + b."""
    if data.dim != model.dim:
        raise DimensionMismatch(
            f"data dim {data.dim} != model dim {model.dim}")
    return data.X @ model.weights.T + model.bias


def predict_labels(model: LinearModel, data: Dataset) -> np.ndarray:
    return np.argmax(predict_scores(model, data), axis=1)


def aggregate(values, how: str) -> float:
    if how == "mean":
        return float(np.mean(values))
    if how == "min":
        return float(np.min(values))
    raise HarnessError(f"unknown aggregation {how!r}")
