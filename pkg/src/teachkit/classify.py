"""Interactive-teaching core: labeled sample sets, on-demand classifier
heads, prediction, and temporal smoothing of the prediction stream.

Two heads are provided. The knn head stores every exemplar and votes by
cosine similarity (training is instant). The softmax head fits multinomial
logistic regression by full-batch gradient descent from zero initialization,
which is deterministic: retraining the same set with the same hyperparameters
reproduces the weights bit for bit.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyClass,
    NonFiniteLoss,
    TeachkitError,
    UnknownState,
)
from .vision import EMBED_DIM, EMBED_EPS, Embedding

DEFAULT_KNN_K = 5
DEFAULT_LR = 0.5
DEFAULT_EPOCHS = 200
DEFAULT_L2 = 1e-4


class TrainingCancelled(TeachkitError):
    pass


@dataclass
class StateClass:
    state_id: str
    name: str
    ordinal: int
    sample_count: int = 0


class TrainingSet:
    """Ordered classes plus their sample embeddings, in insertion order."""

    def __init__(self, embedding_dim: int = EMBED_DIM):
        self.embedding_dim = embedding_dim
        self.classes: list[StateClass] = []
        self.samples: dict[str, list[np.ndarray]] = {}

    def add_class(self, state_id: str, name: str | None = None) -> StateClass:
        if state_id in self.samples:
            raise TeachkitError(f"duplicate state id {state_id!r}")
        cls = StateClass(state_id=state_id, name=name or state_id,
                         ordinal=len(self.classes))
        self.classes.append(cls)
        self.samples[state_id] = []
        return cls

    def class_for(self, state_id: str) -> StateClass:
        for cls in self.classes:
            if cls.state_id == state_id:
                return cls
        raise UnknownState(state_id)

    def add_sample(self, state_id: str, emb: Embedding) -> str:
        cls = self.class_for(state_id)
        if emb.dim != self.embedding_dim:
            raise DimensionMismatch(
                f"embedding has {emb.dim} dims, set expects {self.embedding_dim}"
            )
        self.samples[state_id].append(np.asarray(emb.values, dtype=np.float64))
        cls.sample_count += 1
        return f"{state_id}/{cls.sample_count - 1}"

    def total_samples(self) -> int:
        return sum(len(v) for v in self.samples.values())

    def require_samples(self):
        if not self.classes:
            raise TeachkitError("training set has no classes")
        for cls in self.classes:
            if not self.samples[cls.state_id]:
                raise EmptyClass(cls.state_id)

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        """All samples as (N, D) plus class-index labels, classes in order,
        samples in insertion order within each class."""
        xs, ys = [], []
        for idx, cls in enumerate(self.classes):
            for vec in self.samples[cls.state_id]:
                xs.append(vec)
                ys.append(idx)
        return np.vstack(xs), np.array(ys, dtype=np.intp)


@dataclass
class ClassifierModel:
    head_kind: str  # "knn" | "softmax"
    embedding_dim: int
    classes: list[StateClass]
    trained_at_ms: float = 0.0
    config_digest: str = ""
    # knn head
    exemplars: np.ndarray | None = None  # (N, D) unit rows
    exemplar_labels: np.ndarray | None = None  # (N,) class indices
    k: int = DEFAULT_KNN_K
    k_clamped: bool = False
    # softmax head
    weights: np.ndarray | None = None  # (K, D)
    bias: np.ndarray | None = None  # (K,)
    final_loss: float | None = None
    loss_history: list[float] = field(default_factory=list)

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def class_index(self, state_id: str) -> int:
        for idx, cls in enumerate(self.classes):
            if cls.state_id == state_id:
                return idx
        raise UnknownState(state_id)


@dataclass(frozen=True)
class Prediction:
    probabilities: np.ndarray
    top_state_id: str
    top_confidence: float
    timestamp_ms: float = 0.0


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def train_knn(tset: TrainingSet, k: int = DEFAULT_KNN_K,
              trained_at_ms: float = 0.0) -> ClassifierModel:
    tset.require_samples()
    x, y = tset.stacked()
    norms = np.sqrt(np.sum(x * x, axis=1, keepdims=True))
    x = x / np.maximum(norms, EMBED_EPS)
    clamped = k > x.shape[0]
    k_eff = min(k, x.shape[0])
    return ClassifierModel(
        head_kind="knn",
        embedding_dim=tset.embedding_dim,
        classes=[StateClass(c.state_id, c.name, c.ordinal, c.sample_count)
                 for c in tset.classes],
        trained_at_ms=trained_at_ms,
        config_digest=_digest(f"knn:k={k}"),
        exemplars=x,
        exemplar_labels=y,
        k=k_eff,
        k_clamped=clamped,
    )


def train_softmax(tset: TrainingSet, lr: float = DEFAULT_LR,
                  epochs: int = DEFAULT_EPOCHS, l2: float = DEFAULT_L2,
                  trained_at_ms: float = 0.0, progress=None,
                  should_cancel=None) -> ClassifierModel:
    """Full-batch gradient descent on mean cross-entropy + (l2/2)*||W||^2,
    zero-initialized. Bias is unregularized."""
    tset.require_samples()
    if len(tset.classes) < 2:
        raise TeachkitError("softmax head requires at least 2 classes; use knn")
    x, y = tset.stacked()
    n, d = x.shape
    k = len(tset.classes)
    onehot = np.zeros((n, k), dtype=np.float64)
    onehot[np.arange(n), y] = 1.0

    w = np.zeros((k, d), dtype=np.float64)
    b = np.zeros(k, dtype=np.float64)
    losses: list[float] = []

    def loss_and_probs():
        logits = x @ w.T + b
        logits -= logits.max(axis=1, keepdims=True)
        expz = np.exp(logits)
        probs = expz / expz.sum(axis=1, keepdims=True)
        with np.errstate(divide="ignore"):  # log(0) -> inf -> NonFiniteLoss
            ce = -np.mean(np.log(probs[np.arange(n), y]))
        return ce + 0.5 * l2 * float(np.sum(w * w)), probs

    for epoch in range(epochs):
        if should_cancel is not None and should_cancel():
            raise TrainingCancelled("training cancelled")
        loss, probs = loss_and_probs()
        if not math.isfinite(loss):
            raise NonFiniteLoss(
                f"loss became non-finite at epoch {epoch} (lr={lr}); lower lr"
            )
        losses.append(loss)
        g = (probs - onehot) / n
        w -= lr * (g.T @ x + l2 * w)
        b -= lr * g.sum(axis=0)
        if progress is not None:
            progress((epoch + 1) / epochs)

    final_loss, _ = loss_and_probs()
    if not math.isfinite(final_loss):
        raise NonFiniteLoss(f"final loss non-finite (lr={lr}); lower lr")
    losses.append(final_loss)

    return ClassifierModel(
        head_kind="softmax",
        embedding_dim=tset.embedding_dim,
        classes=[StateClass(c.state_id, c.name, c.ordinal, c.sample_count)
                 for c in tset.classes],
        trained_at_ms=trained_at_ms,
        config_digest=_digest(f"softmax:lr={lr},epochs={epochs},l2={l2}"),
        weights=w,
        bias=b,
        final_loss=final_loss,
        loss_history=losses,
    )


def train_auto(tset: TrainingSet, trained_at_ms: float = 0.0,
               progress=None, should_cancel=None) -> ClassifierModel:
    """Default head: softmax for >=2 classes, knn otherwise."""
    if len(tset.classes) >= 2:
        return train_softmax(tset, trained_at_ms=trained_at_ms,
                             progress=progress, should_cancel=should_cancel)
    return train_knn(tset, trained_at_ms=trained_at_ms)


def predict(model: ClassifierModel, emb: Embedding,
            timestamp_ms: float = 0.0) -> Prediction:
    vec = np.asarray(emb.values, dtype=np.float64)
    if vec.shape[0] != model.embedding_dim:
        raise DimensionMismatch(
            f"embedding has {vec.shape[0]} dims, model expects {model.embedding_dim}"
        )
    if model.head_kind == "softmax":
        z = model.weights @ vec + model.bias
        z = z - z.max()
        expz = np.exp(z)
        probs = expz / expz.sum()
        best = int(np.argmax(probs))  # argmax takes the lowest index on ties
    elif model.head_kind == "knn":
        sims = model.exemplars @ vec
        # stable order: similarity desc, insertion index asc
        order = np.lexsort((np.arange(sims.shape[0]), -sims))
        top = order[: model.k]
        votes = np.bincount(model.exemplar_labels[top], minlength=model.num_classes)
        probs = votes / float(model.k)
        best = _knn_top(model, sims, top, votes)
    else:
        raise TeachkitError(f"unknown head kind {model.head_kind!r}")
    return Prediction(
        probabilities=probs,
        top_state_id=model.classes[best].state_id,
        top_confidence=float(probs[best]),
        timestamp_ms=timestamp_ms,
    )


def _knn_top(model: ClassifierModel, sims, top_idx, votes) -> int:
    """Vote-count winner; ties by greater mean similarity within the top-k,
    then lower class index."""
    max_votes = votes.max()
    tied = [c for c in range(len(votes)) if votes[c] == max_votes]
    if len(tied) == 1:
        return tied[0]
    best, best_mean = tied[0], -np.inf
    for c in tied:
        members = [i for i in top_idx if model.exemplar_labels[i] == c]
        mean_sim = float(np.mean(sims[members]))
        if mean_sim > best_mean:
            best, best_mean = c, mean_sim
    return best


@dataclass
class SmootherConfig:
    window_n: int = 7
    confidence_tau: float = 0.6
    hysteresis_m: int = 3

    def __post_init__(self):
        if not (1 <= self.hysteresis_m <= self.window_n):
            raise TeachkitError(
                f"hysteresis ({self.hysteresis_m}) must be in [1, window ({self.window_n})]"
            )
        if not (0.0 <= self.confidence_tau <= 1.0):
            raise TeachkitError("confidence threshold must be in [0, 1]")


@dataclass
class SmootherState:
    stable: str | None = None
    candidate: str | None = None
    run_length: int = 0
    last_timestamp_ms: float = -math.inf


@dataclass(frozen=True)
class StateEvent:
    state_id: str
    from_state_id: str | None
    timestamp_ms: float


def smooth(pred: Prediction, state: SmootherState,
           cfg: SmootherConfig) -> StateEvent | None:
    """Hysteresis debounce: a candidate becomes stable after hysteresis_m
    consecutive confident predictions; low-confidence frames reset the run."""
    if pred.timestamp_ms < state.last_timestamp_ms:
        raise TeachkitError("predictions must arrive in nondecreasing time order")
    state.last_timestamp_ms = pred.timestamp_ms

    if pred.top_confidence < cfg.confidence_tau:
        state.candidate = None
        state.run_length = 0
        return None
    if pred.top_state_id == state.candidate:
        state.run_length += 1
    else:
        state.candidate = pred.top_state_id
        state.run_length = 1
    if state.candidate != state.stable and state.run_length >= cfg.hysteresis_m:
        event = StateEvent(
            state_id=state.candidate,
            from_state_id=state.stable,
            timestamp_ms=pred.timestamp_ms,
        )
        state.stable = state.candidate
        return event
    return None


@dataclass
class EvalReport:
    accuracy: float
    confusion: np.ndarray  # [true_index][predicted_index]


def evaluate(model: ClassifierModel, corpus) -> EvalReport:
    """corpus: iterable of (Embedding, state_id) pairs."""
    items = list(corpus)
    if not items:
        raise TeachkitError("evaluation corpus is empty")
    k = model.num_classes
    confusion = np.zeros((k, k), dtype=np.int64)
    for emb, state_id in items:
        true_idx = model.class_index(state_id)
        pred = predict(model, emb)
        confusion[true_idx][model.class_index(pred.top_state_id)] += 1
    accuracy = float(np.trace(confusion)) / float(confusion.sum())
    return EvalReport(accuracy=accuracy, confusion=confusion)
