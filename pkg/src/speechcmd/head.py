"""Classifier head: affine/ReLU stack trained with softmax cross-entropy.

The head is small enough that plain numpy in float64 trains it in seconds,
so everything here is explicit: forward pass, analytic gradients, Adam.
Parameters are a list of (weight [out x in], bias [out]) pairs, the same
layout the checkpoint format stores.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .rng import Rng, derive

CE_FLOOR = 1e-12  # probability clamp inside the reported loss


@dataclass(frozen=True)
class HeadConfig:
    in_dim: int
    n_classes: int = 12
    hidden_dims: tuple[int, ...] = (512,)

    def __post_init__(self):
        if self.in_dim < 1:
            raise InvalidInputError(f"in_dim must be positive, got {self.in_dim}")
        if self.n_classes < 2:
            raise InvalidInputError(f"need at least 2 classes, got {self.n_classes}")
        if any(h < 1 for h in self.hidden_dims):
            raise InvalidInputError(f"hidden dims must be positive, got {self.hidden_dims}")

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        """(out, in) of every affine layer, input to output."""
        dims = (self.in_dim, *self.hidden_dims, self.n_classes)
        return [(dims[i + 1], dims[i]) for i in range(len(dims) - 1)]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 15
    batch_size: int = 128
    learning_rate: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise InvalidInputError("epochs and batch_size must be positive")
        if self.learning_rate <= 0:
            raise InvalidInputError(f"learning_rate must be positive, got {self.learning_rate}")


def init_head(cfg: HeadConfig, rng: Rng) -> list[tuple[np.ndarray, np.ndarray]]:
    """Uniform(-a, a) weights with a = sqrt(6 / (fan_in + fan_out)); zero biases."""
    params = []
    for out_dim, in_dim in cfg.layer_shapes:
        a = np.sqrt(6.0 / (in_dim + out_dim))
        w = rng.uniform_array(out_dim * in_dim, -a, a).reshape(out_dim, in_dim)
        params.append((w, np.zeros(out_dim)))
    return params


def softmax(logits: np.ndarray) -> np.ndarray:
    # max subtraction first: exp never sees a large positive argument
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _activations(params, x: np.ndarray) -> list[np.ndarray]:
    """Layer inputs [a0=x, a1, ..., a_{L-1}] plus final logits at the end."""
    acts = [x]
    a = x
    for w, b in params[:-1]:
        a = np.maximum(a @ w.T + b, 0.0)
        acts.append(a)
    w, b = params[-1]
    acts.append(a @ w.T + b)
    return acts


def forward(params, x) -> np.ndarray:
    """Class probabilities, one row per input row."""
    x = _check_inputs(params, x)
    return softmax(_activations(params, x)[-1])


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-probability of the true class, clamped at CE_FLOOR."""
    p = probs[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(np.maximum(p, CE_FLOOR))))


def backward(params, x, labels) -> tuple[float, np.ndarray, list[tuple[np.ndarray, np.ndarray]]]:
    """One combined pass: (mean loss, probabilities, gradients).

    Gradients are the exact analytic derivatives of the unclamped mean
    cross-entropy; the CE_FLOOR clamp only guards the reported value.
    """
    x = _check_inputs(params, x)
    labels = _check_labels(params, labels, len(x))
    acts = _activations(params, x)
    probs = softmax(acts[-1])
    loss = cross_entropy(probs, labels)

    n = len(x)
    delta = probs.copy()
    delta[np.arange(n), labels] -= 1.0
    delta /= n

    grads = [None] * len(params)
    for layer in range(len(params) - 1, -1, -1):
        a_in = acts[layer]
        grads[layer] = (delta.T @ a_in, delta.sum(axis=0))
        if layer > 0:
            # ReLU mask from the stored post-activation; zero stays zero
            delta = (delta @ params[layer][0]) * (acts[layer] > 0.0)
    return loss, probs, grads


@dataclass
class AdamState:
    m: list[tuple[np.ndarray, np.ndarray]]
    v: list[tuple[np.ndarray, np.ndarray]]
    t: int = 0


def init_adam(params) -> AdamState:
    zeros = lambda p: [(np.zeros_like(w), np.zeros_like(b)) for w, b in p]
    return AdamState(m=zeros(params), v=zeros(params))


def adam_step(params, grads, state: AdamState, cfg: TrainConfig):
    """One Adam update in its bias-corrected textbook form:

        m = b1*m + (1-b1)*g        mhat = m / (1 - b1^t)
        v = b2*v + (1-b2)*g^2      vhat = v / (1 - b2^t)
        p = p - lr * mhat / (sqrt(vhat) + eps)

    Returns (new_params, new_state); inputs are left untouched.
    """
    t = state.t + 1
    bc1 = 1.0 - cfg.beta1**t
    bc2 = 1.0 - cfg.beta2**t
    new_params, new_m, new_v = [], [], []
    for (w, b), (gw, gb), (mw, mb), (vw, vb) in zip(params, grads, state.m, state.v):
        pair_p, pair_m, pair_v = [], [], []
        for p, g, m, v in ((w, gw, mw, vw), (b, gb, mb, vb)):
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * (g * g)
            p = p - cfg.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + cfg.epsilon)
            pair_p.append(p)
            pair_m.append(m)
            pair_v.append(v)
        new_params.append(tuple(pair_p))
        new_m.append(tuple(pair_m))
        new_v.append(tuple(pair_v))
    return new_params, AdamState(m=new_m, v=new_v, t=t)


@dataclass
class TrainHistory:
    rows: list[dict] = field(default_factory=list)

    @property
    def final_val_acc(self) -> float:
        return self.rows[-1]["val_acc"] if self.rows else 0.0


def evaluate(params, x, y) -> tuple[float, float]:
    """(mean cross-entropy, accuracy) on a labeled set."""
    x = _check_inputs(params, x)
    y = _check_labels(params, y, len(x))
    probs = softmax(_activations(params, x)[-1])
    loss = cross_entropy(probs, y)
    acc = float(np.mean(predict_from_probs(probs) == y))
    return loss, acc


def predict_from_probs(probs: np.ndarray) -> np.ndarray:
    # np.argmax takes the first maximum: ties go to the lowest class index
    return np.argmax(probs, axis=1)


def predict(params, x) -> tuple[np.ndarray, np.ndarray]:
    """(predicted class per row, full probability rows)."""
    probs = forward(params, x)
    return predict_from_probs(probs), probs


def train(
    x_train,
    y_train,
    x_val,
    y_val,
    head_cfg: HeadConfig,
    train_cfg: TrainConfig | None = None,
    seed: int = 0,
    on_epoch=None,
) -> tuple[list[tuple[np.ndarray, np.ndarray]], TrainHistory]:
    """Mini-batch Adam training with a fixed, seeded schedule.

    Each epoch reshuffles the training set from the run seed, walks it in
    batches of batch_size (final short batch included), and measures the
    validation split once. Reported train loss/accuracy are the
    batch-size-weighted averages of the pre-update forward passes, so epoch
    1 starts near ln(n_classes) for fresh parameters.
    """
    train_cfg = train_cfg or TrainConfig()
    x_train = np.asarray(x_train, dtype=np.float64)
    x_val = np.asarray(x_val, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.int64)
    y_val = np.asarray(y_val, dtype=np.int64)
    if len(x_train) == 0 or len(x_val) == 0:
        raise InvalidInputError("both train and val splits must be non-empty")
    if len(x_train) != len(y_train) or len(x_val) != len(y_val):
        raise InvalidInputError("feature/label row counts differ")
    missing = set(range(head_cfg.n_classes)) - set(np.unique(y_train).tolist())
    if missing:
        raise InvalidInputError(f"training split has no examples of classes {sorted(missing)}")

    params = init_head(head_cfg, Rng(derive(seed, "head-init")))
    state = init_adam(params)
    shuffle_rng = Rng(derive(seed, "train-shuffle"))

    history = TrainHistory()
    n = len(x_train)
    for epoch in range(1, train_cfg.epochs + 1):
        started = time.perf_counter()
        order = list(range(n))
        shuffle_rng.shuffle(order)

        loss_sum = 0.0
        hit_sum = 0.0
        for s in range(0, n, train_cfg.batch_size):
            batch = order[s : s + train_cfg.batch_size]
            xb, yb = x_train[batch], y_train[batch]
            loss, probs, grads = backward(params, xb, yb)
            loss_sum += loss * len(batch)
            hit_sum += float(np.sum(predict_from_probs(probs) == yb))
            params, state = adam_step(params, grads, state, train_cfg)

        val_loss, val_acc = evaluate(params, x_val, y_val)
        row = {
            "epoch": epoch,
            "train_loss": loss_sum / n,
            "train_acc": hit_sum / n,
            "val_loss": val_loss,
            "val_acc": val_acc,
            "seconds": time.perf_counter() - started,
        }
        history.rows.append(row)
        if on_epoch is not None:
            on_epoch(epoch, params, row)
    return params, history


def _check_inputs(params, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise InvalidInputError(f"inputs must be 2-D [rows x features], got shape {x.shape}")
    in_dim = params[0][0].shape[1]
    if x.shape[1] != in_dim:
        raise InvalidInputError(f"input width {x.shape[1]} does not match head in_dim {in_dim}")
    return x


def _check_labels(params, labels, n_rows: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (n_rows,):
        raise InvalidInputError(f"labels must be one int per row, got shape {labels.shape}")
    n_classes = params[-1][0].shape[0]
    if len(labels) and (labels.min() < 0 or labels.max() >= n_classes):
        raise InvalidInputError(f"labels must lie in [0, {n_classes})")
    return labels
