"""Minimal dense-network stack: forward pass, analytic backprop, Adam,
plateau learning-rate scheduling and early stopping.

Parameters are plain numpy arrays held as a flat list [W0, b0, W1, b1, ...]
so the optimizer and finite-difference checks can treat every network the
same way.  Hidden layers use ReLU; the output head is either linear or
softmax.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "DenseNet",
    "TrainConfig",
    "AdamState",
    "TrainingDivergedError",
    "adam_step",
    "squared_error_loss",
    "kl_divergence_loss",
    "train",
    "train_supervised",
    "flatten_params",
    "unflatten_params",
    "save_net",
    "load_net",
]

PROB_CLIP = 1e-9


class TrainingDivergedError(RuntimeError):
    """Raised when a training loss turns non-finite."""


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class DenseNet:
    """Feed-forward network with explicit parameters and analytic gradients."""

    HEADS = ("linear", "softmax")

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray], head: str = "linear"):
        if head not in self.HEADS:
            raise ValueError(f"unknown output head {head!r}")
        if len(weights) != len(biases):
            raise ValueError("weights and biases must pair up layer by layer")
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.shape[0] != b.shape[0]:
                raise ValueError(f"layer {i}: bias length {b.shape[0]} != fan-out {w.shape[0]}")
            if i > 0 and w.shape[1] != weights[i - 1].shape[0]:
                raise ValueError(
                    f"layer {i}: fan-in {w.shape[1]} does not compose with "
                    f"previous fan-out {weights[i - 1].shape[0]}"
                )
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        self.head = head

    @classmethod
    def create(cls, layer_sizes: Sequence[int], head: str, rng: np.random.Generator) -> "DenseNet":
        """He-style uniform fan-in initialization; biases start at zero."""
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            limit = np.sqrt(6.0 / fan_in)
            weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases, head)

    @property
    def input_size(self) -> int:
        return self.weights[0].shape[1]

    @property
    def output_size(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def num_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def get_params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def set_params(self, params: Sequence[np.ndarray]) -> None:
        for i in range(len(self.weights)):
            self.weights[i] = np.asarray(params[2 * i], dtype=float)
            self.biases[i] = np.asarray(params[2 * i + 1], dtype=float)

    def copy(self) -> "DenseNet":
        return DenseNet([w.copy() for w in self.weights], [b.copy() for b in self.biases], self.head)

    def forward_cached(self, x: np.ndarray):
        """Forward pass keeping pre-activations for the backward pass."""
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        a = x[None, :] if squeeze else x
        if a.shape[1] != self.input_size:
            raise ValueError(f"input width {a.shape[1]} != first-layer fan-in {self.input_size}")
        activations = [a]
        pre = []
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = activations[-1] @ w.T + b
            pre.append(z)
            if i < last:
                activations.append(np.maximum(z, 0.0))
        out = _softmax(pre[-1]) if self.head == "softmax" else pre[-1]
        cache = (activations, pre, out, squeeze)
        return (out[0] if squeeze else out), cache

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.forward_cached(x)[0]

    __call__ = forward

    def backward(self, cache, out_grad: np.ndarray) -> list[np.ndarray]:
        """Gradients of a scalar loss w.r.t. every parameter.

        ``out_grad`` is the loss gradient w.r.t. the network output (after
        the head); for a softmax head the softmax Jacobian is applied here.
        Returns gradients in get_params() order.
        """
        activations, pre, out, squeezed = cache
        g = np.asarray(out_grad, dtype=float)
        if g.ndim == 1 and not squeezed:
            raise ValueError("upstream gradient shape does not match cached batch")
        g = np.atleast_2d(g)
        if g.shape != out.shape:
            raise ValueError(f"upstream gradient shape {g.shape} != output shape {out.shape}")
        if self.head == "softmax":
            gz = out * (g - (g * out).sum(axis=1, keepdims=True))
        else:
            gz = g
        grads: list[np.ndarray] = []
        for i in range(len(self.weights) - 1, -1, -1):
            grads.append(gz.sum(axis=0))          # bias
            grads.append(gz.T @ activations[i])   # weight
            if i > 0:
                gz = (gz @ self.weights[i]) * (pre[i - 1] > 0)
        grads.reverse()
        return grads


def flatten_params(params: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate([p.ravel() for p in params])


def unflatten_params(vec: np.ndarray, like: Sequence[np.ndarray]) -> list[np.ndarray]:
    out, pos = [], 0
    for p in like:
        out.append(vec[pos:pos + p.size].reshape(p.shape))
        pos += p.size
    return out


# ---------------------------------------------------------------------------
# Losses.  Each returns (scalar loss, gradient w.r.t. the prediction), with
# the minibatch mean baked into both.
# ---------------------------------------------------------------------------

def squared_error_loss(pred: np.ndarray, target: np.ndarray):
    pred = np.atleast_2d(pred)
    target = np.atleast_2d(target)
    diff = pred - target
    loss = float(np.mean(diff ** 2))
    return loss, 2.0 * diff / diff.size


def kl_divergence_loss(pred_probs: np.ndarray, target_probs: np.ndarray, clip: float = PROB_CLIP):
    """Mean KL(target || pred) over the batch; pred clipped away from zero.

    With one-hot targets this is the usual cross-entropy up to the (zero)
    target entropy, so it doubles as the classifier loss.
    """
    p = np.clip(np.atleast_2d(pred_probs), clip, None)
    t = np.atleast_2d(target_probs)
    n = p.shape[0]
    terms = np.where(t > 0, t * (np.log(np.where(t > 0, t, 1.0)) - np.log(p)), 0.0)
    loss = float(terms.sum() / n)
    grad = -(t / p) / n
    return loss, grad


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray], **kwargs) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            **kwargs,
        )


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamState,
    lr: float,
) -> list[np.ndarray]:
    """One bias-corrected Adam update; returns new parameter arrays.

    The moment accumulators and step counter in ``state`` are updated in
    place.
    """
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = b1 * state.m[i] + (1 - b1) * g
        state.v[i] = b2 * state.v[i] + (1 - b2) * g * g
        m_hat = state.m[i] / (1 - b1 ** t)
        v_hat = state.v[i] / (1 - b2 ** t)
        out.append(p - lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return out


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 128
    plateau_patience: int = 3
    plateau_factor: float = 0.5
    early_stop_patience: int = 10
    max_epochs: int = 100
    seed: int = 0
    # an epoch "improves" only if val drops by more than this, relatively
    min_rel_improvement: float = 1e-6

    def __post_init__(self):
        if not 0 < self.plateau_factor < 1:
            raise ValueError("plateau_factor must lie in (0, 1)")
        if self.plateau_patience < 1 or self.early_stop_patience < 1:
            raise ValueError("patiences must be >= 1")
        if self.learning_rate <= 0 or self.batch_size < 1 or self.max_epochs < 0:
            raise ValueError("invalid training configuration")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    learning_rate: float


def train(
    net: DenseNet,
    batch_step: Callable[[DenseNet, np.ndarray, np.random.Generator], tuple[float, list[np.ndarray]]],
    n_train: int,
    val_loss_fn: Callable[[DenseNet], float],
    config: TrainConfig,
) -> tuple[DenseNet, list[EpochRecord]]:
    """Minibatch Adam with plateau LR decay, early stopping and best-epoch
    restoration.

    ``batch_step(net, indices, rng)`` computes the minibatch loss and its
    parameter gradients; ``val_loss_fn(net)`` scores the held-out set.  The
    index stream and any sampling inside batch_step derive from the config
    seed, so training is reproducible.
    """
    if n_train < 1:
        raise ValueError("empty training set")
    net = net.copy()
    if config.max_epochs == 0:
        return net, []

    rng = np.random.default_rng(config.seed)
    state = AdamState.for_params(net.get_params())
    lr = config.learning_rate
    best_val = np.inf
    best_params: list[np.ndarray] | None = None
    stale = 0
    log: list[EpochRecord] = []

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n_train)
        epoch_losses = []
        for start in range(0, n_train, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grads = batch_step(net, idx, rng)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite training loss {loss!r} at epoch {epoch}, batch offset {start}"
                )
            net.set_params(adam_step(net.get_params(), grads, state, lr))
            epoch_losses.append(loss)
        val = float(val_loss_fn(net))
        if not np.isfinite(val):
            raise TrainingDivergedError(f"non-finite validation loss at epoch {epoch}")
        log.append(EpochRecord(epoch, float(np.mean(epoch_losses)), val, lr))

        if best_params is None or val < best_val - config.min_rel_improvement * abs(best_val):
            best_val = val
            best_params = [p.copy() for p in net.get_params()]
            stale = 0
        else:
            stale += 1
            if stale % config.plateau_patience == 0:
                lr *= config.plateau_factor
            if stale >= config.early_stop_patience:
                break

    if best_params is not None:
        net.set_params(best_params)
    return net, log


def train_supervised(
    net: DenseNet,
    x: np.ndarray,
    y: np.ndarray,
    loss_fn,
    config: TrainConfig,
    x_val: np.ndarray,
    y_val: np.ndarray,
) -> tuple[DenseNet, list[EpochRecord]]:
    """Convenience wrapper: fixed-target training on (x, y) pairs."""
    x = np.asarray(x, dtype=float)
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if y.shape[0] == 1 and x.shape[0] > 1:
        y = y.T

    def batch_step(model, idx, _rng):
        out, cache = model.forward_cached(x[idx])
        loss, grad = loss_fn(out, y[idx])
        return loss, model.backward(cache, grad)

    def val_loss(model):
        out = model.forward(np.asarray(x_val, dtype=float))
        yv = np.atleast_2d(np.asarray(y_val, dtype=float))
        if yv.shape[0] == 1 and np.asarray(x_val).shape[0] > 1:
            yv = yv.T
        return loss_fn(out, yv)[0]

    return train(net, batch_step, x.shape[0], val_loss, config)


# ---------------------------------------------------------------------------
# Serialization: npz with full float precision, round-trips bit exactly.
# ---------------------------------------------------------------------------

def save_net(net: DenseNet, path, meta: dict | None = None) -> None:
    arrays = {}
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
    arrays["head"] = np.array(net.head)
    arrays["n_layers"] = np.array(len(net.weights))
    arrays["meta"] = np.array(json.dumps(meta if meta is not None else {}, sort_keys=True))
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_net(path) -> tuple[DenseNet, dict]:
    with np.load(path, allow_pickle=False) as data:
        n = int(data["n_layers"])
        weights = [data[f"w{i}"] for i in range(n)]
        biases = [data[f"b{i}"] for i in range(n)]
        head = str(data["head"])
        meta = json.loads(str(data["meta"]))
    return DenseNet(weights, biases, head), meta
