"""Amortized Shapley explainer.

A single network maps an input x to a d x K attribution matrix (one column
per class) in one forward pass.  It is trained without ground-truth
attributions: the objective penalizes the squared regression residual
v(s) - v(0) - s . phi over kernel-sampled subsets, jointly across all
classes, optionally with paired (complement) subset sampling, additive
efficient normalization inside the training graph, and a penalty on the
squared efficiency gap with weight gamma.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exact import Attribution
from .games import ShapleyKernel
from .networks import DenseNet, EpochRecord, TrainConfig, load_net, save_net, train

__all__ = [
    "additive_normalize",
    "ExplainerNet",
    "ExplainerConfig",
    "sample_explainer_masks",
    "explainer_loss_terms",
    "explainer_batch_loss",
    "train_explainer",
    "explain",
    "explain_all",
]


def additive_normalize(phi: np.ndarray, grand: float, null: float) -> np.ndarray:
    """Spread the efficiency gap evenly across coordinates.

    Returns phi + (grand - null - sum(phi)) / d; the orthogonal projection
    of phi onto the hyperplane where attributions sum to grand - null.
    """
    phi = np.asarray(phi, dtype=float)
    gap = grand - null - phi.sum()
    return phi + gap / phi.shape[-1]


def _normalize_batch(phi: np.ndarray, gap: np.ndarray) -> np.ndarray:
    # phi: (b, d, K); gap: (b, K)
    return phi + gap[:, None, :] / phi.shape[1]


@dataclass
class ExplainerConfig:
    """Knobs for explainer training.

    num_subset_samples is the number of masks drawn per input per batch
    (m); with paired sampling, half are drawn and half are their
    complements.  gamma weighs the efficiency-gap penalty; zero relies on
    normalization alone.
    """

    num_subset_samples: int = 32
    paired: bool = True
    normalize_train: bool = True
    normalize_inference: bool = True
    gamma: float = 0.0
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.num_subset_samples < 1:
            raise ValueError("need at least one subset sample per input")
        if self.paired and self.num_subset_samples % 2 != 0:
            raise ValueError("paired sampling needs an even number of subset samples")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")


class ExplainerNet:
    """Network emitting all d x K attributions in one forward pass."""

    def __init__(self, net: DenseNet, num_features: int, num_classes: int):
        if net.head != "linear":
            raise ValueError("attributions are signed reals; the head must be linear")
        if net.output_size != num_features * num_classes:
            raise ValueError("output size must be num_features * num_classes")
        if net.input_size != num_features:
            raise ValueError("input size must equal the number of features")
        self.net = net
        self.num_features = num_features
        self.num_classes = num_classes

    @classmethod
    def build(
        cls,
        num_features: int,
        num_classes: int,
        hidden: tuple[int, ...] = (128, 128),
        rng: np.random.Generator | None = None,
    ) -> "ExplainerNet":
        rng = rng if rng is not None else np.random.default_rng(0)
        sizes = [num_features, *hidden, num_features * num_classes]
        return cls(DenseNet.create(sizes, "linear", rng), num_features, num_classes)

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Attribution matrix, (d, K) for a single input or (n, d, K)."""
        x = np.asarray(x, dtype=float)
        out = self.net.forward(np.atleast_2d(x))
        out = out.reshape(-1, self.num_features, self.num_classes)
        return out[0] if x.ndim == 1 else out

    __call__ = forward

    def save(self, path, manifest: dict | None = None) -> None:
        meta = {
            "artifact": "explainer",
            "num_features": self.num_features,
            "num_classes": self.num_classes,
        }
        if manifest:
            meta["manifest"] = manifest
        save_net(self.net, path, meta=meta)

    @classmethod
    def load(cls, path) -> tuple["ExplainerNet", dict]:
        net, meta = load_net(path)
        if meta.get("artifact") != "explainer":
            raise ValueError(f"{path} is not an explainer artifact")
        explainer = cls(net, int(meta["num_features"]), int(meta["num_classes"]))
        return explainer, meta.get("manifest", {})


def sample_explainer_masks(
    kernel: ShapleyKernel, rng: np.random.Generator, batch: int, m: int, paired: bool
) -> np.ndarray:
    """Per-input subset samples, (batch, m, d); paired mode interleaves each
    draw with its complement along the m axis."""
    d = kernel.dimension
    if paired:
        half = kernel.sample(rng, batch * (m // 2)).reshape(batch, m // 2, d)
        out = np.empty((batch, m, d), dtype=bool)
        out[:, 0::2] = half
        out[:, 1::2] = ~half
        return out
    return kernel.sample(rng, batch * m).reshape(batch, m, d)


def explainer_loss_terms(
    phi_raw: np.ndarray,
    masks: np.ndarray,
    values: np.ndarray,
    null: np.ndarray,
    grand: np.ndarray,
    *,
    normalize_train: bool,
    gamma: float,
):
    """Loss and its gradient w.r.t. the raw attribution outputs.

    phi_raw: (b, d, K) network outputs; masks: (b, m, d); values: (b, m, K)
    game values at those masks; null/grand: (b, K) cached endpoints.

    The residual term averages squared v(s) - v(0) - s . phi over all
    b*m*K terms, with phi normalized inside the graph when requested; the
    penalty term averages the squared pre-normalization efficiency gap over
    b*K and is weighed by gamma.  Returns (total, residual_term,
    penalty_term, grad) where grad matches phi_raw's shape.
    """
    b, d, k = phi_raw.shape
    m = masks.shape[1]
    gap = grand - null - phi_raw.sum(axis=1)  # (b, K), pre-normalization
    penalty = float(np.mean(gap ** 2))
    phi = _normalize_batch(phi_raw, gap) if normalize_train else phi_raw
    s = masks.astype(float)
    pred = np.einsum("bmd,bdk->bmk", s, phi)
    resid = values - null[:, None, :] - pred
    residual_term = float(np.mean(resid ** 2))
    total = residual_term + gamma * penalty
    if not np.isfinite(total):
        bad = np.argwhere(~np.isfinite(resid))
        raise FloatingPointError(
            f"non-finite explainer loss; first offending (input, mask, class) index: "
            f"{tuple(bad[0]) if bad.size else 'penalty term'}"
        )

    grad_phi = np.einsum("bmk,bmd->bdk", resid, s) * (-2.0 / (b * m * k))
    if normalize_train:
        grad_phi = grad_phi - grad_phi.sum(axis=1, keepdims=True) / d
    if gamma != 0.0:
        grad_phi = grad_phi + gamma * (-2.0 / (b * k)) * gap[:, None, :]
    return total, residual_term, penalty, grad_phi


def explainer_batch_loss(
    explainer: ExplainerNet,
    value_fn,
    x_batch: np.ndarray,
    masks: np.ndarray,
    config: ExplainerConfig,
    endpoints: tuple[np.ndarray, np.ndarray] | None = None,
):
    """Evaluate the training objective on one batch.

    ``value_fn`` provides all-class game values; ``endpoints`` are the
    cached (null, grand) arrays for the batch, computed here when absent.
    Returns (total loss, parameter gradients).
    """
    x_batch = np.atleast_2d(np.asarray(x_batch, dtype=float))
    b, d = x_batch.shape
    m = masks.shape[1]
    if endpoints is None:
        null = value_fn.values(x_batch, np.zeros((b, d), bool))
        grand = value_fn.values(x_batch, np.ones((b, d), bool))
    else:
        null, grand = endpoints
    flat_x = np.repeat(x_batch, m, axis=0)
    vals = value_fn.values(flat_x, masks.reshape(b * m, d)).reshape(b, m, -1)

    out, cache = explainer.net.forward_cached(x_batch)
    phi_raw = out.reshape(b, d, explainer.num_classes)
    total, _, _, grad_phi = explainer_loss_terms(
        phi_raw, masks, vals, null, grand,
        normalize_train=config.normalize_train, gamma=config.gamma,
    )
    grads = explainer.net.backward(cache, grad_phi.reshape(b, d * explainer.num_classes))
    return total, grads


def train_explainer(
    value_fn,
    x_train: np.ndarray,
    x_val: np.ndarray,
    config: ExplainerConfig | None = None,
    *,
    hidden: tuple[int, ...] = (128, 128),
) -> tuple[ExplainerNet, list[EpochRecord]]:
    """Train the amortized explainer against a frozen value function.

    Per batch: draw m kernel masks per input (paired inversion when
    configured), evaluate the value function at them, and descend the
    regression objective jointly over all classes.  v(empty) and v(full)
    are evaluated once per input for the whole run.  Validation uses a
    mask set frozen at setup, so early stopping sees a low-variance signal.
    """
    config = config if config is not None else ExplainerConfig()
    x_train = np.asarray(x_train, dtype=float)
    x_val = np.asarray(x_val, dtype=float)
    d = x_train.shape[1]
    k = value_fn.num_classes
    m = config.num_subset_samples
    kernel = ShapleyKernel(d)

    rng_setup = np.random.default_rng(config.train.seed)
    explainer = ExplainerNet.build(d, k, hidden, rng_setup)

    null_tr = value_fn.values(x_train, np.zeros_like(x_train, dtype=bool))
    grand_tr = value_fn.values(x_train, np.ones_like(x_train, dtype=bool))
    null_val = value_fn.values(x_val, np.zeros_like(x_val, dtype=bool))
    grand_val = value_fn.values(x_val, np.ones_like(x_val, dtype=bool))

    n_val = x_val.shape[0]
    val_masks = sample_explainer_masks(kernel, rng_setup, n_val, m, config.paired)
    val_values = value_fn.values(
        np.repeat(x_val, m, axis=0), val_masks.reshape(n_val * m, d)
    ).reshape(n_val, m, k)

    def batch_step(net, idx, rng):
        xb = x_train[idx]
        masks = sample_explainer_masks(kernel, rng, idx.size, m, config.paired)
        flat_vals = value_fn.values(np.repeat(xb, m, axis=0), masks.reshape(idx.size * m, d))
        out, cache = net.forward_cached(xb)
        phi_raw = out.reshape(idx.size, d, k)
        total, _, _, grad_phi = explainer_loss_terms(
            phi_raw, masks, flat_vals.reshape(idx.size, m, k),
            null_tr[idx], grand_tr[idx],
            normalize_train=config.normalize_train, gamma=config.gamma,
        )
        return total, net.backward(cache, grad_phi.reshape(idx.size, d * k))

    def val_loss(net):
        phi_raw = net.forward(x_val).reshape(n_val, d, k)
        total, _, _, _ = explainer_loss_terms(
            phi_raw, val_masks, val_values, null_val, grand_val,
            normalize_train=config.normalize_train, gamma=config.gamma,
        )
        return total

    trained, log = train(explainer.net, batch_step, x_train.shape[0], val_loss, config.train)
    return ExplainerNet(trained, d, k), log


def explain(
    explainer: ExplainerNet,
    x: np.ndarray,
    y: int,
    *,
    null: float,
    grand: float,
    normalize: bool = True,
) -> Attribution:
    """Attribution for one (x, y) from a single network evaluation.

    ``null`` and ``grand`` are the game's cached endpoint values, used only
    by the normalization step.
    """
    if not 0 <= y < explainer.num_classes:
        raise ValueError(f"class index {y} out of range [0, {explainer.num_classes})")
    phi = explainer.forward(np.asarray(x, dtype=float))[:, y]
    if normalize:
        phi = additive_normalize(phi, grand, null)
    return Attribution(phi, null, grand, class_index=y)


def explain_all(explainer: ExplainerNet, x: np.ndarray) -> np.ndarray:
    """The full (d, K) attribution matrix for one input, un-normalized."""
    return explainer.forward(np.asarray(x, dtype=float))
