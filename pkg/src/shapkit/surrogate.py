"""Masked-input surrogate models.

A surrogate network learns to mimic the original classifier when only a
subset of features is visible, which approximates marginalizing held-out
features with their conditional distribution.  Masked features are
zero-imputed and the mask itself is concatenated as an indicator channel,
so a masked coordinate (0 with indicator 0) can never collide with an
observed input (indicator 1).

The same training routine with a uniform subset distribution produces the
evaluation model used by the inclusion/exclusion benchmark, where every
subset must carry equal weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .games import CooperativeGame, ShapleyKernel
from .networks import (
    DenseNet,
    EpochRecord,
    TrainConfig,
    kl_divergence_loss,
    load_net,
    save_net,
    train,
)
from .removal import IDENTITY_LINK, LinkFunction

__all__ = [
    "MaskedInput",
    "mask_input",
    "encode_masked",
    "SurrogateModel",
    "sample_training_masks",
    "train_surrogate",
    "SurrogateValueFunction",
    "surrogate_value_function",
]

SUBSET_DISTRIBUTIONS = ("shapley_kernel", "uniform")


@dataclass
class MaskedInput:
    """An input with held-out coordinates zeroed, plus the mask indicator."""

    masked_features: np.ndarray
    mask_indicator: np.ndarray

    def encode(self) -> np.ndarray:
        """The 2d-vector the surrogate network consumes."""
        return np.concatenate([self.masked_features, self.mask_indicator.astype(float)])


def mask_input(x: np.ndarray, s: np.ndarray) -> MaskedInput:
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=bool)
    if x.shape != s.shape:
        raise ValueError(f"input shape {x.shape} != mask shape {s.shape}")
    return MaskedInput(np.where(s, x, 0.0), s)


def encode_masked(x: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """Batched encoder: rows of (x * s, s), shape (n, 2d)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    masks = np.atleast_2d(np.asarray(masks, dtype=bool))
    return np.concatenate([np.where(masks, x, 0.0), masks.astype(float)], axis=1)


class SurrogateModel:
    """Softmax network over masked inputs, tagged with the subset
    distribution it was trained on so evaluation models cannot be confused
    with explanation surrogates."""

    def __init__(self, net: DenseNet, num_features: int, subset_distribution: str):
        if net.head != "softmax":
            raise ValueError("surrogate networks need a softmax head")
        if net.input_size != 2 * num_features:
            raise ValueError("surrogate input size must be 2d (features + indicator)")
        if subset_distribution not in SUBSET_DISTRIBUTIONS:
            raise ValueError(f"unknown subset distribution {subset_distribution!r}")
        self.net = net
        self.num_features = num_features
        self.subset_distribution = subset_distribution

    @property
    def num_classes(self) -> int:
        return self.net.output_size

    @classmethod
    def build(
        cls,
        num_features: int,
        num_classes: int,
        hidden: tuple[int, ...] = (128, 128),
        rng: np.random.Generator | None = None,
        subset_distribution: str = "shapley_kernel",
    ) -> "SurrogateModel":
        rng = rng if rng is not None else np.random.default_rng(0)
        sizes = [2 * num_features, *hidden, num_classes]
        return cls(DenseNet.create(sizes, "softmax", rng), num_features, subset_distribution)

    def predict(self, x: np.ndarray, masks: np.ndarray) -> np.ndarray:
        """Class probabilities given the visible-feature mask, (n, K)."""
        return self.net.forward(encode_masked(x, masks))

    def save(self, path) -> None:
        save_net(self.net, path, meta={
            "artifact": "surrogate",
            "num_features": self.num_features,
            "subset_distribution": self.subset_distribution,
        })

    @classmethod
    def load(cls, path) -> "SurrogateModel":
        net, meta = load_net(path)
        if meta.get("artifact") != "surrogate":
            raise ValueError(f"{path} is not a surrogate model artifact")
        return cls(net, int(meta["num_features"]), meta["subset_distribution"])


def sample_training_masks(
    num_features: int,
    n: int,
    distribution: str,
    rng: np.random.Generator,
    kernel: ShapleyKernel | None = None,
) -> np.ndarray:
    """Subset masks for surrogate training.

    uniform: every bit is an independent fair coin, so the empty and full
    subsets occur naturally.  shapley_kernel: kernel draws, with the empty
    and full subsets mixed in at probability 1/(d+1) each so the surrogate
    also trains on the endpoints every game evaluation needs.
    """
    d = num_features
    if distribution == "uniform":
        return rng.random((n, d)) < 0.5
    if distribution != "shapley_kernel":
        raise ValueError(f"unknown subset distribution {distribution!r}")
    kernel = kernel if kernel is not None else ShapleyKernel(d)
    masks = kernel.sample(rng, n)
    u = rng.random(n)
    masks[u < 1.0 / (d + 1)] = False
    masks[(u >= 1.0 / (d + 1)) & (u < 2.0 / (d + 1))] = True
    return masks


def train_surrogate(
    f,
    x_train: np.ndarray,
    x_val: np.ndarray,
    *,
    subset_distribution: str = "shapley_kernel",
    config: TrainConfig | None = None,
    hidden: tuple[int, ...] = (128, 128),
) -> tuple[SurrogateModel, list[EpochRecord]]:
    """Fit a surrogate by minimizing mean KL(f(x) || surrogate(masked x)).

    Each minibatch pairs every input with a fresh mask from the chosen
    subset distribution.  Validation masks are sampled once at setup so the
    early-stopping signal is low variance.
    """
    config = config if config is not None else TrainConfig()
    x_train = np.asarray(x_train, dtype=float)
    x_val = np.asarray(x_val, dtype=float)
    d = x_train.shape[1]
    targets = np.asarray(f(x_train), dtype=float)
    targets_val = np.asarray(f(x_val), dtype=float)
    k = targets.shape[1]

    rng_setup = np.random.default_rng(config.seed)
    model = SurrogateModel.build(d, k, hidden, rng_setup, subset_distribution)
    kernel = ShapleyKernel(d) if d >= 2 else None
    val_masks = sample_training_masks(d, x_val.shape[0], subset_distribution, rng_setup, kernel)
    val_inputs = encode_masked(x_val, val_masks)

    def batch_step(net, idx, rng):
        masks = sample_training_masks(d, idx.size, subset_distribution, rng, kernel)
        out, cache = net.forward_cached(encode_masked(x_train[idx], masks))
        loss, grad = kl_divergence_loss(out, targets[idx])
        return loss, net.backward(cache, grad)

    def val_loss(net):
        return kl_divergence_loss(net.forward(val_inputs), targets_val)[0]

    trained, log = train(model.net, batch_step, x_train.shape[0], val_loss, config)
    return SurrogateModel(trained, d, subset_distribution), log


class SurrogateValueFunction:
    """v_y(s) = link(surrogate class-y probability of the masked input).

    One network forward per subset evaluation, all classes at once.
    """

    kind = "surrogate"
    evals_per_subset = 1

    def __init__(self, surrogate: SurrogateModel, link: LinkFunction = IDENTITY_LINK):
        self.surrogate = surrogate
        self.link = link
        self.num_classes = surrogate.num_classes

    def values(self, x: np.ndarray, masks: np.ndarray) -> np.ndarray:
        return self.link(self.surrogate.predict(x, masks))

    def game(self, x: np.ndarray, y: int) -> CooperativeGame:
        x = np.asarray(x, dtype=float)
        if not 0 <= y < self.num_classes:
            raise ValueError(f"class index {y} out of range [0, {self.num_classes})")
        fn = lambda masks: self.values(np.broadcast_to(x, (masks.shape[0], x.size)), masks)[:, y]
        return CooperativeGame(x.size, fn, evals_per_subset=1, class_index=y)


def surrogate_value_function(
    surrogate: SurrogateModel, x: np.ndarray, y: int, link: LinkFunction = IDENTITY_LINK
) -> CooperativeGame:
    """Cooperative game for one (x, y) backed by a trained surrogate."""
    return SurrogateValueFunction(surrogate, link).game(x, y)
