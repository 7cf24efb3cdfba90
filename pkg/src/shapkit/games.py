"""Feature subsets, cooperative games, and the Shapley kernel distribution.

A subset of the d features is represented as a boolean mask of length d
(or a stack of masks with shape (n, d)).  A cooperative game wraps a set
function v(s) for one instance; its empty-subset and full-subset values
are cached at construction so downstream code can treat them as constants.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy.special import gammaln, logsumexp

__all__ = [
    "complement",
    "cardinality",
    "mask_to_code",
    "code_to_mask",
    "codes_to_masks",
    "kernel_weight",
    "log_kernel_weight",
    "ShapleyKernel",
    "sample_paired",
    "CooperativeGame",
]

# C(d,k) exceeds float64 range near d ~ 1030; switch to log space well before.
_LOG_SPACE_DIM = 30


def complement(mask: np.ndarray) -> np.ndarray:
    """Flip every bit of a mask (or stack of masks)."""
    return ~np.asarray(mask, dtype=bool)


def cardinality(mask: np.ndarray) -> np.ndarray:
    """Number of included features, along the last axis."""
    return np.asarray(mask, dtype=bool).sum(axis=-1)


def mask_to_code(mask: np.ndarray) -> int:
    """Integer encoding of a mask, bit i = feature i."""
    mask = np.asarray(mask, dtype=bool)
    return int(np.sum(mask * (1 << np.arange(mask.shape[-1], dtype=np.int64))))


def code_to_mask(code: int, dimension: int) -> np.ndarray:
    return codes_to_masks(np.asarray([code]), dimension)[0]


def codes_to_masks(codes: np.ndarray, dimension: int) -> np.ndarray:
    """Decode integer-encoded subsets into an (n, d) boolean matrix."""
    codes = np.asarray(codes, dtype=np.int64)
    return ((codes[:, None] >> np.arange(dimension, dtype=np.int64)) & 1).astype(bool)


def log_kernel_weight(dimension: int, k: int | np.ndarray) -> np.ndarray:
    """log of the Shapley kernel weight (d-1) / (C(d,k) * k * (d-k))."""
    d = dimension
    k = np.asarray(k, dtype=np.int64)
    if d < 2:
        raise ValueError(f"kernel weight needs dimension >= 2, got {d}")
    if np.any(k < 1) or np.any(k > d - 1):
        raise ValueError("kernel weight is infinite for the empty and full subsets")
    log_binom = gammaln(d + 1) - gammaln(k + 1) - gammaln(d - k + 1)
    return math.log(d - 1) - log_binom - np.log(k) - np.log(d - k)


def kernel_weight(dimension: int, k: int) -> float:
    """Shapley kernel weight for a subset of cardinality k out of d features.

    Direct evaluation for small d; log-space for d > 30 where the binomial
    coefficient would lose or overflow float64 precision.
    """
    d = dimension
    if d < 2:
        raise ValueError(f"kernel weight needs dimension >= 2, got {d}")
    if not 1 <= k <= d - 1:
        raise ValueError(
            f"kernel weight undefined for k={k} with d={d}; the empty and full "
            "subsets are handled by the efficiency constraint, not sampling"
        )
    if d <= _LOG_SPACE_DIM:
        return (d - 1) / (math.comb(d, k) * k * (d - k))
    return float(np.exp(log_kernel_weight(d, k)))


class ShapleyKernel:
    """The subset distribution p(s) under which constrained weighted least
    squares recovers the Shapley values.

    Sampling factorizes exactly: draw a cardinality k with probability
    proportional to (number of subsets of size k) * kernel_weight(d, k),
    then a uniformly random subset of that cardinality.  Cardinalities 0
    and d are excluded from the support.
    """

    def __init__(self, dimension: int):
        if dimension < 2:
            raise ValueError(f"Shapley kernel needs dimension >= 2, got {dimension}")
        self.dimension = dimension
        ks = np.arange(1, dimension)
        log_counts = gammaln(dimension + 1) - gammaln(ks + 1) - gammaln(dimension - ks + 1)
        log_p = log_counts + log_kernel_weight(dimension, ks)
        self.cardinality_weights = np.exp(log_p - logsumexp(log_p))

    def sample_cardinalities(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.choice(np.arange(1, self.dimension), size=n, p=self.cardinality_weights)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n subset masks, shape (n, d)."""
        d = self.dimension
        ks = self.sample_cardinalities(rng, n)
        # Uniform subset of size k per row: rank features by iid uniforms
        # and keep the k smallest.
        u = rng.random((n, d))
        ranks = np.argsort(np.argsort(u, axis=1), axis=1)
        return ranks < ks[:, None]


def sample_paired(kernel: ShapleyKernel, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n masks as n/2 kernel samples interleaved with their complements.

    The complement map preserves kernel probability, so the pooled rows are
    still kernel-distributed.
    """
    if n % 2 != 0:
        raise ValueError(f"paired sampling needs an even count, got {n}")
    half = kernel.sample(rng, n // 2)
    out = np.empty((n, kernel.dimension), dtype=bool)
    out[0::2] = half
    out[1::2] = ~half
    return out


class CooperativeGame:
    """An evaluatable set function v(s) for one instance.

    ``fn`` maps a stack of masks (n, d) to values (n,) and must be
    deterministic (stochastic formulations fix their background sample at
    construction).  v(empty) and v(full) are evaluated once and cached.

    ``evals_per_subset`` is the model-evaluation cost of one v(s) call,
    used by the benchmark harness (e.g. the background size for a
    marginal-expectation game).
    """

    def __init__(
        self,
        dimension: int,
        fn: Callable[[np.ndarray], np.ndarray],
        *,
        evals_per_subset: int = 1,
        class_index: int | None = None,
    ):
        if dimension < 1:
            raise ValueError(f"game dimension must be positive, got {dimension}")
        self.dimension = dimension
        self._fn = fn
        self.evals_per_subset = evals_per_subset
        self.class_index = class_index
        endpoints = fn(np.stack([np.zeros(dimension, bool), np.ones(dimension, bool)]))
        self.null_value = float(endpoints[0])
        self.grand_value = float(endpoints[1])

    def evaluate(self, masks: np.ndarray) -> float | np.ndarray:
        """v(s) for a single mask (d,) or a stack (n, d)."""
        masks = np.asarray(masks, dtype=bool)
        if masks.shape[-1] != self.dimension:
            raise ValueError(
                f"mask length {masks.shape[-1]} does not match game dimension {self.dimension}"
            )
        if masks.ndim == 1:
            return float(self._fn(masks[None, :])[0])
        return np.asarray(self._fn(masks), dtype=float)

    __call__ = evaluate

    def __repr__(self) -> str:  # pragma: no cover
        return (
            f"CooperativeGame(d={self.dimension}, null={self.null_value:.6g}, "
            f"grand={self.grand_value:.6g})"
        )
