"""Feature-removal value functions that query the original classifier.

Two formulations: replace held-out features with a fixed baseline point,
or average the model over a background sample (the marginal expectation).
Both return cooperative games for a single (x, y) and batched all-class
evaluators for explainer training.  The link (identity or log-odds) is
applied to the class probability after any averaging.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .games import CooperativeGame

__all__ = [
    "LinkFunction",
    "IDENTITY_LINK",
    "LOGIT_LINK",
    "BaselinePoint",
    "compute_baseline",
    "compose",
    "BaselineValueFunction",
    "MarginalValueFunction",
    "baseline_value_function",
    "marginal_value_function",
]


@dataclass(frozen=True)
class LinkFunction:
    """Map from class probability to the game's value scale."""

    kind: str = "identity"
    clip_epsilon: float = 1e-6

    def __post_init__(self):
        if self.kind not in ("identity", "logit"):
            raise ValueError(f"unknown link {self.kind!r}")

    def __call__(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.kind == "identity":
            return p
        p = np.clip(p, self.clip_epsilon, 1.0 - self.clip_epsilon)
        return np.log(p / (1.0 - p))


IDENTITY_LINK = LinkFunction("identity")
LOGIT_LINK = LinkFunction("logit")


@dataclass
class BaselinePoint:
    """Reference input used when features are removed: columnwise mean for
    continuous features, mode for discrete ones (train split only)."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("baseline entries must be finite")


def compute_baseline(x_train: np.ndarray, feature_kinds: Sequence[str]) -> BaselinePoint:
    x_train = np.asarray(x_train, dtype=float)
    if x_train.shape[0] == 0:
        raise ValueError("cannot compute a baseline from an empty split")
    if x_train.shape[1] != len(feature_kinds):
        raise ValueError("one feature kind per column is required")
    out = np.empty(x_train.shape[1])
    for j, kind in enumerate(feature_kinds):
        col = x_train[:, j]
        if kind == "continuous":
            out[j] = col.mean()
        elif kind == "discrete":
            # np.unique sorts ascending and argmax takes the first maximum,
            # so ties break toward the smallest value.
            uniq, counts = np.unique(col, return_counts=True)
            out[j] = uniq[np.argmax(counts)]
        else:
            raise ValueError(f"unknown feature kind {kind!r} for column {j}")
    return BaselinePoint(out)


def compose(x: np.ndarray, reference: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """Take x where the mask is on, the reference elsewhere."""
    return np.where(np.asarray(masks, dtype=bool), x, reference)


def _probe_classes(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> int:
    probe = np.asarray(f(np.asarray(x, dtype=float)[None, :]))
    if probe.ndim != 2:
        raise ValueError("classifier must map (n, d) inputs to (n, K) probabilities")
    return probe.shape[1]


class BaselineValueFunction:
    """v_y(s) = link(f_y(x with held-out features set to the baseline))."""

    kind = "baseline"
    evals_per_subset = 1

    def __init__(self, f, baseline: BaselinePoint, link: LinkFunction = IDENTITY_LINK):
        self.f = f
        self.baseline = baseline
        self.link = link
        self.num_classes = _probe_classes(f, baseline.values)

    def values(self, x: np.ndarray, masks: np.ndarray) -> np.ndarray:
        """All-class values, (n, K), for paired rows of inputs and masks."""
        composed = compose(np.atleast_2d(x), self.baseline.values, np.atleast_2d(masks))
        return self.link(np.asarray(self.f(composed), dtype=float))

    def game(self, x: np.ndarray, y: int) -> CooperativeGame:
        x = np.asarray(x, dtype=float)
        fn = lambda masks: self.values(np.broadcast_to(x, (masks.shape[0], x.size)), masks)[:, y]
        return CooperativeGame(x.size, fn, evals_per_subset=1, class_index=y)


class MarginalValueFunction:
    """v_y(s) = link(mean over background b of f_y(x with held-out features
    taken from b)).

    The background sample is fixed at construction so evaluation is
    deterministic; the link sits outside the mean.  Each subset evaluation
    costs one model call per background row.
    """

    kind = "marginal"

    def __init__(
        self,
        f,
        background: np.ndarray,
        link: LinkFunction = IDENTITY_LINK,
        *,
        background_size: int | None = None,
        rng: np.random.Generator | None = None,
    ):
        background = np.atleast_2d(np.asarray(background, dtype=float))
        if background.shape[0] == 0:
            raise ValueError("background must be nonempty")
        if background_size is not None and background_size < background.shape[0]:
            if rng is None:
                raise ValueError("subsampling the background needs a seeded rng")
            idx = rng.choice(background.shape[0], size=background_size, replace=False)
            background = background[idx]
        self.f = f
        self.background = background
        self.link = link
        self.evals_per_subset = background.shape[0]
        self.num_classes = _probe_classes(f, background[0])

    def values(self, x: np.ndarray, masks: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        masks = np.atleast_2d(masks)
        n, d = masks.shape
        b = self.background.shape[0]
        composed = np.where(masks[:, None, :], x[:, None, :], self.background[None, :, :])
        probs = np.asarray(self.f(composed.reshape(n * b, d)), dtype=float)
        return self.link(probs.reshape(n, b, -1).mean(axis=1))

    def game(self, x: np.ndarray, y: int) -> CooperativeGame:
        x = np.asarray(x, dtype=float)
        fn = lambda masks: self.values(np.broadcast_to(x, (masks.shape[0], x.size)), masks)[:, y]
        return CooperativeGame(
            x.size, fn, evals_per_subset=self.evals_per_subset, class_index=y
        )


def baseline_value_function(
    f, x: np.ndarray, y: int, baseline: BaselinePoint, link: LinkFunction = IDENTITY_LINK
) -> CooperativeGame:
    """Cooperative game for one (x, y) under baseline removal."""
    return BaselineValueFunction(f, baseline, link).game(x, y)


def marginal_value_function(
    f,
    x: np.ndarray,
    y: int,
    background: np.ndarray,
    link: LinkFunction = IDENTITY_LINK,
    *,
    background_size: int | None = None,
    rng: np.random.Generator | None = None,
) -> CooperativeGame:
    """Cooperative game for one (x, y) under marginal-expectation removal."""
    vf = MarginalValueFunction(f, background, link, background_size=background_size, rng=rng)
    return vf.game(x, y)
