"""Non-amortized stochastic Shapley estimators.

Both estimators report their model-evaluation budget and an optional
convergence trajectory so the benchmark harness can plot accuracy against
cost.  KernelSHAP-style regression supports paired (complement) sampling;
permutation sampling supports antithetic (reversed) pairing.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .exact import Attribution, RankDeficiencyError, solve_constrained_wls
from .games import CooperativeGame, ShapleyKernel, codes_to_masks, kernel_weight, sample_paired

__all__ = ["EstimatorReport", "kernelshap", "permutation_shap"]

_ENUM_LIMIT = 20
_PERM_ENUM_LIMIT = 8


@dataclass
class EstimatorReport:
    """An estimate plus its cost and intermediate checkpoints.

    ``trajectory`` holds (model_evaluations, estimate_vector) pairs with
    strictly increasing budgets; the last entry matches ``estimate``.
    """

    estimate: Attribution
    model_evaluations: int
    trajectory: list[tuple[int, np.ndarray]] = field(default_factory=list)


def _subset_cost(game: CooperativeGame, n_subsets: int) -> int:
    return game.evals_per_subset * (n_subsets + 2)


def kernelshap(
    game: CooperativeGame,
    n_subsets: int | None = None,
    *,
    paired: bool = False,
    rng: np.random.Generator | None = None,
    checkpoints: list[int] | None = None,
    enumerate_all: bool = False,
    max_retries: int = 4,
) -> EstimatorReport:
    """Shapley estimation by constrained weighted least squares on sampled
    subsets.

    Subsets are drawn from the Shapley kernel (paired mode draws half and
    adds complements), each is evaluated once, and the regression uses
    uniform weights because sampling already absorbs the kernel
    probabilities.  ``enumerate_all`` switches to the consistency limit:
    every proper subset exactly once with its exact kernel weight.

    If the sampled system is rank deficient, additional subsets are drawn
    (up to ``max_retries`` rounds) before giving up.
    """
    d = game.dimension
    if enumerate_all:
        if d > _ENUM_LIMIT:
            raise ValueError(f"enumeration mode needs 2^d rows; d={d} exceeds {_ENUM_LIMIT}")
        codes = np.arange(1, (1 << d) - 1, dtype=np.int64)
        masks = codes_to_masks(codes, d)
        weights = np.array([kernel_weight(d, k) for k in masks.sum(axis=1)])
        vals = game.evaluate(masks)
        phi = solve_constrained_wls(masks, vals, weights, game.grand_value, game.null_value)
        evals = _subset_cost(game, masks.shape[0])
        est = Attribution(phi, game.null_value, game.grand_value, class_index=game.class_index)
        return EstimatorReport(est, evals, [(evals, phi.copy())])

    if rng is None:
        raise ValueError("sampling mode needs an explicit seeded rng")
    if n_subsets is None or n_subsets < d:
        raise ValueError(f"need at least d={d} sampled subsets, got {n_subsets}")
    if paired and n_subsets % 2 != 0:
        raise ValueError("paired sampling needs an even subset count")

    kernel = ShapleyKernel(d)
    draw = (lambda n: sample_paired(kernel, rng, n)) if paired else (lambda n: kernel.sample(rng, n))
    masks = draw(n_subsets)
    vals = game.evaluate(masks)

    def solve(rows_masks, rows_vals):
        return solve_constrained_wls(
            rows_masks, rows_vals, np.ones(rows_masks.shape[0]),
            game.grand_value, game.null_value,
        )

    trajectory: list[tuple[int, np.ndarray]] = []
    for c in sorted(set(checkpoints or [])):
        if c < d or c >= n_subsets:
            continue
        try:
            trajectory.append((_subset_cost(game, c), solve(masks[:c], vals[:c])))
        except RankDeficiencyError:
            continue  # too few independent rows this early; later checkpoints recover

    phi = None
    for attempt in range(max_retries + 1):
        try:
            phi = solve(masks, vals)
            break
        except RankDeficiencyError:
            if attempt == max_retries:
                raise RankDeficiencyError(
                    f"sampled system still rank deficient after {max_retries} retries"
                )
            extra = draw(2 * ((d + 1) // 2) if paired else d)
            masks = np.concatenate([masks, extra])
            vals = np.concatenate([vals, game.evaluate(extra)])

    evals = _subset_cost(game, masks.shape[0])
    trajectory.append((evals, phi.copy()))
    est = Attribution(phi, game.null_value, game.grand_value, class_index=game.class_index)
    return EstimatorReport(est, evals, trajectory)


def _prefix_masks(perms: np.ndarray) -> np.ndarray:
    """Masks of the growing prefixes of each permutation: (n, d, d)."""
    n, d = perms.shape
    ranks = np.argsort(perms, axis=1)  # position of each feature in its permutation
    return ranks[:, None, :] <= np.arange(d)[None, :, None]


def permutation_shap(
    game: CooperativeGame,
    n_permutations: int | None = None,
    *,
    antithetic: bool = False,
    rng: np.random.Generator | None = None,
    checkpoints: list[int] | None = None,
    enumerate_all: bool = False,
    batch: int = 256,
) -> EstimatorReport:
    """Shapley estimation by averaging marginal contributions along feature
    orderings.

    Each permutation contributes v(prefix + e_i) - v(prefix) for the feature
    appended at every step; the telescoping sum makes every estimate satisfy
    the efficiency constraint exactly.  Antithetic mode pairs each sampled
    permutation with its reversal.  ``enumerate_all`` averages over all d!
    orderings, which reproduces the exact Shapley values.
    """
    d = game.dimension
    if enumerate_all:
        if d > _PERM_ENUM_LIMIT:
            raise ValueError(f"d={d} has too many permutations to enumerate")
        perms = np.array(list(itertools.permutations(range(d))), dtype=np.int64)
    else:
        if rng is None:
            raise ValueError("sampling mode needs an explicit seeded rng")
        if n_permutations is None or n_permutations < 1:
            raise ValueError("need at least one permutation")
        if antithetic:
            if n_permutations % 2 != 0:
                raise ValueError("antithetic sampling needs an even permutation count")
            half = np.stack([rng.permutation(d) for _ in range(n_permutations // 2)])
            perms = np.empty((n_permutations, d), dtype=np.int64)
            perms[0::2] = half
            perms[1::2] = half[:, ::-1]
        else:
            perms = np.stack([rng.permutation(d) for _ in range(n_permutations)])

    n = perms.shape[0]
    contrib = np.empty((n, d))
    null = game.null_value
    for start in range(0, n, batch):
        chunk = perms[start:start + batch]
        prefixes = _prefix_masks(chunk)
        vals = game.evaluate(prefixes.reshape(-1, d)).reshape(chunk.shape[0], d)
        prev = np.concatenate([np.full((chunk.shape[0], 1), null), vals[:, :-1]], axis=1)
        block = np.empty_like(prev)
        np.put_along_axis(block, chunk, vals - prev, axis=1)
        contrib[start:start + chunk.shape[0]] = block

    def cost(k: int) -> int:
        return game.evals_per_subset * (k * d + 1)

    trajectory: list[tuple[int, np.ndarray]] = []
    running = np.cumsum(contrib, axis=0)
    for c in sorted(set(checkpoints or [])):
        if 1 <= c < n:
            trajectory.append((cost(c), running[c - 1] / c))
    phi = running[-1] / n
    trajectory.append((cost(n), phi.copy()))
    est = Attribution(phi, null, game.grand_value, class_index=game.class_index)
    return EstimatorReport(est, cost(n), trajectory)
