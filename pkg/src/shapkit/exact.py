"""Ground-truth Shapley oracles.

Two independent routes to the same answer: direct enumeration of the
weighted-average-of-marginal-contributions formula, and the constrained
weighted-least-squares characterization solved over every proper subset
with exact kernel weights.  Their agreement is the toolkit's core
correctness check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .games import CooperativeGame, codes_to_masks, kernel_weight

__all__ = [
    "Attribution",
    "DimensionLimitError",
    "RankDeficiencyError",
    "shapley_brute_force",
    "solve_constrained_wls",
    "shapley_wls_full",
    "BRUTE_FORCE_LIMIT",
    "WLS_FULL_LIMIT",
]

BRUTE_FORCE_LIMIT = 24
WLS_FULL_LIMIT = 20

_CHUNK = 1 << 16
_COND_LIMIT = 1e12


class DimensionLimitError(ValueError):
    """Game too large for exhaustive enumeration."""


class RankDeficiencyError(RuntimeError):
    """The constrained least-squares system does not pin down a unique solution."""


@dataclass
class Attribution:
    """Per-feature Shapley estimates for one instance, with the game's
    empty-subset and full-subset values."""

    values: np.ndarray
    null_value: float
    grand_value: float
    class_index: int | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    @property
    def dimension(self) -> int:
        return self.values.shape[0]

    def efficiency_gap(self) -> float:
        """v(full) - v(empty) - sum(values); zero for an efficient attribution."""
        return self.grand_value - self.null_value - float(self.values.sum())


def _values_by_code(game: CooperativeGame) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate every subset once, indexed by integer mask code.

    Returns (values, cardinalities); enumeration runs in increasing code
    order so float accumulation downstream is reproducible.
    """
    d = game.dimension
    n = 1 << d
    values = np.empty(n)
    cards = np.empty(n, dtype=np.uint8)
    for start in range(0, n, _CHUNK):
        codes = np.arange(start, min(start + _CHUNK, n), dtype=np.int64)
        masks = codes_to_masks(codes, d)
        values[start:start + codes.size] = game.evaluate(masks)
        cards[start:start + codes.size] = masks.sum(axis=1)
    return values, cards


def shapley_brute_force(game: CooperativeGame) -> Attribution:
    """Exact Shapley values by enumerating all 2^d subsets.

    phi_i = (1/d) * sum over subsets s excluding i of
            C(d-1, |s|)^-1 * (v(s + e_i) - v(s)),
    with each v(s) evaluated once and cached by integer mask code.
    """
    d = game.dimension
    if d > BRUTE_FORCE_LIMIT:
        raise DimensionLimitError(
            f"brute force needs 2^d evaluations; d={d} exceeds the limit {BRUTE_FORCE_LIMIT}"
        )
    values, cards = _values_by_code(game)
    # weight of a marginal contribution on top of a size-k subset
    coeff = np.array([1.0 / (d * math.comb(d - 1, k)) for k in range(d)])
    n = 1 << d
    phi = np.zeros(d)
    for i in range(d):
        bit = 1 << i
        total = 0.0
        for start in range(0, n, _CHUNK):
            codes = np.arange(start, min(start + _CHUNK, n), dtype=np.int64)
            without = codes[(codes >> i) & 1 == 0]
            total += float(
                np.sum(coeff[cards[without]] * (values[without | bit] - values[without]))
            )
        phi[i] = total
    return Attribution(phi, values[0], values[n - 1], class_index=game.class_index)


def _solve_kkt(gram: np.ndarray, moment: np.ndarray, delta: float, ridge: float = 0.0) -> np.ndarray:
    """Minimize the weighted quadratic with Gram matrix ``gram`` and moment
    vector ``moment`` subject to a unit-sum constraint equal to ``delta``.

    Stationarity of the Lagrangian plus the constraint row form one
    (d+1)-dimensional linear system; solving it jointly also covers systems
    whose Gram matrix is singular while the constrained problem is not.
    """
    d = gram.shape[0]
    a = 2.0 * gram
    if ridge > 0:
        a = a + 2.0 * ridge * np.eye(d)
    kkt = np.zeros((d + 1, d + 1))
    kkt[:d, :d] = a
    kkt[:d, d] = 1.0
    kkt[d, :d] = 1.0
    rhs = np.concatenate([2.0 * moment, [delta]])
    cond = np.linalg.cond(kkt)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise RankDeficiencyError(
            f"constrained WLS system is rank deficient (cond ~ {cond:.3g}); "
            "add rows or opt into ridge regularization"
        )
    return np.linalg.solve(kkt, rhs)[:d]


def _normal_system(
    masks: np.ndarray, values: np.ndarray, weights: np.ndarray, null: float
) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(masks, dtype=float)
    w = np.asarray(weights, dtype=float)
    y = np.asarray(values, dtype=float) - null
    gram = s.T @ (s * w[:, None])
    moment = s.T @ (w * y)
    return gram, moment


def solve_constrained_wls(
    masks: np.ndarray,
    values: np.ndarray,
    weights: np.ndarray,
    grand: float,
    null: float,
    ridge: float = 0.0,
) -> np.ndarray:
    """Weighted least squares over subset rows with the efficiency constraint.

    Minimizes sum_j w_j (values_j - null - s_j . phi)^2 subject to
    sum(phi) = grand - null.  Raises RankDeficiencyError instead of
    returning garbage when the system is underdetermined; callers may opt
    into a small ridge term.
    """
    masks = np.atleast_2d(np.asarray(masks, dtype=bool))
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if masks.shape[0] != values.shape[0] or masks.shape[0] != weights.shape[0]:
        raise ValueError("masks, values and weights must have matching row counts")
    if np.any(weights <= 0):
        raise ValueError("weights must be positive")
    gram, moment = _normal_system(masks, values, weights, null)
    return _solve_kkt(gram, moment, grand - null, ridge)


def shapley_wls_full(game: CooperativeGame) -> Attribution:
    """Shapley values via the weighted-least-squares characterization,
    enumerating every proper subset with its exact kernel weight."""
    d = game.dimension
    if d > WLS_FULL_LIMIT:
        raise DimensionLimitError(
            f"full WLS enumeration needs 2^d rows; d={d} exceeds the limit {WLS_FULL_LIMIT}"
        )
    if d < 2:
        raise DimensionLimitError("the kernel weighting needs at least two features")
    w_by_card = np.array([kernel_weight(d, k) for k in range(1, d)])
    null = game.null_value
    gram = np.zeros((d, d))
    moment = np.zeros(d)
    n = 1 << d
    for start in range(1, n - 1, _CHUNK):  # skip the empty and full subsets
        codes = np.arange(start, min(start + _CHUNK, n - 1), dtype=np.int64)
        masks = codes_to_masks(codes, d)
        vals = game.evaluate(masks)
        w = w_by_card[masks.sum(axis=1) - 1]
        g, m = _normal_system(masks, vals, w, null)
        gram += g
        moment += m
    phi = _solve_kkt(gram, moment, game.grand_value - null)
    return Attribution(phi, null, game.grand_value, class_index=game.class_index)
