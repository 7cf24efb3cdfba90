"""Benchmark harness: converged ground truth, accuracy-versus-budget curves,
and inclusion/exclusion AUC scoring through a uniform-subset evaluation
model.

Everything here is deterministic given a seed: instances get independent
child random streams and results are assembled keyed by instance index, so
worker counts do not change any output byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .estimators import kernelshap, permutation_shap
from .exact import Attribution
from .games import CooperativeGame

__all__ = [
    "GroundTruthRecord",
    "ground_truth",
    "EvalCase",
    "MethodSpec",
    "make_kernelshap_method",
    "make_permutation_method",
    "make_explainer_method",
    "BenchmarkRow",
    "BenchmarkResult",
    "accuracy_benchmark",
    "default_budget_grid",
    "AUCResult",
    "inclusion_exclusion",
    "random_ranking_attributions",
    "rows_to_csv",
    "config_fingerprint",
    "write_manifest",
]


# ---------------------------------------------------------------------------
# Ground truth by running the paired regression estimator to convergence
# ---------------------------------------------------------------------------

@dataclass
class GroundTruthRecord:
    attribution: Attribution
    evaluations_used: int
    convergence_stat: float  # max per-coordinate standard error at stop
    converged: bool


def ground_truth(
    game: CooperativeGame,
    se_threshold: float = 1e-3,
    max_evals: int = 2_000_000,
    *,
    rng: np.random.Generator,
    round_subsets: int | None = None,
    min_rounds: int = 2,
) -> GroundTruthRecord:
    """Converged Shapley estimate with a per-coordinate error certificate.

    Runs paired-sampling regression estimates in equal-size rounds; each
    round yields an independent estimate, so the standard error of their
    mean is measured directly from between-round variability.  Stops when
    the largest coordinate SE drops below ``se_threshold`` or the
    evaluation budget runs out (flagged via ``converged``).
    """
    if se_threshold <= 0 or max_evals <= 0:
        raise ValueError("thresholds must be positive")
    d = game.dimension
    n_round = round_subsets if round_subsets is not None else max(64, 8 * d)
    n_round += n_round % 2
    estimates: list[np.ndarray] = []
    used = 2 * game.evals_per_subset  # null and grand, evaluated once
    stat = math.inf
    while True:
        rep = kernelshap(game, n_round, paired=True, rng=rng)
        estimates.append(rep.estimate.values)
        used += game.evals_per_subset * n_round
        if len(estimates) >= min_rounds:
            se = np.std(estimates, axis=0, ddof=1) / math.sqrt(len(estimates))
            stat = float(se.max())
            if stat < se_threshold:
                converged = True
                break
        if used + game.evals_per_subset * n_round > max_evals:
            converged = False
            break
    phi = np.mean(estimates, axis=0)
    attr = Attribution(phi, game.null_value, game.grand_value, class_index=game.class_index)
    return GroundTruthRecord(attr, used, stat, converged)


# ---------------------------------------------------------------------------
# Accuracy versus evaluation budget
# ---------------------------------------------------------------------------

@dataclass
class EvalCase:
    """One instance to explain: the input, the class, and its game."""

    x: np.ndarray
    y: int
    game: CooperativeGame


@dataclass
class MethodSpec:
    """A named method returning (budget, estimate) pairs for one case."""

    name: str
    run: Callable[[EvalCase, np.random.Generator], list[tuple[int, np.ndarray]]]


def default_budget_grid(dimension: int, max_budget: int) -> list[int]:
    """Powers of two times d, up to the budget cap."""
    grid, b = [], 2 * dimension
    while b <= max_budget:
        grid.append(b)
        b *= 2
    return grid


def make_kernelshap_method(name: str, budgets: Sequence[int], *, paired: bool = False) -> MethodSpec:
    def run(case: EvalCase, rng: np.random.Generator):
        game = case.game
        epc = game.evals_per_subset
        plan = []
        for budget in sorted(budgets):
            n = budget // epc - 2
            if paired:
                n -= n % 2
            if n >= game.dimension:
                plan.append((budget, n))
        if not plan:
            return []
        max_n = plan[-1][1]
        rep = kernelshap(
            game, max_n, paired=paired, rng=rng,
            checkpoints=[n for _, n in plan[:-1]],
        )
        by_cost = dict(rep.trajectory)
        out = []
        for budget, n in plan[:-1]:
            cost = epc * (n + 2)
            if cost in by_cost:
                out.append((budget, by_cost[cost]))
        out.append((plan[-1][0], rep.estimate.values))
        return out

    return MethodSpec(name, run)


def make_permutation_method(name: str, budgets: Sequence[int], *, antithetic: bool = False) -> MethodSpec:
    def run(case: EvalCase, rng: np.random.Generator):
        game = case.game
        d, epc = game.dimension, game.evals_per_subset
        plan = []
        for budget in sorted(budgets):
            n = (budget // epc - 1) // d
            if antithetic:
                n -= n % 2
            if n >= 1:
                plan.append((budget, n))
        if not plan:
            return []
        rep = permutation_shap(
            game, plan[-1][1], antithetic=antithetic, rng=rng,
            checkpoints=[n for _, n in plan[:-1]],
        )
        by_cost = dict(rep.trajectory)
        out = []
        for budget, n in plan[:-1]:
            cost = epc * (n * d + 1)
            if cost in by_cost:
                out.append((budget, by_cost[cost]))
        out.append((plan[-1][0], rep.estimate.values))
        return out

    return MethodSpec(name, run)


def make_explainer_method(name: str, explainer, *, normalize: bool = True) -> MethodSpec:
    """The amortized explainer as a single-budget method (one forward pass)."""
    from .amortized import explain

    def run(case: EvalCase, rng: np.random.Generator):
        attr = explain(
            explainer, case.x, case.y,
            null=case.game.null_value, grand=case.game.grand_value,
            normalize=normalize,
        )
        return [(1, attr.values)]

    return MethodSpec(name, run)


@dataclass
class BenchmarkRow:
    method: str
    evaluations: int
    metric: str  # "l2" or "l1"
    mean: float
    ci_lo: float
    ci_hi: float
    n_instances: int


@dataclass
class BenchmarkResult:
    rows: list[BenchmarkRow]
    crossovers: dict[str, int | None] = field(default_factory=dict)
    reference: str | None = None

    def mean_at(self, method: str, metric: str = "l2") -> dict[int, float]:
        return {r.evaluations: r.mean for r in self.rows if r.method == method and r.metric == metric}


def _ci(values: np.ndarray) -> tuple[float, float, float]:
    mean = float(values.mean())
    if values.size < 2:
        return mean, mean, mean
    half = 1.96 * float(values.std(ddof=1)) / math.sqrt(values.size)
    return mean, mean - half, mean + half


def accuracy_benchmark(
    methods: Sequence[MethodSpec],
    cases: Sequence[EvalCase],
    ground: np.ndarray,
    *,
    rng: np.random.Generator,
    reference: str | None = None,
    workers: int = 1,
) -> BenchmarkResult:
    """Distance to ground truth per method and budget, with 95% CIs.

    ``ground`` holds one reference attribution vector per case.  When
    ``reference`` names a method (typically the single-budget amortized
    explainer), the result also reports each other method's crossover
    budget: the smallest budget at which its mean l2 distance first matches
    the reference's.
    """
    ground = np.asarray(ground, dtype=float)
    if ground.shape[0] != len(cases):
        raise ValueError("one ground-truth vector per case is required")
    streams = rng.spawn(len(methods) * len(cases))

    # distances[m] maps budget -> per-case arrays
    per_method: list[dict[int, dict[int, np.ndarray]]] = []

    def run_case(mi: int, ci: int):
        traj = methods[mi].run(cases[ci], streams[mi * len(cases) + ci])
        return [(b, phi - ground[ci]) for b, phi in traj]

    for mi, method in enumerate(methods):
        collected: dict[int, dict[int, np.ndarray]] = {}
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(lambda ci: run_case(mi, ci), range(len(cases))))
        else:
            results = [run_case(mi, ci) for ci in range(len(cases))]
        for ci, traj in enumerate(results):
            for budget, err in traj:
                collected.setdefault(budget, {})[ci] = err
        per_method.append(collected)

    rows: list[BenchmarkRow] = []
    for method, collected in zip(methods, per_method):
        for budget in sorted(collected):
            errs = collected[budget]
            l2 = np.array([np.linalg.norm(errs[ci]) for ci in sorted(errs)])
            l1 = np.array([np.abs(errs[ci]).sum() for ci in sorted(errs)])
            for metric, vals in (("l2", l2), ("l1", l1)):
                mean, lo, hi = _ci(vals)
                rows.append(BenchmarkRow(method.name, budget, metric, mean, lo, hi, vals.size))

    result = BenchmarkResult(rows, reference=reference)
    if reference is not None:
        ref_means = [r.mean for r in rows if r.method == reference and r.metric == "l2"]
        if not ref_means:
            raise ValueError(f"reference method {reference!r} produced no rows")
        ref = min(ref_means)
        for method in methods:
            if method.name == reference:
                continue
            crossover = None
            for r in sorted(
                (r for r in rows if r.method == method.name and r.metric == "l2"),
                key=lambda r: r.evaluations,
            ):
                if r.mean <= ref:
                    crossover = r.evaluations
                    break
            result.crossovers[method.name] = crossover
    return result


# ---------------------------------------------------------------------------
# Inclusion / exclusion AUC
# ---------------------------------------------------------------------------

@dataclass
class AUCResult:
    fractions: np.ndarray
    inclusion_curve: np.ndarray
    exclusion_curve: np.ndarray
    inclusion_auc: float
    exclusion_auc: float
    metric: str


def random_ranking_attributions(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Exchangeable random scores; ranking them is a uniform random order."""
    return rng.random((n, d))


def inclusion_exclusion(
    attributions: np.ndarray,
    eval_model,
    f,
    x: np.ndarray,
    *,
    fractions: np.ndarray | None = None,
    metric: str = "top1",
    log_odds_clip: float = 1e-6,
) -> AUCResult:
    """Agreement with the original model as top-ranked features are kept or
    dropped, scored through the uniform-subset evaluation model.

    Each instance is labeled by the original model's most likely class.
    Features are ranked by attribution descending (ties toward the lower
    feature index); at fraction t the top ceil(t*d) features are included
    (all others masked) or excluded (all others visible).  The curve value
    is mean top-1 agreement with the original label, or the mean log-odds
    of that label; AUCs are trapezoidal over the fraction grid.
    """
    if metric not in ("top1", "log_odds"):
        raise ValueError(f"unknown metric {metric!r}")
    if getattr(eval_model, "subset_distribution", "uniform") != "uniform":
        raise ValueError("inclusion/exclusion needs the uniform-subset evaluation model")
    attributions = np.atleast_2d(np.asarray(attributions, dtype=float))
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n, d = attributions.shape
    fractions = np.linspace(0.0, 1.0, 21) if fractions is None else np.asarray(fractions, float)
    labels = np.argmax(np.asarray(f(x), dtype=float), axis=1)
    # stable sort on the negated values: descending, ties by ascending index
    order = np.argsort(-attributions, axis=1, kind="stable")

    def score(masks: np.ndarray) -> float:
        probs = eval_model.predict(x, masks)
        if metric == "top1":
            return float(np.mean(np.argmax(probs, axis=1) == labels))
        p = np.clip(probs[np.arange(n), labels], log_odds_clip, 1.0 - log_odds_clip)
        return float(np.mean(np.log(p / (1.0 - p))))

    inclusion = np.empty(fractions.size)
    exclusion = np.empty(fractions.size)
    for t_idx, t in enumerate(fractions):
        k = math.ceil(t * d)
        top = np.zeros((n, d), dtype=bool)
        if k > 0:
            np.put_along_axis(top, order[:, :k], True, axis=1)
        inclusion[t_idx] = score(top)
        exclusion[t_idx] = score(~top)
    return AUCResult(
        fractions=fractions,
        inclusion_curve=inclusion,
        exclusion_curve=exclusion,
        inclusion_auc=float(np.trapezoid(inclusion, fractions)),
        exclusion_auc=float(np.trapezoid(exclusion, fractions)),
        metric=metric,
    )


# ---------------------------------------------------------------------------
# Plot-ready tables and run manifests
# ---------------------------------------------------------------------------

def _cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def rows_to_csv(rows: Sequence, path) -> None:
    """Write dataclass rows as delimited text; float cells use shortest
    round-trip formatting so identical runs produce identical bytes."""
    if not rows:
        raise ValueError("no rows to write")
    fields = list(vars(rows[0]))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in rows:
            writer.writerow([_cell(getattr(row, f)) for f in fields])


def config_fingerprint(obj) -> str:
    """sha256 of the canonical JSON form of a configuration object."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def write_manifest(path, manifest: dict) -> None:
    with open(path, "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
