"""Shapley-value explanations for tabular classifiers.

Exact oracles, stochastic estimators (regression-based and permutation
sampling), masked-input surrogate value functions, an amortized explainer
network trained with a weighted-least-squares objective, and a benchmark
harness for accuracy-versus-budget and inclusion/exclusion studies.
"""

from .amortized import (
    ExplainerConfig,
    ExplainerNet,
    additive_normalize,
    explain,
    explain_all,
    explainer_batch_loss,
    train_explainer,
)
from .benchmark import (
    AUCResult,
    BenchmarkResult,
    EvalCase,
    GroundTruthRecord,
    MethodSpec,
    accuracy_benchmark,
    ground_truth,
    inclusion_exclusion,
)
from .data import Dataset, DatasetSchema, ingest, make_synthetic_logistic
from .estimators import EstimatorReport, kernelshap, permutation_shap
from .exact import (
    Attribution,
    RankDeficiencyError,
    shapley_brute_force,
    shapley_wls_full,
    solve_constrained_wls,
)
from .games import CooperativeGame, ShapleyKernel, complement, kernel_weight, sample_paired
from .networks import AdamState, DenseNet, TrainConfig, adam_step, train, train_supervised
from .removal import (
    BaselinePoint,
    BaselineValueFunction,
    LinkFunction,
    MarginalValueFunction,
    baseline_value_function,
    compute_baseline,
    marginal_value_function,
)
from .surrogate import (
    MaskedInput,
    SurrogateModel,
    SurrogateValueFunction,
    mask_input,
    surrogate_value_function,
    train_surrogate,
)

__version__ = "0.1.0"
