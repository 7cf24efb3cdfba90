"""Operator surface: dataset ingestion, training, explanation and
benchmarking as subcommands driven by a JSON config file.

Every subcommand writes its artifacts plus a manifest (config hash, seed,
dataset fingerprint, package version) into the output directory, never
overwrites an existing artifact (new files get a version suffix), and uses
seeds derived from the config so identical invocations produce identical
bytes.  Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .amortized import ExplainerConfig, ExplainerNet, explain, train_explainer
from .benchmark import (
    accuracy_benchmark,
    config_fingerprint,
    default_budget_grid,
    EvalCase,
    ground_truth,
    inclusion_exclusion,
    make_explainer_method,
    make_kernelshap_method,
    make_permutation_method,
    random_ranking_attributions,
    rows_to_csv,
    write_manifest,
)
from .data import Dataset, DatasetSchema, IngestError, ingest, make_synthetic_logistic, write_dataset_csv
from .exact import BRUTE_FORCE_LIMIT, shapley_brute_force
from .networks import DenseNet, TrainConfig, kl_divergence_loss, load_net, save_net, train_supervised
from .removal import (
    BaselineValueFunction,
    LinkFunction,
    MarginalValueFunction,
    compute_baseline,
)
from .surrogate import SurrogateModel, SurrogateValueFunction, train_surrogate

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

_GT_BRUTE_LIMIT = 14  # exact ground truth below this; converged estimate above


class ValidationError(ValueError):
    """Bad config, schema, or missing prerequisite artifact."""


DEFAULT_CONFIG: dict = {
    "seed": 0,
    "output_dir": "runs/out",
    "workers": 1,
    "dataset": {
        "path": None,
        "schema": None,
        "split_fractions": [0.8, 0.1, 0.1],
        "synthetic": None,
    },
    "model": {"hidden": [128, 128], "train": {}},
    "surrogate": {"hidden": [128, 128], "train": {}},
    "eval_model": {"hidden": [128, 128], "train": {}},
    "value_function": {
        "kind": "surrogate",
        "link": "identity",
        "clip_epsilon": 1e-6,
        "background_size": 64,
    },
    "explainer": {
        "num_subset_samples": 32,
        "paired": True,
        "normalize_train": True,
        "normalize_inference": True,
        "gamma": 0.0,
        "hidden": [128, 128],
        "train": {},
    },
    "benchmark": {
        "n_instances": 50,
        "budgets": None,
        "max_budget": 1024,
        "ground_truth": {"se_threshold": 1e-3, "max_evals": 200000, "round_subsets": None},
    },
    "auc": {"n_instances": 200, "n_fractions": 21, "metrics": ["top1"]},
    "explain": {"normalize": None},
}


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path: str | None, overrides: list[str]) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            with open(path) as fh:
                file_cfg = json.load(fh)
        except FileNotFoundError:
            raise ValidationError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise ValidationError("config root must be a JSON object")
        cfg = _deep_merge(cfg, file_cfg)
    for item in overrides:
        if "=" not in item:
            raise ValidationError(f"--set expects section.key=value, got {item!r}")
        dotted, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        keys = dotted.split(".")
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ValidationError(f"--set path {dotted!r} crosses a non-object value")
        node[keys[-1]] = value
    fractions = cfg["dataset"]["split_fractions"]
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValidationError(f"dataset.split_fractions must sum to 1, got {fractions}")
    return cfg


def derive_seed(root: int, tag: str) -> int:
    """Stable per-purpose child seed from the run's root seed."""
    digest = hashlib.sha256(f"{root}:{tag}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


def _train_config(section: dict, root_seed: int, tag: str) -> TrainConfig:
    fields = dict(section.get("train", {}))
    fields.setdefault("seed", derive_seed(root_seed, tag))
    return TrainConfig(**fields)


# ---------------------------------------------------------------------------
# Artifact bookkeeping
# ---------------------------------------------------------------------------

def fresh_path(out_dir: Path, name: str) -> Path:
    """Next free versioned path; existing artifacts are never overwritten."""
    candidate = out_dir / name
    if not candidate.exists():
        return candidate
    stem, _, suffix = name.partition(".")
    version = 2
    while True:
        candidate = out_dir / f"{stem}.v{version}.{suffix}"
        if not candidate.exists():
            return candidate
        version += 1


def latest_path(out_dir: Path, name: str) -> Path | None:
    base = out_dir / name
    stem, _, suffix = name.partition(".")
    versions = sorted(
        out_dir.glob(f"{stem}.v*.{suffix}"),
        key=lambda p: int(p.name.split(".")[1][1:]),
    ) if out_dir.exists() else []
    if versions:
        return versions[-1]
    return base if base.exists() else None


def require_artifact(out_dir: Path, name: str, producing_command: str) -> Path:
    path = latest_path(out_dir, name)
    if path is None:
        raise ValidationError(
            f"missing artifact {name} in {out_dir}; run `shapkit {producing_command}` first"
        )
    return path


def _write_artifact_manifest(artifact: Path, command: str, cfg: dict, dataset: Dataset, extra: dict | None = None):
    manifest = {
        "artifact": artifact.name,
        "command": command,
        "config_sha256": config_fingerprint(cfg),
        "seed": cfg["seed"],
        "dataset_fingerprint": dataset.fingerprint,
        "package_version": __version__,
    }
    if extra:
        manifest.update(extra)
    write_manifest(artifact.with_name(artifact.name + ".manifest.json"), manifest)


# ---------------------------------------------------------------------------
# Shared loaders
# ---------------------------------------------------------------------------

def load_dataset(cfg: dict) -> Dataset:
    ds = cfg["dataset"]
    fractions = tuple(ds["split_fractions"])
    if ds.get("synthetic"):
        params = dict(ds["synthetic"])
        params.setdefault("seed", cfg["seed"])
        return make_synthetic_logistic(split_fractions=fractions, **params)
    if not ds.get("path") or not ds.get("schema"):
        raise ValidationError(
            "config needs dataset.path and dataset.schema (or dataset.synthetic)"
        )
    schema = DatasetSchema.load(ds["schema"])
    return ingest(ds["path"], schema, fractions, seed=cfg["seed"])


def load_classifier(out_dir: Path) -> DenseNet:
    path = require_artifact(out_dir, "model.npz", "train-model")
    net, meta = load_net(path)
    if meta.get("artifact") != "classifier":
        raise ValidationError(f"{path} is not a classifier artifact")
    return net


def build_value_function(cfg: dict, out_dir: Path, dataset: Dataset):
    vf_cfg = cfg["value_function"]
    link = LinkFunction(vf_cfg["link"], vf_cfg.get("clip_epsilon", 1e-6))
    kind = vf_cfg["kind"]
    descriptor = {"kind": kind, "link": link.kind, "clip_epsilon": link.clip_epsilon}
    if kind == "surrogate":
        path = require_artifact(out_dir, "surrogate.npz", "train-surrogate")
        vf = SurrogateValueFunction(SurrogateModel.load(path), link)
        descriptor["surrogate"] = path.name
    elif kind == "baseline":
        f = load_classifier(out_dir)
        vf = BaselineValueFunction(f, compute_baseline(dataset.x_train, dataset.feature_kinds), link)
    elif kind == "marginal":
        f = load_classifier(out_dir)
        rng = np.random.default_rng(derive_seed(cfg["seed"], "background"))
        vf = MarginalValueFunction(
            f, dataset.x_train, link,
            background_size=min(vf_cfg["background_size"], dataset.x_train.shape[0]),
            rng=rng,
        )
        descriptor["background_size"] = vf.background.shape[0]
    else:
        raise ValidationError(f"unknown value_function.kind {kind!r}")
    return vf, descriptor


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_make_synthetic(cfg: dict, args) -> int:
    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    params = dict(cfg["dataset"].get("synthetic") or {})
    params.setdefault("seed", cfg["seed"])
    dataset = make_synthetic_logistic(
        split_fractions=tuple(cfg["dataset"]["split_fractions"]), **params
    )
    data_path = fresh_path(out_dir, "data.csv")
    schema = write_dataset_csv(data_path, dataset)
    schema_path = fresh_path(out_dir, "schema.json")
    schema.save(schema_path)
    _write_artifact_manifest(data_path, "make-synthetic", cfg, dataset, {
        "schema": schema_path.name,
        "coefficients": [repr(float(c)) for c in dataset.coefficients],
    })
    print(f"wrote {data_path} and {schema_path} ({dataset.x.shape[0]} rows, "
          f"d={dataset.num_features})")
    return EXIT_OK


def cmd_train_model(cfg: dict, args) -> int:
    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = load_dataset(cfg)
    config = _train_config(cfg["model"], cfg["seed"], "model")
    rng = np.random.default_rng(config.seed)
    sizes = [dataset.num_features, *cfg["model"]["hidden"], dataset.num_classes]
    net = DenseNet.create(sizes, "softmax", rng)

    def one_hot(y):
        out = np.zeros((y.size, dataset.num_classes))
        out[np.arange(y.size), y] = 1.0
        return out

    net, log = train_supervised(
        net, dataset.x_train, one_hot(dataset.y_train), kl_divergence_loss,
        config, dataset.x_val, one_hot(dataset.y_val),
    )
    acc = float(np.mean(np.argmax(net.forward(dataset.x_val), axis=1) == dataset.y_val))
    path = fresh_path(out_dir, "model.npz")
    save_net(net, path, meta={
        "artifact": "classifier",
        "num_features": dataset.num_features,
        "class_labels": dataset.class_labels,
    })
    _write_artifact_manifest(path, "train-model", cfg, dataset, {
        "epochs_run": len(log),
        "val_loss": repr(log[-1].val_loss) if log else None,
    })
    print(f"wrote {path} (val accuracy {acc:.4f}, {len(log)} epochs)")
    return EXIT_OK


def _train_masked_model(cfg: dict, args, *, section: str, distribution: str,
                        artifact: str, command: str) -> int:
    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = load_dataset(cfg)
    f = load_classifier(out_dir)
    config = _train_config(cfg[section], cfg["seed"], section)
    model, log = train_surrogate(
        f, dataset.x_train, dataset.x_val,
        subset_distribution=distribution,
        config=config,
        hidden=tuple(cfg[section]["hidden"]),
    )
    path = fresh_path(out_dir, artifact)
    model.save(path)
    _write_artifact_manifest(path, command, cfg, dataset, {
        "subset_distribution": distribution,
        "epochs_run": len(log),
        "val_loss": repr(log[-1].val_loss) if log else None,
    })
    print(f"wrote {path} ({len(log)} epochs, best val KL "
          f"{min((r.val_loss for r in log), default=float('nan')):.5f})")
    return EXIT_OK


def cmd_train_surrogate(cfg: dict, args) -> int:
    return _train_masked_model(
        cfg, args, section="surrogate", distribution="shapley_kernel",
        artifact="surrogate.npz", command="train-surrogate",
    )


def cmd_train_eval_model(cfg: dict, args) -> int:
    return _train_masked_model(
        cfg, args, section="eval_model", distribution="uniform",
        artifact="eval_model.npz", command="train-eval-model",
    )


def cmd_train_fastshap(cfg: dict, args) -> int:
    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = load_dataset(cfg)
    vf, vf_descriptor = build_value_function(cfg, out_dir, dataset)
    exp_cfg = cfg["explainer"]
    config = ExplainerConfig(
        num_subset_samples=exp_cfg["num_subset_samples"],
        paired=exp_cfg["paired"],
        normalize_train=exp_cfg["normalize_train"],
        normalize_inference=exp_cfg["normalize_inference"],
        gamma=exp_cfg["gamma"],
        train=_train_config(exp_cfg, cfg["seed"], "explainer"),
    )
    explainer, log = train_explainer(
        vf, dataset.x_train, dataset.x_val, config, hidden=tuple(exp_cfg["hidden"])
    )
    manifest = {
        "value_function": vf_descriptor,
        "normalize_train": config.normalize_train,
        "normalize_inference": config.normalize_inference,
        "gamma": config.gamma,
        "num_subset_samples": config.num_subset_samples,
        "paired": config.paired,
        "seed": config.train.seed,
    }
    path = fresh_path(out_dir, "explainer.npz")
    explainer.save(path, manifest)
    _write_artifact_manifest(path, "train-fastshap", cfg, dataset, {
        **manifest, "epochs_run": len(log),
    })
    print(f"wrote {path} ({len(log)} epochs, best val loss "
          f"{min((r.val_loss for r in log), default=float('nan')):.6f})")
    return EXIT_OK


def _load_explainer(out_dir: Path) -> tuple[ExplainerNet, dict]:
    path = require_artifact(out_dir, "explainer.npz", "train-fastshap")
    return ExplainerNet.load(path)


def cmd_explain(cfg: dict, args) -> int:
    out_dir = Path(cfg["output_dir"])
    dataset = load_dataset(cfg)
    explainer, manifest = _load_explainer(out_dir)
    vf, _ = build_value_function(cfg, out_dir, dataset)
    f = load_classifier(out_dir)

    if args.instances_file:
        rows = []
        with open(args.instances_file, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            for row in reader:
                rows.append([float(v) for v in row[: dataset.num_features]])
        x = np.asarray(rows)
        ids = list(range(len(rows)))
    elif args.instance is not None:
        ids = list(args.instance)
        x = dataset.x[ids]
    else:
        raise ValidationError("explain needs --instance or --instances-file")

    normalize = cfg["explain"]["normalize"]
    if normalize is None:
        normalize = manifest.get("normalize_inference", True)

    probs = f(x)
    classes = np.argmax(probs, axis=1) if args.predicted_class else np.full(len(ids), args.label or 0)
    d = dataset.num_features
    null = vf.values(x, np.zeros((len(ids), d), bool))
    grand = vf.values(x, np.ones((len(ids), d), bool))

    out_path = fresh_path(out_dir, "attributions.csv")
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance", *dataset.feature_names, "null_value", "grand_value", "class"])
        for i, inst in enumerate(ids):
            y = int(classes[i])
            attr = explain(
                explainer, x[i], y,
                null=float(null[i, y]), grand=float(grand[i, y]),
                normalize=bool(normalize),
            )
            writer.writerow(
                [inst, *[repr(float(v)) for v in attr.values],
                 repr(attr.null_value), repr(attr.grand_value), y]
            )
    _write_artifact_manifest(out_path, "explain", cfg, dataset, {"normalize": bool(normalize)})
    print(f"wrote {out_path} ({len(ids)} instances)")
    return EXIT_OK


def _benchmark_cases(cfg, dataset, vf, f, n_instances, rng):
    """Test-split instances labeled by the original model, with their games
    and exact or converged ground truth."""
    x_test = dataset.x_test[:n_instances]
    labels = np.argmax(np.asarray(f(x_test), dtype=float), axis=1)
    gt_cfg = cfg["benchmark"]["ground_truth"]
    cases, ground, gt_meta = [], [], []
    for i in range(x_test.shape[0]):
        game = vf.game(x_test[i], int(labels[i]))
        cases.append(EvalCase(x_test[i], int(labels[i]), game))
        if dataset.num_features <= _GT_BRUTE_LIMIT:
            ground.append(shapley_brute_force(game).values)
            gt_meta.append({"mode": "brute_force"})
        else:
            record = ground_truth(
                game, gt_cfg["se_threshold"], gt_cfg["max_evals"],
                rng=rng.spawn(1)[0], round_subsets=gt_cfg["round_subsets"],
            )
            ground.append(record.attribution.values)
            gt_meta.append({
                "mode": "converged_estimate",
                "converged": record.converged,
                "evaluations": record.evaluations_used,
            })
    return cases, np.asarray(ground), gt_meta


def cmd_benchmark(cfg: dict, args) -> int:
    out_dir = Path(cfg["output_dir"])
    dataset = load_dataset(cfg)
    f = load_classifier(out_dir)
    vf, vf_descriptor = build_value_function(cfg, out_dir, dataset)
    explainer, _ = _load_explainer(out_dir)

    bench = cfg["benchmark"]
    budgets = bench["budgets"] or default_budget_grid(dataset.num_features, bench["max_budget"])
    rng = np.random.default_rng(derive_seed(cfg["seed"], "benchmark"))
    cases, ground, gt_meta = _benchmark_cases(cfg, dataset, vf, f, bench["n_instances"], rng)

    methods = [
        make_explainer_method("explainer", explainer),
        make_kernelshap_method("kernelshap", budgets),
        make_kernelshap_method("kernelshap_paired", budgets, paired=True),
        make_permutation_method("permutation", budgets),
        make_permutation_method("permutation_antithetic", budgets, antithetic=True),
    ]
    result = accuracy_benchmark(
        methods, cases, ground, rng=rng, reference="explainer",
        workers=int(cfg["workers"]),
    )
    acc_path = fresh_path(out_dir, "accuracy.csv")
    rows_to_csv(result.rows, acc_path)

    cross_path = fresh_path(out_dir, "crossover.csv")
    with open(cross_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "crossover_budget"])
        for name in sorted(result.crossovers):
            budget = result.crossovers[name]
            writer.writerow([name, "" if budget is None else budget])

    _write_artifact_manifest(acc_path, "benchmark", cfg, dataset, {
        "value_function": vf_descriptor,
        "budgets": list(budgets),
        "n_instances": len(cases),
        "ground_truth": gt_meta[0]["mode"] if gt_meta else None,
        "crossover_table": cross_path.name,
    })
    print(f"wrote {acc_path} and {cross_path} ({len(cases)} instances, "
          f"{len(budgets)} budgets)")
    return EXIT_OK


def cmd_auc(cfg: dict, args) -> int:
    out_dir = Path(cfg["output_dir"])
    dataset = load_dataset(cfg)
    f = load_classifier(out_dir)
    eval_path = require_artifact(out_dir, "eval_model.npz", "train-eval-model")
    eval_model = SurrogateModel.load(eval_path)
    if eval_model.subset_distribution != "uniform":
        raise ValidationError(
            f"{eval_path} was trained on {eval_model.subset_distribution!r} subsets; "
            "the AUC benchmark needs the uniform-subset evaluation model "
            "(run `shapkit train-eval-model`)"
        )
    explainer, _ = _load_explainer(out_dir)

    auc_cfg = cfg["auc"]
    n = min(auc_cfg["n_instances"], dataset.x_test.shape[0])
    x = dataset.x_test[:n]
    labels = np.argmax(np.asarray(f(x), dtype=float), axis=1)
    phi_all = explainer.forward(x)
    attributions = phi_all[np.arange(n), :, labels]
    rng = np.random.default_rng(derive_seed(cfg["seed"], "auc"))
    random_attr = random_ranking_attributions(n, dataset.num_features, rng)
    fractions = np.linspace(0.0, 1.0, int(auc_cfg["n_fractions"]))

    curve_rows, summary_rows = [], []

    class _CurveRow:
        def __init__(self, **kw):
            self.__dict__.update(kw)

    for metric in auc_cfg["metrics"]:
        for name, attr in (("explainer", attributions), ("random", random_attr)):
            res = inclusion_exclusion(
                attr, eval_model, f, x, fractions=fractions, metric=metric
            )
            for kind, curve in (("inclusion", res.inclusion_curve), ("exclusion", res.exclusion_curve)):
                for frac, value in zip(res.fractions, curve):
                    curve_rows.append(_CurveRow(
                        method=name, metric=metric, kind=kind,
                        fraction=float(frac), value=float(value),
                    ))
            summary_rows.append(_CurveRow(
                method=name, metric=metric,
                inclusion_auc=res.inclusion_auc, exclusion_auc=res.exclusion_auc,
            ))

    curves_path = fresh_path(out_dir, "auc_curves.csv")
    summary_path = fresh_path(out_dir, "auc_summary.csv")
    rows_to_csv(curve_rows, curves_path)
    rows_to_csv(summary_rows, summary_path)
    _write_artifact_manifest(summary_path, "auc", cfg, dataset, {
        "n_instances": n,
        "n_fractions": int(auc_cfg["n_fractions"]),
        "metrics": list(auc_cfg["metrics"]),
        "curves_table": curves_path.name,
    })
    print(f"wrote {curves_path} and {summary_path} ({n} instances)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

_COMMANDS = {
    "make-synthetic": cmd_make_synthetic,
    "train-model": cmd_train_model,
    "train-surrogate": cmd_train_surrogate,
    "train-eval-model": cmd_train_eval_model,
    "train-fastshap": cmd_train_fastshap,
    "explain": cmd_explain,
    "benchmark": cmd_benchmark,
    "auc": cmd_auc,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shapkit",
        description="Shapley-value explanation toolkit: train, explain, benchmark.",
    )
    parser.add_argument("--version", action="version", version=f"shapkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config entry by dotted path, e.g. explainer.gamma=0.1")
        p.add_argument("--output-dir", help="override output_dir")
        p.add_argument("--seed", type=int, help="override the root seed")
        p.add_argument("--workers", type=int, help="cap worker threads")

    helps = {
        "make-synthetic": "generate the bundled synthetic logistic dataset",
        "train-model": "train the classifier on the ingested dataset",
        "train-surrogate": "train the masked-input surrogate value function",
        "train-eval-model": "train the uniform-subset evaluation model",
        "train-fastshap": "train the amortized explainer network",
        "explain": "emit attributions for chosen instances",
        "benchmark": "accuracy-versus-budget comparison against ground truth",
        "auc": "inclusion/exclusion AUC study through the evaluation model",
    }
    for name in _COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        common(p)
        if name == "explain":
            p.add_argument("--instance", type=int, action="append",
                           help="dataset row index to explain (repeatable)")
            p.add_argument("--instances-file",
                           help="delimited file of feature rows to explain")
            p.add_argument("--label", type=int, default=None,
                           help="explain this fixed class instead")
            p.add_argument("--predicted-class", action="store_true", default=True,
                           help="explain the model's predicted class (default)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.set)
        if args.output_dir:
            cfg["output_dir"] = args.output_dir
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.workers is not None:
            cfg["workers"] = args.workers
        if getattr(args, "label", None) is not None:
            args.predicted_class = False
        return _COMMANDS[args.command](cfg, args)
    except (ValidationError, IngestError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - operator surface reports and exits
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
