"""Dataset ingestion and the bundled synthetic generator.

Ingestion reads delimited text with a header, validates every cell against
a declared schema (continuous or discrete per feature, plus the label
column), standardizes continuous features with training-split statistics
only, and fingerprints the content so downstream manifests can pin exactly
what they saw.

The synthetic generator draws standard-normal features and labels them
with a logistic model whose coefficients are known and returned as an
exact softmax network, so oracle experiments need no external downloads.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .networks import DenseNet

__all__ = [
    "FEATURE_KINDS",
    "DatasetSchema",
    "IngestError",
    "Dataset",
    "SyntheticDataset",
    "split_indices",
    "ingest",
    "make_synthetic_logistic",
    "write_dataset_csv",
]

FEATURE_KINDS = ("continuous", "discrete")


class IngestError(ValueError):
    """Dataset file or schema problem, with row/column context when known."""


@dataclass
class DatasetSchema:
    """Declared layout of a delimited dataset: ordered feature columns with
    their kinds, and the label column."""

    label: str
    features: list[tuple[str, str]]

    def __post_init__(self):
        for name, kind in self.features:
            if kind not in FEATURE_KINDS:
                raise IngestError(f"feature {name!r} has unknown kind {kind!r}")
        if self.label in [n for n, _ in self.features]:
            raise IngestError("label column cannot also be a feature")

    @property
    def feature_names(self) -> list[str]:
        return [n for n, _ in self.features]

    @property
    def feature_kinds(self) -> list[str]:
        return [k for _, k in self.features]

    def to_dict(self) -> dict:
        return {"label": self.label, "features": [list(f) for f in self.features]}

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetSchema":
        return cls(label=d["label"], features=[tuple(f) for f in d["features"]])

    @classmethod
    def load(cls, path) -> "DatasetSchema":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def split_indices(n: int, fractions: tuple[float, float, float], seed: int) -> dict[str, np.ndarray]:
    """Deterministic train/val/test index split by seeded permutation."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise IngestError(f"split fractions must sum to 1, got {fractions}")
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(n * fractions[0])
    n_val = int(n * fractions[1])
    return {
        "train": np.sort(order[:n_train]),
        "val": np.sort(order[n_train:n_train + n_val]),
        "test": np.sort(order[n_train + n_val:]),
    }


@dataclass
class Dataset:
    x: np.ndarray
    y: np.ndarray
    feature_names: list[str]
    feature_kinds: list[str]
    class_labels: list[str]
    splits: dict[str, np.ndarray]
    fingerprint: str
    standardize_mean: np.ndarray = field(default=None)  # type: ignore[assignment]
    standardize_scale: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        d = self.x.shape[1]
        if self.standardize_mean is None:
            self.standardize_mean = np.zeros(d)
        if self.standardize_scale is None:
            self.standardize_scale = np.ones(d)

    @property
    def num_features(self) -> int:
        return self.x.shape[1]

    @property
    def num_classes(self) -> int:
        return len(self.class_labels)

    def split(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        idx = self.splits[name]
        return self.x[idx], self.y[idx]

    @property
    def x_train(self):
        return self.x[self.splits["train"]]

    @property
    def y_train(self):
        return self.y[self.splits["train"]]

    @property
    def x_val(self):
        return self.x[self.splits["val"]]

    @property
    def y_val(self):
        return self.y[self.splits["val"]]

    @property
    def x_test(self):
        return self.x[self.splits["test"]]

    @property
    def y_test(self):
        return self.y[self.splits["test"]]


def _file_fingerprint(path, schema: DatasetSchema) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    h.update(json.dumps(schema.to_dict(), sort_keys=True, separators=(",", ":")).encode())
    return h.hexdigest()


def ingest(
    path,
    schema: DatasetSchema,
    split_fractions: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> Dataset:
    """Load, validate, split and standardize a delimited dataset.

    Continuous columns are centered and scaled using training-split
    statistics only; discrete columns and labels are left on their original
    scale.  Labels are encoded to [0, K) by sorted order of their string
    form.  Re-ingesting an identical file with an identical schema yields
    an identical fingerprint.
    """
    path = Path(path)
    if not path.exists():
        raise IngestError(f"dataset file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path} is empty") from None
        missing = [c for c in schema.feature_names + [schema.label] if c not in header]
        if missing:
            raise IngestError(f"missing columns in {path.name}: {missing}")
        col_idx = {c: header.index(c) for c in header}
        rows = list(reader)
    if not rows:
        raise IngestError(f"{path.name} has a header but no data rows")

    n, d = len(rows), len(schema.features)
    x = np.empty((n, d))
    raw_labels = []
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise IngestError(f"row {r + 1}: expected {len(header)} cells, got {len(row)}")
        for j, name in enumerate(schema.feature_names):
            cell = row[col_idx[name]]
            try:
                x[r, j] = float(cell)
            except ValueError:
                raise IngestError(
                    f"row {r + 1}, column {name!r}: cannot parse {cell!r} as a number"
                ) from None
        raw_labels.append(row[col_idx[schema.label]])

    class_labels = sorted(set(raw_labels))
    if len(class_labels) < 2:
        raise IngestError(f"label column {schema.label!r} has a single class")
    encode = {c: i for i, c in enumerate(class_labels)}
    y = np.array([encode[c] for c in raw_labels], dtype=np.int64)

    splits = split_indices(n, tuple(split_fractions), seed)
    mean = np.zeros(d)
    scale = np.ones(d)
    train_x = x[splits["train"]]
    for j, kind in enumerate(schema.feature_kinds):
        if kind == "continuous":
            mean[j] = train_x[:, j].mean()
            sd = train_x[:, j].std()
            scale[j] = sd if sd > 0 else 1.0
    x = (x - mean) / scale

    return Dataset(
        x=x,
        y=y,
        feature_names=schema.feature_names,
        feature_kinds=schema.feature_kinds,
        class_labels=class_labels,
        splits=splits,
        fingerprint=_file_fingerprint(path, schema),
        standardize_mean=mean,
        standardize_scale=scale,
    )


@dataclass
class SyntheticDataset(Dataset):
    """A generated dataset together with its exactly-known classifier."""

    true_model: DenseNet = None  # type: ignore[assignment]
    coefficients: np.ndarray = None  # type: ignore[assignment]
    intercept: float = 0.0


def logistic_coefficients(num_informative: int, num_irrelevant: int = 0) -> np.ndarray:
    """Fixed, documented coefficient pattern: magnitudes taper from 1 to
    0.3 with alternating signs, rescaled to norm 2 so class probabilities
    stay informative without saturating; irrelevant features get weight 0."""
    mags = np.linspace(1.0, 0.3, num_informative)
    signs = (-1.0) ** np.arange(num_informative)
    w = mags * signs
    w = 2.0 * w / np.linalg.norm(w)
    return np.concatenate([w, np.zeros(num_irrelevant)])


def make_synthetic_logistic(
    n_samples: int = 5000,
    num_informative: int = 8,
    num_irrelevant: int = 0,
    seed: int = 0,
    split_fractions: tuple[float, float, float] = (0.8, 0.1, 0.1),
) -> SyntheticDataset:
    """Standard-normal features labeled by a known logistic model.

    The returned ``true_model`` is a one-layer softmax network whose
    probabilities equal the generating model exactly, so it can stand in
    for a trained classifier in oracle experiments.
    """
    d = num_informative + num_irrelevant
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n_samples, d))
    w = logistic_coefficients(num_informative, num_irrelevant)
    intercept = 0.0
    logits = x @ w + intercept
    p1 = 1.0 / (1.0 + np.exp(-logits))
    y = (rng.random(n_samples) < p1).astype(np.int64)
    if y.min() == y.max():  # pathological seed; cannot happen at normal sizes
        raise IngestError("synthetic draw produced a single class; change the seed")

    true_model = DenseNet(
        weights=[np.vstack([np.zeros(d), w])],
        biases=[np.array([0.0, intercept])],
        head="softmax",
    )
    params = {
        "n_samples": n_samples,
        "num_informative": num_informative,
        "num_irrelevant": num_irrelevant,
        "seed": seed,
        "split_fractions": list(split_fractions),
        "coefficients": [repr(float(c)) for c in w],
    }
    fingerprint = hashlib.sha256(
        json.dumps(params, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()

    return SyntheticDataset(
        x=x,
        y=y,
        feature_names=[f"x{i}" for i in range(d)],
        feature_kinds=["continuous"] * d,
        class_labels=["0", "1"],
        splits=split_indices(n_samples, split_fractions, seed),
        fingerprint=fingerprint,
        true_model=true_model,
        coefficients=w,
        intercept=intercept,
    )


def write_dataset_csv(path, dataset: Dataset, label_name: str = "label") -> DatasetSchema:
    """Write a dataset back to delimited text (shortest round-trip float
    formatting) and return the matching schema."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(dataset.feature_names + [label_name])
        for row, label in zip(dataset.x, dataset.y):
            writer.writerow([repr(float(v)) for v in row] + [dataset.class_labels[label]])
    return DatasetSchema(
        label=label_name,
        features=list(zip(dataset.feature_names, dataset.feature_kinds)),
    )
