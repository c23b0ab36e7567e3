"""Dataset ingestion, preprocessing and synthetic generation.

File format (delimited text): header ``split,label,f0,...,f{F-1}``; one row
per sample; split is ``train`` or ``test``.  Loading performs structural
validation (shape, split tags, feature range); task-level label validation is
a separate step so that raw files straight out of the featurizer (labels in
{0,1}, bits in {0,1}) load cleanly and are then remapped by the preprocessing
helpers.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .seeding import rng_from, spawn_seed

SPLIT_TAGS = ("train", "test")
MAX_FEATURES = 128
TASK_KINDS = ("classification", "regression")


class DatasetFormatError(ValueError):
    """Structural problem in a dataset file; carries row/column context."""


@dataclass
class Dataset:
    """Feature matrix plus labels/targets and a per-row split tag.

    ``task_kind`` is None until the dataset has passed task-level validation
    (or was produced by a preprocessing/synthesis helper, which validates).
    """

    features: np.ndarray  # (d, F) floats in [-1, 1]
    labels: np.ndarray  # (d,) floats: +-1 for classification, [-1,1] targets
    split: np.ndarray  # (d,) of "train"/"test"
    task_kind: Optional[str] = None

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        self.split = np.asarray(self.split, dtype=object)
        d = self.features.shape[0]
        if self.labels.shape[0] != d or self.split.shape[0] != d:
            raise ValueError("features, labels and split must have equal row counts")

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def rows(self, split: str) -> np.ndarray:
        return np.nonzero(self.split == split)[0]

    def subset(self, indices: np.ndarray) -> "Dataset":
        return Dataset(
            features=self.features[indices],
            labels=self.labels[indices],
            split=self.split[indices],
            task_kind=self.task_kind,
        )


def validate_dataset(dataset: Dataset, task_kind: str) -> list[str]:
    """Task-level contract violations; empty list means the dataset is ready."""
    if task_kind not in TASK_KINDS:
        raise ValueError(f"task_kind must be one of {TASK_KINDS}")
    problems = []
    if task_kind == "classification":
        bad = np.nonzero((dataset.labels != 1.0) & (dataset.labels != -1.0))[0]
        if bad.size:
            problems.append(
                f"{bad.size} label(s) outside {{-1,+1}} (first at row {bad[0]}); "
                "raw {0,1} files need preprocess_classification"
            )
    else:
        if dataset.labels.size and (dataset.labels.min() < -1.0 or dataset.labels.max() > 1.0):
            problems.append("regression targets outside [-1, 1]; run normalize_targets")
    for tag in SPLIT_TAGS:
        if not np.any(dataset.split == tag):
            problems.append(f"no rows tagged {tag!r}")
    return problems


def load_dataset(path, task_kind: Optional[str] = None) -> Dataset:
    """Read a dataset file, validating structure (and task rules if given)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError(f"{path}: no data rows") from None
        if len(header) < 3 or header[0] != "split" or header[1] != "label":
            raise DatasetFormatError(
                f"{path}: header must be 'split,label,f0,...', got {header[:3]}..."
            )
        expected_cols = [f"f{i}" for i in range(len(header) - 2)]
        if header[2:] != expected_cols:
            raise DatasetFormatError(f"{path}: feature columns must be f0..f{len(header) - 3}")
        n_feat = len(header) - 2
        splits, labels, rows = [], [], []
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != n_feat + 2:
                raise DatasetFormatError(
                    f"{path}: row {rowno} has {len(row)} columns, expected {n_feat + 2}"
                )
            if row[0] not in SPLIT_TAGS:
                raise DatasetFormatError(f"{path}: row {rowno} has unknown split tag {row[0]!r}")
            splits.append(row[0])
            try:
                labels.append(float(row[1]))
            except ValueError:
                raise DatasetFormatError(f"{path}: row {rowno} has bad label {row[1]!r}") from None
            try:
                values = [float(v) for v in row[2:]]
            except ValueError:
                raise DatasetFormatError(f"{path}: row {rowno} has a non-numeric feature") from None
            rows.append(values)
        if not rows:
            raise DatasetFormatError(f"{path}: no data rows")
    features = np.asarray(rows, dtype=np.float64)
    if features.min() < -1.0 or features.max() > 1.0:
        flat = np.argmax((features < -1.0) | (features > 1.0))
        r, c = divmod(int(flat), features.shape[1])
        raise DatasetFormatError(
            f"{path}: feature f{c} at data row {r + 2} is outside [-1, 1]"
        )
    dataset = Dataset(features=features, labels=np.asarray(labels), split=np.asarray(splits, dtype=object))
    if task_kind is not None:
        problems = validate_dataset(dataset, task_kind)
        if problems:
            raise DatasetFormatError(f"{path}: " + "; ".join(problems))
        dataset.task_kind = task_kind
    return dataset


def save_dataset(dataset: Dataset, path) -> None:
    """Write the delimited format; floats use shortest round-trip repr."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["split", "label"] + [f"f{i}" for i in range(dataset.n_features)])
        for i in range(dataset.features.shape[0]):
            writer.writerow(
                [dataset.split[i], repr(float(dataset.labels[i]))]
                + [repr(float(v)) for v in dataset.features[i]]
            )


def _check_binary(name: str, values: np.ndarray) -> None:
    bad = values[(values != 0.0) & (values != 1.0)]
    if bad.size:
        raise ValueError(f"{name} must be binary 0/1, got {bad.flat[0]!r}")


def remap_binary_features(bits: np.ndarray) -> np.ndarray:
    """Map fingerprint bits {0,1} to {-1,+1} so embedding angles are symmetric."""
    bits = np.asarray(bits, dtype=np.float64)
    _check_binary("feature bits", bits)
    return 2.0 * bits - 1.0


def preprocess_classification(
    raw_labels: np.ndarray,
    raw_bits: np.ndarray,
    split: np.ndarray,
    max_features: int = MAX_FEATURES,
) -> Dataset:
    """Remap raw {0,1} labels and bits to +-1 and keep the first 128 features."""
    raw_labels = np.asarray(raw_labels, dtype=np.float64)
    _check_binary("labels", raw_labels)
    features = remap_binary_features(raw_bits)[:, :max_features]
    labels = 2.0 * raw_labels - 1.0
    return Dataset(features=features, labels=labels, split=np.asarray(split, dtype=object),
                   task_kind="classification")


@dataclass(frozen=True)
class TargetScaler:
    """Affine map fitted on the training targets: min -> -1, max -> +1."""

    train_min: float
    train_max: float

    def apply(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        span = self.train_max - self.train_min
        return 2.0 * (values - self.train_min) / span - 1.0

    def inverse(self, scaled: np.ndarray) -> np.ndarray:
        scaled = np.asarray(scaled, dtype=np.float64)
        span = self.train_max - self.train_min
        return (scaled + 1.0) * span / 2.0 + self.train_min


def normalize_targets(
    train_targets: np.ndarray,
    test_targets: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, TargetScaler, int]:
    """Scale targets to [-1, 1] using the training range only.

    Test values falling outside the training range are clamped; the clamp
    count is returned so the distortion is observable.  Returns
    (train_scaled, test_scaled, scaler, n_clamped).
    """
    train_targets = np.asarray(train_targets, dtype=np.float64)
    test_targets = np.asarray(test_targets, dtype=np.float64)
    lo, hi = float(train_targets.min()), float(train_targets.max())
    if lo == hi:
        raise ValueError("training targets are constant; cannot fit a scaler")
    scaler = TargetScaler(lo, hi)
    train_scaled = scaler.apply(train_targets)
    test_scaled = scaler.apply(test_targets)
    n_clamped = int(np.sum((test_scaled < -1.0) | (test_scaled > 1.0)))
    return train_scaled, np.clip(test_scaled, -1.0, 1.0), scaler, n_clamped


def preprocess_regression(
    raw_targets: np.ndarray,
    raw_features: np.ndarray,
    split: np.ndarray,
    max_features: int = MAX_FEATURES,
) -> tuple[Dataset, TargetScaler, int]:
    """Featurizer-output path for regression: bit remap + train-fitted scaling."""
    features = np.asarray(raw_features, dtype=np.float64)
    if set(np.unique(features)) <= {0.0, 1.0}:
        features = remap_binary_features(features)
    features = features[:, :max_features]
    split = np.asarray(split, dtype=object)
    targets = np.asarray(raw_targets, dtype=np.float64)
    train_rows = np.nonzero(split == "train")[0]
    test_rows = np.nonzero(split == "test")[0]
    if train_rows.size == 0:
        raise ValueError("no training rows to fit the target scaler on")
    train_scaled, test_scaled, scaler, n_clamped = normalize_targets(
        targets[train_rows], targets[test_rows]
    )
    out = targets.copy()
    out[train_rows] = train_scaled
    out[test_rows] = test_scaled
    return (
        Dataset(features=features, labels=out, split=split, task_kind="regression"),
        scaler,
        n_clamped,
    )


def make_synthetic(
    task_kind: str,
    d: int,
    n_features: int,
    imbalance_ratio: float = 6.0,
    noise_level: float = 0.2,
    seed: int = 0,
    train_fraction: float = 0.75,
) -> Dataset:
    """Seeded synthetic dataset for desk-scale experiments.

    Classification mimics the geometry of sparse imbalanced fingerprint
    tasks while staying learnable for shallow circuits.  Features come in
    three kinds, echoing how fingerprint bits behave on a rare class:

    - informative (a quarter, at least two): the majority class occupies a
      band on one side of a shared baseline, the minority a tighter
      structural cluster on the other, so at noise_level 0 each informative
      feature separates the classes with margin;
    - minority-scatter (another quarter): near-constant across the majority
      but wildly variable within the minority, the way rare-class molecules
      fire diverse substructure bits -- embedding these shreds the minority
      cluster without touching majority cohesion;
    - inert (the rest): baseline plus jitter, blind to the label.

    noise_level adds bounded uniform jitter that shrinks the margin and
    controls class overlap.  Class counts follow ``imbalance_ratio``
    (positives : negatives).

    Regression: targets are a bounded smooth function of two fixed latent
    directions through the feature cube, plus Gaussian noise, rescaled to
    [-1, 1] over the generated rows.
    """
    if task_kind not in TASK_KINDS:
        raise ValueError(f"task_kind must be one of {TASK_KINDS}")
    if d < 10:
        raise ValueError("d must be >= 10")
    if n_features < 2:
        raise ValueError("n_features must be >= 2")
    rng = rng_from(spawn_seed(seed, "synthetic", task_kind))

    if task_kind == "classification":
        if imbalance_ratio < 1.0:
            raise ValueError("imbalance_ratio must be >= 1 (positives are the majority)")
        n_neg = int(round(d / (imbalance_ratio + 1.0)))
        n_pos = d - n_neg
        if n_neg < 2 or n_pos < 2:
            raise ValueError(f"ratio {imbalance_ratio} leaves too few samples per class at d={d}")
        labels = np.concatenate([np.ones(n_pos), -np.ones(n_neg)])
        orientation = rng.choice([-1.0, 1.0], size=n_features)
        baseline = rng.uniform(-0.25, 0.25, size=n_features)
        cluster_offset = rng.uniform(0.30, 0.42, size=n_features)
        n_special = max(2, n_features // 4)
        feature_order = rng.permutation(n_features)
        informative = np.zeros(n_features)
        informative[feature_order[:n_special]] = 1.0
        scatter = np.zeros(n_features)
        scatter[feature_order[n_special : 2 * n_special]] = 1.0
        # scatter features idle at +-0.5 for the majority; the cos of the
        # embedded angle then averages to the minority's, hiding them from
        # first-order readouts
        baseline = np.where(scatter == 1.0, rng.choice([-0.5, 0.5], size=n_features), baseline)

        # majority: moderately wide band off the baseline on informative features
        shift_pos = orientation * rng.uniform(0.10, 0.45, size=(n_pos, n_features))
        clean_pos = baseline + informative * shift_pos
        # minority: tighter structural cluster on the opposite side, but wild
        # on the scatter features
        wobble = rng.uniform(-0.04, 0.04, size=(n_neg, n_features))
        shift_neg = orientation * (cluster_offset[None, :] + wobble)
        clean_neg = baseline - informative * shift_neg
        wild = rng.uniform(-1.0, 1.0, size=(n_neg, n_features))
        clean_neg = np.where(scatter[None, :] == 1.0, wild, clean_neg)

        clean = np.vstack([clean_pos, clean_neg])
        jitter = 0.3 * rng.uniform(-1.0, 1.0, size=(d, n_features))
        features = np.clip(clean + noise_level * jitter, -1.0, 1.0)
        split = _stratified_split(labels, train_fraction, rng)
    else:
        features = rng.uniform(-1.0, 1.0, size=(d, n_features))
        u1 = rng.normal(size=n_features)
        u2 = rng.normal(size=n_features)
        u1 /= np.abs(u1).sum()
        u2 /= np.abs(u2).sum()
        z1 = features @ u1
        z2 = features @ u2
        raw = np.sin(1.2 * np.pi * z1) + 0.6 * np.cos(0.8 * np.pi * z2)
        raw = raw + noise_level * rng.normal(size=d)
        lo, hi = raw.min(), raw.max()
        labels = 2.0 * (raw - lo) / (hi - lo) - 1.0
        order = rng.permutation(d)
        split = np.asarray(["test"] * d, dtype=object)
        split[order[: int(round(train_fraction * d))]] = "train"
    return Dataset(features=features, labels=labels, split=split, task_kind=task_kind)


def _stratified_split(labels: np.ndarray, train_fraction: float, rng) -> np.ndarray:
    split = np.asarray(["test"] * labels.shape[0], dtype=object)
    for cls in (1.0, -1.0):
        rows = np.nonzero(labels == cls)[0]
        rows = rows[rng.permutation(rows.shape[0])]
        n_train = int(round(train_fraction * rows.shape[0]))
        n_train = min(max(n_train, 1), rows.shape[0] - 1)
        split[rows[:n_train]] = "train"
    return split


def select_scoring_subset(dataset: Dataset, size: int, seed: int) -> np.ndarray:
    """Pick training-row indices for the scoring subset.

    Stratified (proportional, at least one per class) for classification,
    uniform for regression.  Deterministic given the seed.
    """
    train_rows = dataset.rows("train")
    if train_rows.size == 0:
        raise ValueError("dataset has no training rows")
    size = min(size, train_rows.size)
    rng = rng_from(seed)
    if dataset.task_kind == "classification":
        pos = train_rows[dataset.labels[train_rows] == 1.0]
        neg = train_rows[dataset.labels[train_rows] == -1.0]
        if pos.size == 0 or neg.size == 0:
            chosen = rng.choice(train_rows, size=size, replace=False)
        else:
            n_pos = int(round(size * pos.size / train_rows.size))
            n_pos = min(max(n_pos, 1), size - 1)
            n_neg = size - n_pos
            n_pos = min(n_pos, pos.size)
            n_neg = min(n_neg, neg.size)
            chosen = np.concatenate(
                [
                    rng.choice(pos, size=n_pos, replace=False),
                    rng.choice(neg, size=n_neg, replace=False),
                ]
            )
    else:
        chosen = rng.choice(train_rows, size=size, replace=False)
    return np.sort(chosen)
