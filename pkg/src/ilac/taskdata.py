"""Seeded synthetic classification datasets (Gaussian blobs).

Class centers are drawn from an isotropic normal whose scale puts typical
pairwise center distances a little above the requested separation, and each
candidate center is redrawn until it clears the separation floor against the
ones already placed.  Per-sample noise is isotropic.  Everything regenerates
bit-exactly from (spec, seed).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .streams import substream

# Typical pairwise center distance as a multiple of the separation floor.
CENTER_SPREAD = 1.3
_MAX_CENTER_TRIES = 10_000


@dataclass(frozen=True)
class TaskSpec:
    task_id: int
    classes: int
    feature_dim: int
    samples_per_class: int
    separation: float
    noise_std: float

    def __post_init__(self):
        if self.classes < 2:
            raise ValueError("a task needs at least 2 classes")
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be >= 1")
        if self.samples_per_class < 1:
            raise ValueError("samples_per_class must be >= 1")
        if self.separation <= 0:
            raise ValueError("separation must be positive")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")


@dataclass(frozen=True)
class Dataset:
    task_id: int
    split: str  # "all", "train" or "validation"
    features: np.ndarray  # (records, feature_dim) float64
    labels: np.ndarray  # (records,) int64

    def __post_init__(self):
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("features and labels disagree on record count")

    @property
    def num_records(self) -> int:
        return self.labels.shape[0]


def class_centers(spec: TaskSpec, seed: int) -> np.ndarray:
    """Seeded class centers with pairwise distances >= spec.separation."""
    rng = substream(seed, "task-centers", spec.task_id)
    scale = CENTER_SPREAD * spec.separation / math.sqrt(2.0 * spec.feature_dim)
    centers = np.empty((spec.classes, spec.feature_dim))
    for k in range(spec.classes):
        for _ in range(_MAX_CENTER_TRIES):
            cand = rng.normal(0.0, scale, spec.feature_dim)
            if k == 0 or np.linalg.norm(centers[:k] - cand, axis=1).min() >= spec.separation:
                centers[k] = cand
                break
        else:
            raise ValueError(
                f"could not place {spec.classes} centers at separation "
                f"{spec.separation} in {spec.feature_dim} dimensions"
            )
    return centers


def generate(spec: TaskSpec, seed: int) -> Dataset:
    """Full dataset for a task: samples_per_class draws around each center."""
    centers = class_centers(spec, seed)
    rng = substream(seed, "task-samples", spec.task_id)
    n = spec.samples_per_class
    feats = np.empty((spec.classes * n, spec.feature_dim))
    labels = np.repeat(np.arange(spec.classes, dtype=np.int64), n)
    for k in range(spec.classes):
        noise = rng.standard_normal((n, spec.feature_dim)) * spec.noise_std
        feats[k * n:(k + 1) * n] = centers[k] + noise
    return Dataset(task_id=spec.task_id, split="all", features=feats, labels=labels)


def split(data: Dataset, train_fraction: float, seed: int):
    """Stratified (train, validation) split; the union is exactly the input.

    Train receives ceil(fraction * count) records per class, capped at
    count - 1 so that every class stays present in both splits.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    rng = substream(seed, "split", data.task_id)
    train_idx, val_idx = [], []
    for k in np.unique(data.labels):
        members = np.flatnonzero(data.labels == k)
        if members.size < 2:
            raise ValueError(f"class {k} has fewer than 2 samples")
        perm = members[rng.permutation(members.size)]
        n_train = min(math.ceil(train_fraction * members.size), members.size - 1)
        train_idx.extend(perm[:n_train])
        val_idx.extend(perm[n_train:])
    train_idx = np.sort(np.array(train_idx, dtype=np.int64))
    val_idx = np.sort(np.array(val_idx, dtype=np.int64))
    mk = lambda idx, tag: Dataset(
        task_id=data.task_id, split=tag,
        features=data.features[idx], labels=data.labels[idx],
    )
    return mk(train_idx, "train"), mk(val_idx, "validation")


def to_csv(data: Dataset, path) -> None:
    """Export records as task_id, split, label, f0..f{n-1}."""
    n = data.features.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["task_id", "split", "label"] + [f"f{i}" for i in range(n)])
        for label, row in zip(data.labels, data.features):
            writer.writerow([data.task_id, data.split, int(label)] + [repr(v) for v in row])
