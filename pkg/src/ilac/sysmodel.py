"""System model for the joint learning/communication case study.

Ties together task assignment, model sizing, compression (seeded dimension
subsampling shared across classes), the compression compute cost, accuracy
curves measured on held-out data, weighted server-side aggregation, the
rate-times-accuracy performance product Q, and the cost-to-performance
ratio (CPR) that the solver minimizes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import hdc, taskdata
from .radio import ChannelState, NoiseModel
from .streams import stream_key, substream
from .taskdata import TaskSpec


@dataclass(frozen=True)
class ClientSpec:
    client_id: int
    position_m: tuple
    p_max_w: float
    e_max: float = math.inf  # compression-cost cap, same units as the eta cost

    def __post_init__(self):
        if self.p_max_w <= 0:
            raise ValueError("p_max must be positive")
        if self.e_max < 0:
            raise ValueError("e_max must be nonnegative")


@dataclass(frozen=True)
class Scenario:
    """Tasks, clients, channels and resource budgets for one solve."""

    tasks: tuple
    clients: tuple
    channels: tuple
    b_max_hz: float
    t_max_s: float
    hv_dims: int
    noise: NoiseModel
    eta_coeff: float = 1.0
    bits_per_dim: int = 32

    def __post_init__(self):
        m, n = len(self.tasks), len(self.clients)
        if n < 2 * m:
            raise ValueError(
                f"infeasible scenario: {n} clients cannot cover {m} tasks "
                "with at least two clients each"
            )
        if len(self.channels) != n:
            raise ValueError("one channel state per client is required")
        if self.b_max_hz <= 0 or self.t_max_s <= 0:
            raise ValueError("budgets must be positive")
        if self.hv_dims < 1 or self.bits_per_dim < 1:
            raise ValueError("hv_dims and bits_per_dim must be positive")
        if self.eta_coeff < 0:
            raise ValueError("eta_coeff must be nonnegative")

    @property
    def num_tasks(self) -> int:
        return len(self.tasks)

    @property
    def num_clients(self) -> int:
        return len(self.clients)

    @property
    def task_classes(self) -> np.ndarray:
        return np.array([t.classes for t in self.tasks], dtype=np.int64)

    @property
    def gains(self) -> np.ndarray:
        return np.array([c.gain for c in self.channels])

    @property
    def p_max(self) -> np.ndarray:
        return np.array([c.p_max_w for c in self.clients])

    @property
    def e_max(self) -> np.ndarray:
        return np.array([c.e_max for c in self.clients])


@dataclass(frozen=True)
class Assignment:
    """Binary task-by-client matrix plus per-client kept dimension counts."""

    matrix: np.ndarray  # (M, N) in {0, 1}
    compressed_dims: np.ndarray  # (N,) kept dimensions per client

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=np.int8)
        kept = np.asarray(self.compressed_dims, dtype=np.int64)
        if mat.ndim != 2:
            raise ValueError("assignment matrix must be 2-D")
        if not np.isin(mat, (0, 1)).all():
            raise ValueError("assignment matrix must be binary")
        if (mat.sum(axis=0) != 1).any():
            raise ValueError("each client must carry exactly one task")
        if (mat.sum(axis=1) < 2).any():
            raise ValueError("each task needs at least two clients")
        if kept.shape != (mat.shape[1],):
            raise ValueError("one kept-dimension count per client is required")
        if (kept < 1).any():
            raise ValueError("kept dimension counts must be positive")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "compressed_dims", kept)

    @property
    def task_of(self) -> np.ndarray:
        return np.argmax(self.matrix, axis=0)

    def validate_dims(self, hv_dims: int) -> None:
        if (self.compressed_dims > hv_dims).any():
            raise ValueError("kept dimensions exceed the hypervector dimensionality")


def model_size_bits(assignment_row, task_classes, hv_dims: int, bits_per_dim: int) -> float:
    """Uncompressed model size for one client: K_task * D * bits_per_dim."""
    row = np.asarray(assignment_row)
    if row.sum() != 1:
        raise ValueError("client must carry exactly one task")
    k = int(np.asarray(task_classes)[np.argmax(row)])
    return float(k * hv_dims * bits_per_dim)


def compression_cost(s0_bits: float, sc_bits: float, kappa: float) -> float:
    """Compute cost kappa * (s0/sc - 1): zero at ratio 1, increasing in the ratio."""
    if sc_bits <= 0 or sc_bits > s0_bits:
        raise ValueError("compressed size must lie in (0, s0]")
    return kappa * (s0_bits / sc_bits - 1.0)


@dataclass(frozen=True)
class CompressedModel:
    """Class vectors restricted to a seeded subset of dimensions."""

    task_id: int
    source_dims: int
    kept_indices: np.ndarray  # sorted, unique
    class_vectors: np.ndarray  # (K, kept)
    validation_accuracy: float = float("nan")

    @property
    def ratio(self) -> float:
        return self.source_dims / self.kept_indices.shape[0]

    def predict(self, queries_full: np.ndarray) -> np.ndarray:
        """Labels for full-dimensional queries, scored on the kept subspace."""
        am = hdc.AssociativeMemory(
            class_vectors=np.asarray(self.class_vectors, dtype=np.int64),
            sample_counts=np.zeros(self.class_vectors.shape[0], dtype=np.int64),
        )
        labels, _ = hdc.classify_batch(
            np.asarray(queries_full)[:, self.kept_indices], am
        )
        return labels


def compress(am: hdc.AssociativeMemory, kept: int, seed: int,
             task_id: int = 0) -> CompressedModel:
    """Restrict a trained memory to `kept` seeded dimensions (kept == D is the identity)."""
    d = am.dims
    if not 1 <= kept <= d:
        raise ValueError("kept must lie in 1..D")
    if kept == d:
        idx = np.arange(d, dtype=np.int64)
    else:
        rng = substream(seed, "compress", kept)
        idx = np.sort(rng.choice(d, size=kept, replace=False)).astype(np.int64)
    return CompressedModel(
        task_id=task_id, source_dims=d, kept_indices=idx,
        class_vectors=am.class_vectors[:, idx].copy(),
    )


@dataclass(frozen=True)
class AggregatedClassifier:
    """Task-level classifier over the union of the contributors' kept dimensions."""

    task_id: int
    source_dims: int
    dim_indices: np.ndarray
    class_vectors: np.ndarray  # float64 weighted sums

    def predict(self, queries_full: np.ndarray) -> np.ndarray:
        q = np.asarray(queries_full, dtype=np.float64)[:, self.dim_indices]
        cv = self.class_vectors
        qn = np.linalg.norm(q, axis=1, keepdims=True)
        cn = np.linalg.norm(cv, axis=1)
        zero = cn == 0.0
        cn[zero] = 1.0
        scores = (q @ cv.T) / (np.where(qn == 0.0, 1.0, qn) * cn[None, :])
        scores[:, zero] = -np.inf
        return np.argmax(scores, axis=1)


def aggregate(models, weights) -> AggregatedClassifier:
    """Weighted per-dimension combination of compressed models for one task.

    Weights (typically validation accuracies) are normalized to sum to one;
    dimensions absent from a contributor count as zero.
    """
    models = list(models)
    if not models:
        raise ValueError("aggregate requires at least one model")
    task_ids = {m.task_id for m in models}
    if len(task_ids) != 1:
        raise ValueError("all models must come from the same task")
    dims = {m.source_dims for m in models}
    if len(dims) != 1:
        raise ValueError("all models must share the source dimensionality")
    w = np.asarray(list(weights), dtype=np.float64)
    if w.shape != (len(models),) or (w <= 0).any():
        raise ValueError("one positive weight per model is required")
    w = w / w.sum()
    union = np.unique(np.concatenate([m.kept_indices for m in models]))
    pos = {int(d): i for i, d in enumerate(union)}
    k = models[0].class_vectors.shape[0]
    combined = np.zeros((k, union.shape[0]))
    for m, wi in zip(models, w):
        cols = [pos[int(d)] for d in m.kept_indices]
        combined[:, cols] += wi * m.class_vectors
    return AggregatedClassifier(
        task_id=models[0].task_id, source_dims=models[0].source_dims,
        dim_indices=union, class_vectors=combined,
    )


def performance_q(assignment_matrix, rates_bps, task_mean_accuracies) -> float:
    """Communication-rate sum times the mean per-task accuracy."""
    mat = np.asarray(assignment_matrix)
    r = np.asarray(rates_bps, dtype=np.float64)
    acc = np.asarray(task_mean_accuracies, dtype=np.float64)
    if (mat.sum(axis=0) != 1).any() or (mat.sum(axis=1) < 2).any():
        raise ValueError("infeasible assignment matrix")
    if (r < 0).any():
        raise ValueError("rates must be nonnegative")
    if (acc < 0).any() or (acc > 1).any():
        raise ValueError("accuracies must lie in [0, 1]")
    rate_sum = float((mat * r[None, :]).sum())
    return rate_sum * float(np.mean(acc))


def cpr(costs, q: float) -> float:
    """Cost-to-performance ratio: total compression cost over Q."""
    if q <= 0.0:
        raise ValueError("degenerate performance: Q must be positive")
    return float(np.sum(costs) / q)


@dataclass(frozen=True)
class AccuracyCurve:
    """Validation accuracy as a nonincreasing function of the compression ratio."""

    task_id: int
    ratios: np.ndarray
    accuracies: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.ratios, dtype=np.float64)
        a = np.asarray(self.accuracies, dtype=np.float64)
        if r.ndim != 1 or r.shape != a.shape or r.size == 0:
            raise ValueError("ratio grid and accuracies must be matching 1-D arrays")
        if r[0] != 1.0 or (np.diff(r) <= 0).any():
            raise ValueError("ratio grid must start at 1.0 and increase strictly")
        if (a < 0).any() or (a > 1).any():
            raise ValueError("accuracies must lie in [0, 1]")
        object.__setattr__(self, "ratios", r)
        object.__setattr__(self, "accuracies", a)

    def value(self, ratio: float) -> float:
        """Piecewise-linear interpolation, clamped at the grid ends."""
        return float(np.interp(ratio, self.ratios, self.accuracies))


@dataclass(frozen=True)
class EncoderConfig:
    """Knobs for the feature-to-hypervector pipeline used when measuring curves."""

    hv_dims: int = 10_000
    feature_scale: float = 8.0
    feature_bits: int = 8
    train_fraction: float = 0.8
    metric: str = "cosine"


def train_task_model(spec: TaskSpec, seed: int, cfg: EncoderConfig):
    """Train one model on a task's train split.

    Returns (memory, encoded_validation, validation_labels).
    """
    data = taskdata.generate(spec, seed)
    train, val = taskdata.split(data, cfg.train_fraction, seed)
    base = hdc.ItemMemory.generate(
        stream_key(seed, "task-base", spec.task_id) % (2**63), cfg.hv_dims, spec.feature_dim
    )
    enc_train = hdc.encode_batch(train.features, base,
                                 scale=cfg.feature_scale, bits=cfg.feature_bits)
    enc_val = hdc.encode_batch(val.features, base,
                               scale=cfg.feature_scale, bits=cfg.feature_bits)
    am = hdc.train_batch(enc_train, train.labels, spec.classes)
    if cfg.metric == "hamming":
        am = hdc.binarize(am)
    return am, enc_val, val.labels


def _compressed_accuracy(am, enc_val, val_labels, kept, seed, task_id, metric):
    model = compress(am, kept, seed, task_id=task_id)
    sub = hdc.AssociativeMemory(
        class_vectors=model.class_vectors,
        sample_counts=np.zeros(model.class_vectors.shape[0], dtype=np.int64),
    )
    labels, _ = hdc.classify_batch(enc_val[:, model.kept_indices], sub, metric=metric)
    return float(np.mean(labels == val_labels))


def build_accuracy_curve(spec: TaskSpec, ratio_grid, seeds,
                         cfg: EncoderConfig | None = None) -> AccuracyCurve:
    """Measure accuracy over a compression-ratio grid, averaged over seeds.

    Each seed trains once at full dimensionality; every grid ratio then
    evaluates a seeded subsample of ceil(D/ratio) dimensions on the held-out
    split.  The averaged curve is projected to a nonincreasing one with a
    running minimum, which leaves the ratio-1 anchor untouched.
    """
    cfg = cfg or EncoderConfig()
    grid = np.asarray(ratio_grid, dtype=np.float64)
    if grid[0] != 1.0:
        raise ValueError("ratio grid must start at 1.0")
    acc = np.zeros(grid.shape[0])
    for seed in seeds:
        am, enc_val, val_labels = train_task_model(spec, seed, cfg)
        for i, ratio in enumerate(grid):
            kept = math.ceil(cfg.hv_dims / ratio)
            acc[i] += _compressed_accuracy(
                am, enc_val, val_labels, kept, seed, spec.task_id, cfg.metric
            )
    acc /= len(list(seeds))
    return AccuracyCurve(task_id=spec.task_id, ratios=grid,
                         accuracies=np.minimum.accumulate(acc))


def save_curves(curves, path) -> None:
    """Write curves as task_id, ratio, accuracy rows (full-precision decimals)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["task_id", "ratio", "accuracy"])
        for curve in curves:
            for r, a in zip(curve.ratios, curve.accuracies):
                writer.writerow([curve.task_id, repr(float(r)), repr(float(a))])


def load_curves(path) -> dict:
    """Read curves written by save_curves, keyed by task id."""
    rows: dict[int, list] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["task_id", "ratio", "accuracy"]:
            raise ValueError(f"unexpected curve header {header}")
        for task_id, ratio, accuracy in reader:
            rows.setdefault(int(task_id), []).append((float(ratio), float(accuracy)))
    out = {}
    for task_id, pairs in rows.items():
        pairs.sort()
        out[task_id] = AccuracyCurve(
            task_id=task_id,
            ratios=np.array([p[0] for p in pairs]),
            accuracies=np.array([p[1] for p in pairs]),
        )
    return out
