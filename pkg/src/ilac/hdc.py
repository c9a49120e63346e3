"""Bipolar hypervector algebra and the encode / train / classify pipeline.

Representation choices:

* A hypervector is a 1-D ``int8`` array with every element in {+1, -1}.
  Binding is then the element-wise product (the XOR analogue), which is
  commutative, associative and self-inverse.
* An accumulator vector is a 1-D signed-integer array.  Bundling is exact
  element-wise integer addition, so training is order-independent and
  reproducible bit for bit.
* Real-valued features are quantized to signed integers (fixed-point, 8-bit
  range by default) before encoding, which keeps every accumulation exact.

Batched helpers (`encode_batch`, `train_batch`, `classify_batch`) carry the
integer values inside float64 matmuls: all intermediate magnitudes stay far
below 2**53, so the results are exact integers while the heavy lifting runs
on BLAS.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .streams import raw_bipolar, substream

BIPOLAR_DTYPE = np.int8
ACCUM_DTYPE = np.int64

# Magnitudes must stay exactly representable inside the float64 matmul path.
_EXACT_LIMIT = float(2**52)

AM_MAGIC = b"HDCM"
AM_VERSION = 1


def random_hv(seed: int, dims: int) -> np.ndarray:
    """Deterministic random bipolar hypervector for (seed, dims)."""
    if dims < 1:
        raise ValueError("dims must be >= 1")
    return raw_bipolar(seed, "hv", 0, dims)


@dataclass(frozen=True)
class ItemMemory:
    """Base set of near-orthogonal random hypervectors, regenerable from its seed."""

    seed: int
    dims: int
    vectors: np.ndarray  # (count, dims) int8 in {+1, -1}

    @classmethod
    def generate(cls, seed: int, dims: int, count: int) -> "ItemMemory":
        if dims < 1:
            raise ValueError("dims must be >= 1")
        if count < 1:
            raise ValueError("count must be >= 1")
        flat = raw_bipolar(seed, "item-memory", 0, dims * count)
        return cls(seed=seed, dims=dims, vectors=flat.reshape(count, dims))

    @property
    def count(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class AssociativeMemory:
    """Per-class accumulated hypervectors plus ingestion counts."""

    class_vectors: np.ndarray  # (K, D) int64, exact sums
    sample_counts: np.ndarray  # (K,) int64

    @property
    def num_classes(self) -> int:
        return self.class_vectors.shape[0]

    @property
    def dims(self) -> int:
        return self.class_vectors.shape[1]


def _check_same_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def bind(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Element-wise product of bipolar vectors; self-inverse."""
    _check_same_dims(a, b)
    return a * b


def bundle(operands) -> np.ndarray:
    """Exact element-wise integer sum of accumulator vectors."""
    operands = list(operands)
    if not operands:
        raise ValueError("bundle requires at least one operand")
    first = np.asarray(operands[0])
    out = first.astype(ACCUM_DTYPE, copy=True)
    for op in operands[1:]:
        op = np.asarray(op)
        _check_same_dims(first, op)
        out += op
    return out


def permute(a: np.ndarray, shift: int) -> np.ndarray:
    """Cyclic rotation by `shift` positions; permute(permute(a, s), -s) == a."""
    return np.roll(a, shift)


def negate(a: np.ndarray) -> np.ndarray:
    return -a


def sign_quantize(a: np.ndarray) -> np.ndarray:
    """Map an accumulator to bipolar signs; ties at zero map to +1."""
    return np.where(np.asarray(a) >= 0, 1, -1).astype(BIPOLAR_DTYPE)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """dot(a, b) / (|a| |b|); undefined (raises) for a zero vector."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_same_dims(a, b)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    return float(np.dot(a, b) / (na * nb))


def hamming_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Fraction of matching positions, in [0, 1]."""
    a = np.asarray(a)
    b = np.asarray(b)
    _check_same_dims(a, b)
    return float(np.mean(a == b))


def quantize_features(features, scale: float = 1.0, bits: int = 8) -> np.ndarray:
    """Round scale*features to integers, clipped to the signed `bits` range.

    The default scale of 1.0 leaves integer-valued features untouched, so
    small exact examples behave like plain integer arithmetic; pipelines
    working on real-valued data pass a finer fixed-point scale.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    if bits < 2:
        raise ValueError("bits must be >= 2")
    limit = 2 ** (bits - 1) - 1
    q = np.rint(np.asarray(features, dtype=np.float64) * scale)
    return np.clip(q, -limit, limit).astype(ACCUM_DTYPE)


def encode_record(features, base: ItemMemory, scale: float = 1.0, bits: int = 8) -> np.ndarray:
    """Project one feature vector onto the base set: sum_i q_i * B_i."""
    return encode_batch(np.atleast_2d(features), base, scale=scale, bits=bits)[0]


def encode_batch(features, base: ItemMemory, scale: float = 1.0, bits: int = 8) -> np.ndarray:
    """Encode a (samples, n_features) matrix into (samples, dims) accumulators."""
    feats = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if feats.shape[1] != base.count:
        raise ValueError(
            f"feature count {feats.shape[1]} does not match base count {base.count}"
        )
    q = quantize_features(feats, scale=scale, bits=bits)
    if base.count * (2.0 ** (bits - 1)) >= _EXACT_LIMIT:
        raise ValueError("feature width too large for the exact encoding path")
    out = q.astype(np.float64) @ base.vectors.astype(np.float64)
    return out.astype(ACCUM_DTYPE)


def inject_metadata(data_hv: np.ndarray, meta_hv: np.ndarray) -> np.ndarray:
    """Add a short metadata accumulator into the leading segment of a data accumulator."""
    data_hv = np.asarray(data_hv)
    meta_hv = np.asarray(meta_hv)
    d = meta_hv.shape[0]
    if d > data_hv.shape[0]:
        raise ValueError("metadata segment longer than the data vector")
    out = data_hv.astype(ACCUM_DTYPE, copy=True)
    out[:d] += meta_hv
    return out


def train_am(samples, num_classes: int) -> AssociativeMemory:
    """Single-pass accumulation of (vector, label) samples into class vectors.

    Classes that receive no samples keep an all-zero vector and a zero count.
    """
    if num_classes < 1:
        raise ValueError("num_classes must be >= 1")
    class_vectors = None
    counts = np.zeros(num_classes, dtype=ACCUM_DTYPE)
    for vec, label in samples:
        label = int(label)
        if not 0 <= label < num_classes:
            raise ValueError(f"label {label} out of range 0..{num_classes - 1}")
        vec = np.asarray(vec)
        if class_vectors is None:
            class_vectors = np.zeros((num_classes, vec.shape[0]), dtype=ACCUM_DTYPE)
        class_vectors[label] += vec
        counts[label] += 1
    if class_vectors is None:
        raise ValueError("train_am requires at least one sample")
    return AssociativeMemory(class_vectors=class_vectors, sample_counts=counts)


def train_batch(encoded: np.ndarray, labels: np.ndarray, num_classes: int) -> AssociativeMemory:
    """Vectorized train_am for an already-encoded (samples, dims) matrix."""
    if num_classes < 1:
        raise ValueError("num_classes must be >= 1")
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError("label out of range")
    enc = np.asarray(encoded, dtype=np.float64)
    if enc.size and abs(enc).max() * max(len(labels), 1) >= _EXACT_LIMIT:
        raise ValueError("accumulator magnitudes too large for the exact training path")
    onehot = np.zeros((num_classes, len(labels)))
    onehot[labels, np.arange(len(labels))] = 1.0
    class_vectors = (onehot @ enc).astype(ACCUM_DTYPE)
    counts = np.bincount(labels, minlength=num_classes).astype(ACCUM_DTYPE)
    return AssociativeMemory(class_vectors=class_vectors, sample_counts=counts)


def _class_scores(queries: np.ndarray, class_vectors: np.ndarray, metric: str) -> np.ndarray:
    q = np.asarray(queries, dtype=np.float64)
    cv = np.asarray(class_vectors, dtype=np.float64)
    zero_classes = ~cv.any(axis=1)
    if zero_classes.all():
        raise ValueError("no trained classes: every class vector is zero")
    if metric == "cosine":
        qn = np.linalg.norm(q, axis=1, keepdims=True)
        if np.any(qn == 0.0):
            raise ValueError("cosine similarity is undefined for a zero query")
        cn = np.linalg.norm(cv, axis=1)
        cn[zero_classes] = 1.0  # avoid 0/0; masked below
        scores = (q @ cv.T) / (qn * cn[None, :])
    elif metric == "hamming":
        qs = sign_quantize(q).astype(np.float64)
        cs = sign_quantize(cv).astype(np.float64)
        dims = q.shape[1]
        scores = (dims + qs @ cs.T) / (2.0 * dims)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    scores[:, zero_classes] = -np.inf
    return scores


def classify(query: np.ndarray, am: AssociativeMemory, metric: str = "cosine"):
    """Label and per-class scores for a single query; ties go to the lowest index."""
    labels, scores = classify_batch(np.atleast_2d(query), am, metric=metric)
    return int(labels[0]), scores[0]


def classify_batch(queries: np.ndarray, am: AssociativeMemory, metric: str = "cosine"):
    """Labels and (samples, K) score matrix; untrained classes score -inf."""
    if np.asarray(queries).shape[-1] != am.dims:
        raise ValueError("query dimensionality does not match the memory")
    scores = _class_scores(queries, am.class_vectors, metric)
    return np.argmax(scores, axis=1), scores


def binarize(am: AssociativeMemory) -> AssociativeMemory:
    """Sign-quantized copy of an associative memory (ties at zero map to +1)."""
    return AssociativeMemory(
        class_vectors=sign_quantize(am.class_vectors).astype(ACCUM_DTYPE),
        sample_counts=am.sample_counts.copy(),
    )


def save_am(am: AssociativeMemory, path) -> None:
    """Write the binary associative-memory format.

    Layout (little-endian): magic ``HDCM``, version u16, K u32, D u32,
    bits-per-element u8 (8 or 32), then the K x D class vectors row-major as
    signed integers of that width, then K sample counts as u64.
    """
    cv = am.class_vectors
    if np.abs(cv).max(initial=0) <= 127:
        bits, dtype = 8, "<i1"
    elif np.abs(cv).max(initial=0) < 2**31:
        bits, dtype = 32, "<i4"
    else:
        raise ValueError("class vector magnitudes exceed the 32-bit wire format")
    header = AM_MAGIC + np.array(
        [AM_VERSION], dtype="<u2"
    ).tobytes() + np.array([am.num_classes, am.dims], dtype="<u4").tobytes() + bytes([bits])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(cv.astype(dtype).tobytes())
        fh.write(am.sample_counts.astype("<u8").tobytes())


def load_am(path) -> AssociativeMemory:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != AM_MAGIC:
        raise ValueError("not an associative-memory file (bad magic)")
    version = int(np.frombuffer(blob, dtype="<u2", count=1, offset=4)[0])
    if version != AM_VERSION:
        raise ValueError(f"unsupported format version {version}")
    k, d = (int(x) for x in np.frombuffer(blob, dtype="<u4", count=2, offset=6))
    bits = blob[14]
    dtype = {8: "<i1", 32: "<i4"}.get(bits)
    if dtype is None:
        raise ValueError(f"unsupported element width {bits}")
    body = 15
    n_bytes = k * d * (bits // 8)
    cv = np.frombuffer(blob, dtype=dtype, count=k * d, offset=body).reshape(k, d)
    counts = np.frombuffer(blob, dtype="<u8", count=k, offset=body + n_bytes)
    return AssociativeMemory(
        class_vectors=cv.astype(ACCUM_DTYPE),
        sample_counts=counts.astype(ACCUM_DTYPE),
    )
