"""Deterministic, independently keyed random streams.

Every random draw in the package flows through one of these helpers, which
key a counter-based Philox generator by a BLAKE2b digest of
``(seed, tag, index)``.  Streams with distinct tags or indices never overlap
and do not depend on call order, so any artifact (item memory, dataset,
placement, compression index set, ...) regenerates bit-exactly from its
triple alone.

Bipolar vectors are expanded from the raw Philox word stream with a fixed
little-endian bit order, which pins them independently of platform byte
order and of numpy's distribution implementations.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream_key(seed: int, tag: str, index: int = 0) -> int:
    """128-bit Philox key derived from (seed, tag, index)."""
    msg = f"{seed}:{tag}:{index}".encode()
    return int.from_bytes(hashlib.blake2b(msg, digest_size=16).digest(), "little")


def substream(seed: int, tag: str, index: int = 0) -> np.random.Generator:
    """Independent Generator for the (seed, tag, index) triple."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, tag, index)))


def raw_bipolar(seed: int, tag: str, index: int, count: int) -> np.ndarray:
    """`count` fair bipolar symbols (+1/-1, int8) from the raw Philox stream."""
    if count < 1:
        raise ValueError("count must be >= 1")
    bitgen = np.random.Philox(key=stream_key(seed, tag, index))
    n_words = -(-count // 64)
    words = bitgen.random_raw(n_words).astype("<u8", copy=False)
    bits = np.unpackbits(np.frombuffer(words.tobytes(), dtype=np.uint8), bitorder="little")
    return (bits[:count].astype(np.int8) * 2 - 1)
