"""Deterministic random streams.

Two kinds of generators are used throughout the package:

* ``stream(seed, *labels)`` returns a :class:`numpy.random.Generator` backed by
  Philox-4x64 (a counter-based generator) keyed with ``seed ^ hash(labels)``.
  Streams for different labels (replica index, step index, purpose) are
  independent and can be created in any order.
* ``counter_uniforms(key, counters)`` maps integer counters (junction ids)
  to uniforms in [0, 1) with the SplitMix64 finalizer.  Each junction gets its
  own draw regardless of how many other junctions exist or in what order they
  are evaluated.
"""
from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def label_hash(*labels) -> int:
    """64-bit BLAKE2b digest of the labels' ``repr``."""
    digest = hashlib.blake2b(repr(labels).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_seed(seed: int, *labels) -> int:
    """Child seed ``seed XOR hash(labels)``."""
    if seed < 0 or seed > MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return (int(seed) ^ label_hash(*labels)) & MASK64


def stream(seed: int, *labels) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=derive_seed(seed, *labels)))


def splitmix64(x: np.ndarray) -> np.ndarray:
    z = np.asarray(x, dtype=np.uint64) + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def counter_uniforms(key: int, counters) -> np.ndarray:
    """Uniform [0, 1) draws, one per counter, independent of evaluation order."""
    counters = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = splitmix64(np.uint64(key & MASK64) ^ splitmix64(counters))
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
