"""Packed bitsets over records.

Record ``n`` lives in word ``n // 64`` at bit ``n % 64`` (little-endian), so
``to_int`` yields a Python integer whose bit ``n`` is record ``n``.
"""
from __future__ import annotations

import numpy as np

WORD_BITS = 64


def n_words(n_bits: int) -> int:
    return (n_bits + WORD_BITS - 1) // WORD_BITS


def pack(bits) -> np.ndarray:
    """Pack a boolean vector (or the rows of a boolean matrix) into uint64 words."""
    bits = np.asarray(bits, dtype=bool)
    n = bits.shape[-1]
    packed = np.packbits(bits, axis=-1, bitorder="little")
    pad = n_words(n) * 8 - packed.shape[-1]
    if pad:
        widths = [(0, 0)] * (packed.ndim - 1) + [(0, pad)]
        packed = np.pad(packed, widths)
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)


def unpack(words: np.ndarray, n_bits: int) -> np.ndarray:
    words = np.ascontiguousarray(words, dtype="<u8")
    raw = words.view(np.uint8)
    return np.unpackbits(raw, axis=-1, count=n_bits, bitorder="little").astype(bool)


def popcount(words: np.ndarray, axis=None):
    return np.bitwise_count(np.asarray(words, dtype=np.uint64)).sum(axis=axis, dtype=np.int64)


def to_int(words: np.ndarray) -> int:
    return int.from_bytes(np.ascontiguousarray(words, dtype="<u8").tobytes(), "little")


def from_int(value: int, n_bits: int) -> np.ndarray:
    nw = n_words(n_bits)
    return np.frombuffer(value.to_bytes(nw * 8, "little"), dtype="<u8").astype(np.uint64)


def full(n_bits: int) -> np.ndarray:
    return pack(np.ones(n_bits, dtype=bool))
