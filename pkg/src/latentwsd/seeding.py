"""Stable seed derivation.

Python's builtin ``hash`` is salted per process, so derived seeds go through
blake2b instead.
"""

import hashlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def normalize_seed(seed: int) -> int:
    """Map any Python int onto the unsigned 64-bit range."""
    return int(seed) & SEED_MASK


def derive_seed(seed: int, *labels) -> int:
    h = hashlib.blake2b(digest_size=8)
    h.update(str(normalize_seed(seed)).encode("ascii"))
    for label in labels:
        h.update(b"\x1f")
        h.update(str(label).encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(normalize_seed(seed))
