"""Deterministic per-purpose seed derivation from a single root seed.

Every command takes one seed; independent random streams (data order, prior
draws, time draws, transport pair sampling, evaluation sampling, ...) are
derived from it by label so that adding or reordering consumers never shifts
another stream. Labels hash via crc32, which is stable across platforms and
Python versions.
"""

from __future__ import annotations

import zlib

import numpy as np


def derive_seed(seed: int, label: str) -> int:
    """A stable child seed for (root seed, purpose label)."""
    mixed = np.random.SeedSequence([int(seed), zlib.crc32(label.encode("utf-8"))])
    return int(mixed.generate_state(1, dtype=np.uint64)[0])


def stream(seed: int, label: str) -> np.random.Generator:
    """A fresh Generator for the given purpose."""
    return np.random.default_rng(derive_seed(seed, label))
