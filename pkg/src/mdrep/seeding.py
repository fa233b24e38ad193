"""Deterministic seed derivation.

All randomness in a run flows from one root seed. Sub-streams (split, init,
shuffling, domain sampling, noise) are derived by hashing the root together
with a label, so each is reproducible in isolation.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(root: int, label: str) -> int:
    digest = hashlib.sha256(f"{root}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derived_rng(root: int, label: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root, label))


def sample_rng(root: int, *keys: int) -> np.random.Generator:
    """Per-sample generator, stable under the (root, keys...) tuple."""
    return np.random.default_rng(np.random.SeedSequence((root & 0xFFFFFFFFFFFFFFFF, *keys)))
