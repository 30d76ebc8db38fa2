"""Labeled deterministic random streams.

Every consumer of randomness derives its own generator from the scenario seed
plus a stable string label, so adding or removing one consumer never shifts
the draws of another.
"""
from __future__ import annotations

import hashlib

import numpy as np


def derive_rng(seed: int, label: str) -> np.random.Generator:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    label_key = int.from_bytes(digest[:8], "big")
    return np.random.default_rng(np.random.SeedSequence(entropy=(seed, label_key)))
