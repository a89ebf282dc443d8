"""Counter-based random streams.

A stream is identified by ``(seed, label, block)``. The label is hashed to a
64-bit key word, the block index sits in the counter, so the draws of a given
block never depend on how blocks are distributed over workers.
"""

from __future__ import annotations

import hashlib
import os

import numpy as np

from .errors import InputError

MASK64 = (1 << 64) - 1


def label_key(label: str) -> int:
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise InputError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise InputError("seed must fit in an unsigned 64-bit integer")
    return seed


def stream(seed: int, label: str = "", block: int = 0) -> np.random.Generator:
    """Generator for one block of one labelled substream."""
    key = np.array([check_seed(seed), label_key(label)], dtype=np.uint64)
    counter = np.array([0, 0, block & MASK64, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def block_sizes(trials: int, per_trial_cost: int, budget: int = 1 << 21,
                cap: int = 65536) -> list[int]:
    """Split ``trials`` into fixed blocks whose size depends only on the cost."""
    size = max(1, min(cap, budget // max(1, per_trial_cost)))
    full, rest = divmod(trials, size)
    return [size] * full + ([rest] if rest else [])


def default_workers() -> int:
    raw = os.environ.get("MDL_WORKERS", "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError as exc:
        raise InputError(f"MDL_WORKERS must be a positive integer, got {raw!r}") from exc
    if value < 1:
        raise InputError("MDL_WORKERS must be a positive integer")
    return value
