"""Deterministic seed derivation.

Every stochastic step in the workbench draws from a generator produced here,
keyed by a root seed plus a path of labels (stage name, replica index,
circuit id, ...).  Derived streams are independent of execution order, so
parallel and serial schedules produce identical results, and a rerun from the
same root seed is bit-for-bit reproducible.
"""
from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def stable_key(value: int | str) -> int:
    """Map an int or string to a platform-independent 64-bit integer."""
    if isinstance(value, (int, np.integer)):
        return int(value) & _MASK64
    digest = hashlib.sha256(str(value).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def spawn_seed(seed: int, *keys: int | str) -> int:
    """Derive a child seed from a root seed and a key path.

    Uses sha256 over the textual key path, so the derivation does not depend
    on numpy internals or hash randomisation.
    """
    material = ":".join(
        [str(int(seed) & _MASK64)] + [str(stable_key(k)) for k in keys]
    )
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def rng_from(seed: int, *keys: int | str) -> np.random.Generator:
    """A numpy Generator seeded from ``spawn_seed(seed, *keys)``."""
    if keys:
        return np.random.default_rng(spawn_seed(seed, *keys))
    return np.random.default_rng(int(seed) & _MASK64)
