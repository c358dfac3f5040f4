"""Named substream derivation from a single top-level seed.

Every random draw in the package flows from one integer seed through
``substream(seed, *names)``; the names identify the purpose ("mixture",
"labelling", fold index, ...) so adding a consumer never shifts the
draws of another.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _token(name: object) -> int:
    digest = hashlib.sha256(repr(name).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def substream(seed: int, *names: object) -> np.random.Generator:
    """Return a Generator for the (seed, names...) stream.

    The same arguments always produce the same stream, independent of
    call order, platform, and process count.
    """
    entropy = [int(seed)] + [_token(n) for n in names]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def child_seed(seed: int, *names: object) -> int:
    """Derive an integer seed for an API that takes a seed rather than a
    Generator, keeping the named-stream discipline."""
    return int(substream(seed, *names).integers(2**63))
