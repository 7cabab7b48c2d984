"""Seed plumbing: one master seed expands into independent per-stage subseeds."""
from __future__ import annotations

import hashlib

MASK64 = (1 << 64) - 1


def derive_seed(master: int, *tags) -> int:
    """Derive a 64-bit subseed from a master seed and a stage tag path.

    Stable across platforms and runs: sha256 over the decimal master seed
    and the stringified tags.
    """
    h = hashlib.sha256()
    h.update(str(int(master) & MASK64).encode())
    for tag in tags:
        h.update(b"/")
        h.update(str(tag).encode())
    return int.from_bytes(h.digest()[:8], "big")
