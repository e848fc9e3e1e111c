"""Seed derivation for reproducible replica streams.

Replica ``i`` of a run with master seed ``s`` draws from an xoshiro256++
stream seeded by ``replica_seed(s, i, stream)``; the ``stream`` tag keeps
independent sub-experiments of one run (e.g. the loop soup batch and the
GFF batch) on disjoint streams.  Results therefore depend only on
``(master_seed, replica, stream)``, never on worker scheduling.
"""

from __future__ import annotations

import numpy as np

from ._kernels_py import seed_state

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 finalizer (bijective 64-bit mix)."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def replica_seed(master_seed: int, replica: int, stream: int = 0) -> int:
    h = mix64(master_seed ^ mix64((stream + 1) * _GOLDEN))
    return mix64(h + mix64((replica + 1) * _GOLDEN))


def replica_state(master_seed: int, replica: int, stream: int = 0) -> np.ndarray:
    return seed_state(replica_seed(master_seed, replica, stream))
