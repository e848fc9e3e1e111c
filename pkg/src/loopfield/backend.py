"""Kernel backend selection.

The hot sampling kernels exist twice: a compiled Cython extension
(``loopfield._kernels``) and a pure-Python reference twin
(``loopfield._kernels_py``).  Both expose the same functions and produce
bit-identical output for identical inputs; the compiled one is picked at
import time when available.  Set ``LOOPFIELD_PURE=1`` to force the pure
backend (used by the parity tests and the benchmark).
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _kernels  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover - build without the extension
    _kernels = None

if _kernels is not None and os.environ.get("LOOPFIELD_PURE", "") != "1":
    _active = _kernels
else:
    _active = _kernels_py

COMPILED = bool(_active.COMPILED)

SamplerStarvation = _kernels_py.SamplerStarvation
seed_state = _kernels_py.seed_state

uniforms = _active.uniforms
normals = _active.normals
gammas = _active.gammas
sample_soup = _active.sample_soup
sample_thick_loop = _active.sample_thick_loop
besq_path = _active.besq_path
cluster_loops = _active.cluster_loops


def get_backend(name: str = "active"):
    """Return a kernel module by name: 'active', 'pure' or 'compiled'."""
    if name == "active":
        import sys

        return sys.modules[__name__]
    if name == "pure":
        return _kernels_py
    if name == "compiled":
        if _kernels is None:
            raise RuntimeError("compiled kernels are not available")
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
