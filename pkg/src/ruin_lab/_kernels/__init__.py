"""Hot-loop kernels: compiled extension when available, numpy otherwise.

Set ``RUIN_LAB_PURE_PYTHON=1`` to force the numpy fallback.
"""

import importlib
import os

_NAMES = (
    "scan_paths",
    "scan_lattice",
    "spitzer_accumulate",
    "dp_ruin_curve",
    "truncated_convolve",
    "panjer_geometric",
)


def load(name=None):
    """Return a kernel module: ``"cython"``, ``"python"`` or the default choice."""
    if name == "python":
        return importlib.import_module("._pykernels", __name__)
    if name == "cython":
        return importlib.import_module("._ckernels", __name__)
    if os.environ.get("RUIN_LAB_PURE_PYTHON", "") not in ("", "0"):
        return load("python")
    try:
        return load("cython")
    except ImportError:
        return load("python")


def available():
    out = ["python"]
    try:
        load("cython")
        out.insert(0, "cython")
    except ImportError:
        pass
    return out


_mod = load()
BACKEND = _mod.BACKEND
scan_paths = _mod.scan_paths
scan_lattice = _mod.scan_lattice
spitzer_accumulate = _mod.spitzer_accumulate
dp_ruin_curve = _mod.dp_ruin_curve
# np.convolve beats the compiled loop here (see benchmarks/bench_kernels.py)
truncated_convolve = load("python").truncated_convolve
panjer_geometric = _mod.panjer_geometric

__all__ = ["BACKEND", "available", "load", *_NAMES]
