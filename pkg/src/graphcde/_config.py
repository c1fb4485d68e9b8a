"""Runtime switches: kernel backend and debug self-checks."""

import os

_TRUE = {"1", "true", "yes", "on"}


def _flag(name):
    return os.environ.get(name, "").strip().lower() in _TRUE


# GRAPHCDE_PURE_NUMPY=1 forces the numpy kernels even when numba is importable.
PURE_NUMPY = _flag("GRAPHCDE_PURE_NUMPY") or _flag("NUMBA_DISABLE_JIT")

# GRAPHCDE_DEBUG=1 turns on internal cross-checks (two-formula Gamma-tilde-2, etc.).
DEBUG = _flag("GRAPHCDE_DEBUG")

REL_TOL = 1e-10
ABS_TOL = 1e-12

DENSE_THRESHOLD = int(os.environ.get("GRAPHCDE_DENSE_THRESHOLD", "512"))
