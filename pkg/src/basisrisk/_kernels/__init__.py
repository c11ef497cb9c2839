"""Pinball-loss kernels: compiled core with a NumPy fallback.

The Cython extension is optional; whichever backend is importable is
selected here, compiled preferred. ``BACKEND`` records the choice and
``available_backends`` exposes every importable implementation (used by the
cross-backend tests and the benchmark).
"""

from . import pinball_np

try:
    from . import _pinball_cy as impl

    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on the build environment
    impl = pinball_np
    BACKEND = "numpy"


def available_backends() -> dict:
    out = {"numpy": pinball_np}
    if BACKEND == "cython":
        out["cython"] = impl
    return out
