"""Grid kernels: compiled extension with a pure-Python fallback.

The compiled backend (_gridcore, Cython) is preferred when importable; the
fallback (_pure) implements the same algorithms with the same float operation
order, so results are bitwise identical. Set PURSUITSIM_KERNELS=c to require
the compiled backend (ImportError if missing) or =python to force the
fallback.
"""
from __future__ import annotations

import os

_requested = os.environ.get("PURSUITSIM_KERNELS", "").strip().lower()
if _requested == "python":
    from . import _pure as _impl
    BACKEND = "python"
elif _requested in ("", "c"):
    try:
        from . import _gridcore as _impl  # type: ignore[attr-defined]
        BACKEND = "c"
    except ImportError:
        if _requested == "c":
            raise
        from . import _pure as _impl
        BACKEND = "python"
else:
    raise ImportError(
        f"PURSUITSIM_KERNELS must be 'c' or 'python', got {_requested!r}")

astar_path = _impl.astar_path
dijkstra_field = _impl.dijkstra_field
lidar_scan = _impl.lidar_scan
belief_update_rays = _impl.belief_update_rays


def get_backend() -> str:
    """Name of the active backend: 'c' or 'python'."""
    return BACKEND


def load_backend(name: str):
    """Import a specific backend module (for parity tests and benchmarks)."""
    if name == "c":
        from . import _gridcore
        return _gridcore
    if name == "python":
        return _pure_module()
    raise ValueError(f"unknown backend {name!r}")


def _pure_module():
    from . import _pure
    return _pure
