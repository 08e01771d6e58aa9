"""Split-search backend selection: compiled extension when available,
numpy fallback otherwise. Set CFSTCAP_FORCE_PYTHON_KERNEL=1 to force the
fallback (used by the benchmark and backend-agreement tests)."""
import os

if os.environ.get("CFSTCAP_FORCE_PYTHON_KERNEL", "0") not in ("", "0"):
    from ._split_py import BACKEND, best_split
else:
    try:
        from ._split_cy import BACKEND, best_split  # type: ignore[no-redef]
    except ImportError:
        from ._split_py import BACKEND, best_split  # type: ignore[no-redef]

__all__ = ["BACKEND", "best_split"]
