"""Backend selection for the orbit kernel.

The compiled extension is used when it imports; otherwise the numpy
implementation. ``INNER_DYN_BACKEND=python`` forces the fallback and
``INNER_DYN_THREADS`` sets the default thread count.
"""

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def available_backends() -> list[str]:
    return (["cython"] if _compiled is not None else []) + ["python"]


def default_backend() -> str:
    forced = os.environ.get("INNER_DYN_BACKEND", "").strip().lower()
    if forced in ("python", "numpy"):
        return "python"
    if forced == "cython" and _compiled is None:
        raise ImportError("INNER_DYN_BACKEND=cython but the compiled extension is not built")
    return "cython" if _compiled is not None else "python"


def default_threads() -> int:
    env = os.environ.get("INNER_DYN_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def birkhoff_sums(*args, backend=None, threads=None, **kwargs):
    """Dispatch to the selected backend; see ``_kernels_py.birkhoff_sums``."""
    backend = backend or default_backend()
    threads = default_threads() if threads is None else max(1, int(threads))
    if backend == "cython":
        if _compiled is None:
            raise ImportError("compiled kernel not available")
        return _compiled.birkhoff_sums(*args, threads=threads, **kwargs)
    return _kernels_py.birkhoff_sums(*args, threads=threads, **kwargs)
