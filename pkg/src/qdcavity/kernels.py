"""Backend selection for the spectrum kernels.

The compiled extension is used when it imports; otherwise the numpy fallback.
Set ``QDCAVITY_PURE_PYTHON=1`` to force the fallback, or call
:func:`use_backend` at run time (callers look the kernels up through this
module, so a switch takes effect immediately).
"""
import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

NAMES = (
    "m1_population",
    "m1_exciton_population",
    "pd_amplitude",
    "sw_amplitude",
    "m2_pd_population",
    "m2_sw_population",
)

BACKEND = "python"


def available_backends() -> list:
    return ["python"] + (["cython"] if _compiled is not None else [])


def use_backend(name: str) -> str:
    """Switch to ``"cython"`` or ``"python"``; returns the previous backend."""
    global BACKEND
    if name == "cython":
        if _compiled is None:
            raise ImportError("the compiled kernels are not built")
        impl = _compiled
    elif name == "python":
        impl = _kernels_py
    else:
        raise ValueError(f"unknown backend {name!r}")
    previous = BACKEND
    g = globals()
    for n in NAMES:
        g[n] = getattr(impl, n)
    BACKEND = name
    return previous


_forced = os.environ.get("QDCAVITY_PURE_PYTHON", "").lower() in ("1", "true", "yes")
use_backend("cython" if _compiled is not None and not _forced else "python")

__all__ = ["BACKEND", "available_backends", "use_backend", *NAMES]
