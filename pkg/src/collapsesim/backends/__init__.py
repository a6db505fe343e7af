"""Compute-backend selection.

Two interchangeable implementations of the per-generation kernels exist: a
compiled Cython extension (``_kernels``) and a pure numpy fallback
(``fallback``).  Both consume the identical uniform stream and produce
bit-identical sample counts, collapse times, and absorbed tokens; float
statistics agree to reduction-order rounding (~1 ulp).  Selection order:

1. explicit name passed to :func:`get`,
2. the ``COLLAPSESIM_BACKEND`` environment variable (``compiled``/``python``),
3. the compiled extension if importable, else the fallback.
"""

from __future__ import annotations

import os
from types import ModuleType
from typing import Optional

from ..errors import BackendUnavailable
from . import fallback

try:
    from . import _kernels  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover - depends on the build environment
    _kernels = None

__all__ = ["get", "available", "default_name"]

_ENV_VAR = "COLLAPSESIM_BACKEND"


def available() -> tuple[str, ...]:
    names = ["python"]
    if _kernels is not None:
        names.insert(0, "compiled")
    return tuple(names)


def default_name() -> str:
    env = os.environ.get(_ENV_VAR)
    if env:
        return env
    return "compiled" if _kernels is not None else "python"


def get(name: Optional[str] = None) -> ModuleType:
    """Resolve a backend module by name (None selects the default)."""
    resolved = name if name is not None else default_name()
    if resolved == "compiled":
        if _kernels is None:
            raise BackendUnavailable(
                "compiled backend requested but the extension is not built; "
                "run `python setup.py build_ext --inplace` or use backend "
                "'python'"
            )
        return _kernels
    if resolved == "python":
        return fallback
    raise BackendUnavailable(
        f"unknown backend {resolved!r}; available: {', '.join(available())}"
    )
