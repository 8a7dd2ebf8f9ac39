"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting the environment
variable ``LLR_LAB_PURE_PYTHON=1`` forces the numpy fallback. Both backends
expose ``poisson_batch``, ``poisson_tail_batch``, ``side_sup_batch`` and
``brownian_batch`` with identical signatures and draw order.
"""

from __future__ import annotations

import os

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def available_backends() -> list[str]:
    return ["python"] + (["compiled"] if _compiled is not None else [])


def get_backend(name: str | None = None):
    """Kernel module by name (``"compiled"`` or ``"python"``); None picks the default."""
    if name is None:
        name = "python" if os.environ.get("LLR_LAB_PURE_PYTHON") else (
            "compiled" if _compiled is not None else "python")
    if name == "python":
        return _fallback
    if name == "compiled":
        if _compiled is None:
            raise ImportError("llr_lab._kernels is not built; run `pip install -e .`")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


active = get_backend()
BACKEND = active.BACKEND
