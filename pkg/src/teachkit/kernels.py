"""Kernel backend selection.

The compiled extension (`teachkit._fastkernels`) is preferred when importable;
the NumPy implementation is the fallback. Set TEACHKIT_KERNELS=numpy or
TEACHKIT_KERNELS=fast to force a backend (forcing `fast` raises if the
extension is missing).
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_np

_KERNEL_FUNCS = (
    "resize_bilinear_rgb",
    "color_cell_counts",
    "gradient_cell_sums",
    "label_components",
    "ncc_score_map",
)


def available_backends() -> dict[str, ModuleType]:
    backends = {"numpy": _kernels_np}
    try:
        from . import _fastkernels

        backends["fast"] = _fastkernels
    except ImportError:
        pass
    return backends


def _select() -> tuple[str, ModuleType]:
    choice = os.environ.get("TEACHKIT_KERNELS", "auto")
    backends = available_backends()
    if choice == "auto":
        name = "fast" if "fast" in backends else "numpy"
    elif choice in backends:
        name = choice
    elif choice == "fast":
        raise ImportError("TEACHKIT_KERNELS=fast but the extension is not built")
    else:
        raise ValueError(f"unknown TEACHKIT_KERNELS value: {choice!r}")
    return name, backends[name]


BACKEND, _impl = _select()

resize_bilinear_rgb = _impl.resize_bilinear_rgb
color_cell_counts = _impl.color_cell_counts
gradient_cell_sums = _impl.gradient_cell_sums
label_components = _impl.label_components
ncc_score_map = _impl.ncc_score_map
