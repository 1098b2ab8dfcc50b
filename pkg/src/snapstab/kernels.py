"""Kernel dispatch: compiled extension when importable, pure Python otherwise.

Set ``SNAPSTAB_PURE=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("SNAPSTAB_PURE"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py

refine_colors = _impl.refine_colors
reverse_distances = _impl.reverse_distances
influence_update = _impl.influence_update
enum_select = _impl.enum_select


def backends():
    """Both kernel modules that are available, keyed by name."""
    found = {"python": _kernels_py}
    try:
        from . import _kernels

        found["compiled"] = _kernels
    except ImportError:
        pass
    return found
