"""Backend selection for the hot path kernels.

The compiled extension is used when it imports; set ``GMEASURE_PURE_PYTHON=1``
to force the pure-Python fallback.
"""
import os

from . import _fallback

if os.environ.get("GMEASURE_PURE_PYTHON"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _fallback

linear_pair_path = _impl.linear_pair_path
table_pair_path = _impl.table_pair_path


def available_backends() -> dict:
    out = {"python": _fallback}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out
