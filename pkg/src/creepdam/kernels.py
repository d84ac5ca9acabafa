"""Backend selection for the per-node integration kernel.

The compiled Cython module is used when it imports; otherwise (or when the
environment variable ``CREEPDAM_PURE_PYTHON`` is set to a non-empty value
other than ``0``) the numpy implementation is used. Both expose
``nodal_rates`` and ``integrate_nodes`` with identical contracts.
"""
import os

from . import _kernels_py

EULER = _kernels_py.EULER
RK4 = _kernels_py.RK4


def _load_compiled():
    if os.environ.get("CREEPDAM_PURE_PYTHON", "") not in ("", "0"):
        return None
    try:
        from . import _kernels_c
    except ImportError:
        return None
    return _kernels_c


_compiled = _load_compiled()
backend = _compiled if _compiled is not None else _kernels_py
BACKEND_NAME = "cython" if _compiled is not None else "python"

nodal_rates = backend.nodal_rates
integrate_nodes = backend.integrate_nodes


def compiled_available() -> bool:
    try:
        from . import _kernels_c  # noqa: F401
    except ImportError:
        return False
    return True
