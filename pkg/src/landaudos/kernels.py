"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``LANDAUDOS_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the numpy implementation is used.  Both expose
``gc_table`` and ``field_matrix`` with identical semantics.
"""

import os

from . import _kernels_py

_force_python = os.environ.get("LANDAUDOS_PURE_PYTHON", "") not in ("", "0")

if _force_python:
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
gc_table = _impl.gc_table
field_matrix = _impl.field_matrix
python_backend = _kernels_py


def compiled_backend():
    """Return the compiled kernel module, or None when it is not built."""
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels
