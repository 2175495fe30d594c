"""Hot kernels, compiled when available.

The Cython extension is used unless it failed to build or the environment
variable ``NOONSIM_PURE_PYTHON`` is set to a non-empty value.
"""
import os

from . import _permanent_py

python_permanent = _permanent_py.permanent

try:
    from . import _permanent_ext
except ImportError:  # extension not built
    _permanent_ext = None

compiled_permanent = _permanent_ext.permanent if _permanent_ext is not None else None

if compiled_permanent is not None and not os.environ.get("NOONSIM_PURE_PYTHON"):
    permanent = compiled_permanent
    BACKEND = "cython"
else:
    permanent = python_permanent
    BACKEND = "python"

__all__ = ["permanent", "python_permanent", "compiled_permanent", "BACKEND"]
