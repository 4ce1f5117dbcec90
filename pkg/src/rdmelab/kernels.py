"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``RDMELAB_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the pure-Python twin is used. Both expose ``ssa_batch``,
``bd_batch`` and ``neighbor_sum`` with identical signatures and results.
"""

import importlib
import os

from . import _pykernels

_force_python = os.environ.get("RDMELAB_PURE_PYTHON", "") not in ("", "0")

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

AVAILABLE = ("compiled", "python") if _ckernels is not None else ("python",)

if _ckernels is not None and not _force_python:
    BACKEND = "compiled"
    _impl = _ckernels
else:
    BACKEND = "python"
    _impl = _pykernels


def get_backend(name=None):
    """Return the kernel module called ``name`` (default: the active one)."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "compiled":
        if _ckernels is None:
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        return importlib.import_module("rdmelab._ckernels")
    raise ValueError(f"unknown backend {name!r}")


def ssa_batch(*args):
    return _impl.ssa_batch(*args)


def bd_batch(*args):
    return _impl.bd_batch(*args)


def neighbor_sum(*args):
    return _impl.neighbor_sum(*args)
