"""Select the compiled kernel backend, falling back to numpy.

Set ``QALSEARCH_BACKEND=python`` to force the fallback.
"""
import os

from . import _pure

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

if _core is not None and os.environ.get("QALSEARCH_BACKEND", "").lower() != "python":
    impl = _core
    BACKEND = "cython"
else:
    impl = _pure
    BACKEND = "python"

OP_H, OP_RY, OP_RZ, OP_CX = _pure.OP_H, _pure.OP_RY, _pure.OP_RZ, _pure.OP_CX


def available():
    """Names and modules of every backend importable in this process."""
    out = {"python": _pure}
    if _core is not None:
        out["cython"] = _core
    return out


class use_backend:
    """Temporarily route all kernels through the named backend.

    Not thread-safe; meant for tests and benchmarks.
    """

    def __init__(self, name):
        backends = available()
        if name not in backends:
            raise ValueError(f"backend {name!r} unavailable; have {sorted(backends)}")
        self.name = name
        self.module = backends[name]

    def __enter__(self):
        global impl, BACKEND
        self._saved = impl, BACKEND
        impl, BACKEND = self.module, self.name
        return self.module

    def __exit__(self, *exc):
        global impl, BACKEND
        impl, BACKEND = self._saved
