"""Integration-kernel backend selection.

The compiled Cython kernel is preferred when its extension module built;
otherwise the pure-Python twin is used.  Both expose the same
``integrate_interval`` signature and are numerically interchangeable (the
test suite checks them against each other), differing only in speed.
"""

from __future__ import annotations

from windward import _kernel_py

try:
    from windward import _kernel_cy
except ImportError:
    _kernel_cy = None

HAVE_COMPILED = _kernel_cy is not None

_DEFAULT = _kernel_cy if HAVE_COMPILED else _kernel_py

integrate_interval = _DEFAULT.integrate_interval


def backend_name() -> str:
    return _DEFAULT.BACKEND


def available_backends() -> list[str]:
    names = ["python"]
    if HAVE_COMPILED:
        names.insert(0, "compiled")
    return names


def resolve(backend: str = "auto"):
    """Return the integrate_interval implementation for a backend name.

    ``auto`` picks the compiled kernel when available; asking for
    ``compiled`` without the built extension is an error.
    """
    if backend == "auto":
        return _DEFAULT.integrate_interval
    if backend == "python":
        return _kernel_py.integrate_interval
    if backend == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError(
                "compiled kernel requested but the extension is not built; "
                "reinstall with Cython available or use backend='python'"
            )
        return _kernel_cy.integrate_interval
    raise ValueError(f"unknown backend {backend!r}")
