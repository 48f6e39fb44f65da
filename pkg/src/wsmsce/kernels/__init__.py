"""Greedy-pursuit kernels with a compiled fast path.

At import time the package prefers the Cython extension ``_greedy`` (BLAS
backed loops for OMP, simultaneous OMP, and the 2D atom search) and falls
back to the pure-numpy reference implementation when the extension is
unavailable or ``WSMSCE_PURE_PYTHON=1`` is set.  Both backends implement
identical semantics; ``tests/test_kernels.py`` pins them against each other.
"""

import os

from . import _pure

PURE_ENV_VAR = "WSMSCE_PURE_PYTHON"


def _truthy(value):
    return value.strip().lower() in {"1", "true", "yes", "on"}


def _load():
    if _truthy(os.environ.get(PURE_ENV_VAR, "")):
        return _pure, "pure"
    try:
        from . import _greedy
    except ImportError:
        return _pure, "pure"
    return _greedy, "compiled"


_impl, BACKEND = _load()


def available_backends():
    """Names of the backends importable in this environment."""
    names = ["pure"]
    try:
        from . import _greedy  # noqa: F401
    except ImportError:
        return names
    return names + ["compiled"]


def get_backend(name):
    """Fetch a backend module by name (for benchmarks and parity tests)."""
    if name == "pure":
        return _pure
    if name == "compiled":
        from . import _greedy
        return _greedy
    raise ValueError(f"unknown backend {name!r}")


def use_backend(name):
    """Switch the active backend; returns the previous backend name."""
    global _impl, BACKEND
    previous = BACKEND
    _impl = get_backend(name)
    BACKEND = name
    return previous


def lstsq(a, b):
    return _impl.lstsq(a, b)


def omp_run(psi, y, sparsity, tol=None, squared=True):
    return _impl.omp_run(psi, y, sparsity, -1.0 if tol is None else float(tol), squared)


def omp_batch_run(psi, ymat, sparsity, tol=None, squared=True):
    return _impl.omp_batch_run(
        psi, ymat, sparsity, -1.0 if tol is None else float(tol), squared
    )


def somp_run(psi, ymat, sparsity, tol=None, squared=True):
    return _impl.somp_run(psi, ymat, sparsity, -1.0 if tol is None else float(tol), squared)


def pad2d_run(psi, ymat, factors, sparsity, tol=None, squared=True):
    return _impl.pad2d_run(
        psi, ymat, factors, sparsity, -1.0 if tol is None else float(tol), squared
    )
