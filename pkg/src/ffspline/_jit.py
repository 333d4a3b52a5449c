"""JIT switch.  Set FFSPLINE_JIT=0 to force the pure-numpy kernels."""
import os

JIT_ENV = "FFSPLINE_JIT"

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


def jit_requested() -> bool:
    return os.environ.get(JIT_ENV, "1").strip().lower() not in ("0", "false", "no", "off")


JIT_ENABLED = HAVE_NUMBA and jit_requested()
