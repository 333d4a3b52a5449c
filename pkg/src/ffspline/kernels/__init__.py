"""Hot loops with a numba implementation and a pure-numpy twin.

The numba path is used unless FFSPLINE_JIT=0 is set (or numba is missing).
Both backends take the same arguments and return the same values; callers
normally go through :func:`space_args` to build the point-arithmetic tables.
"""
from types import ModuleType

import numpy as np

from .._jit import JIT_ENABLED, HAVE_NUMBA
from ..errors import FieldError
from . import _numpy

if JIT_ENABLED:
    from . import _numba as _active

    BACKEND = "numba"
else:
    _active = _numpy
    BACKEND = "numpy"

_EMPTY = np.zeros((0, 0), dtype=np.int64)


def get_backend(name: str | None = None) -> ModuleType:
    if name is None:
        return _active
    if name == "numpy":
        return _numpy
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba is not installed")
        from . import _numba

        return _numba
    raise ValueError(f"unknown kernel backend {name!r}")


def space_args(space):
    """(tab, fadd, q, n) as consumed by every kernel."""
    tab = space.add_table
    if tab is not None:
        return np.ascontiguousarray(tab, dtype=np.int64), np.zeros((1, 1), dtype=np.int64), space.q, space.n
    fadd = space.field.add_table
    if fadd is None:
        raise FieldError("kernels need q <= 1024 or |V| <= 2048")
    return _EMPTY, np.ascontiguousarray(fadd, dtype=np.int64), space.q, space.n


def cube_scan(mask, vals, N, m, anchors, space, backend=None):
    tab, fadd, q, n = space_args(space)
    mod = get_backend(backend)
    total, bad = mod.cube_scan(
        np.ascontiguousarray(mask, dtype=np.bool_),
        np.ascontiguousarray(vals, dtype=np.int64),
        int(N), int(m), np.ascontiguousarray(anchors, dtype=np.int64),
        tab, fadd, q, n,
    )
    return int(total), int(bad)


def almost_cube_eval(mask, vals, N, anchors, vs, space, backend=None):
    tab, fadd, q, n = space_args(space)
    mod = get_backend(backend)
    vs = np.ascontiguousarray(vs, dtype=np.int64)
    anchors = np.ascontiguousarray(np.broadcast_to(anchors, (vs.shape[0],)), dtype=np.int64)
    return mod.almost_cube_eval(
        np.ascontiguousarray(mask, dtype=np.bool_),
        np.ascontiguousarray(vals, dtype=np.int64),
        int(N), anchors, vs, tab, fadd, q, n,
    )


def pattern_count(mask, coefs, shifts, space, backend=None):
    tab, fadd, q, n = space_args(space)
    p = space.field.p
    pts = space.points()
    mult = np.stack([space.int_mul(c, pts) for c in range(p)]).astype(np.int64)
    mod = get_backend(backend)
    coefs = np.asarray(coefs, dtype=np.int64) % p
    return int(mod.pattern_count(
        np.ascontiguousarray(mask, dtype=np.bool_),
        np.ascontiguousarray(coefs.reshape(len(coefs), -1)),
        np.ascontiguousarray(shifts, dtype=np.int64),
        mult, tab, fadd, q, n,
    ))


def gowers_power(vals, m, space, backend=None):
    tab, fadd, q, n = space_args(space)
    mod = get_backend(backend)
    return float(mod.gowers_power(np.ascontiguousarray(vals, dtype=np.complex128), int(m), tab, fadd, q, n))
