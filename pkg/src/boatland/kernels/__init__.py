"""Hot per-pixel kernels with two interchangeable backends.

The compiled Cython extension is used when present; otherwise the
vectorized numpy fallback. Set BOATLAND_KERNELS=reference|native to force
one (the benchmark suite and the backend-parity tests use this).
"""

import os

import numpy as np

from boatland.kernels import reference as _reference

_forced = os.environ.get("BOATLAND_KERNELS", "").strip().lower()
_impl = None
if _forced in ("", "native"):
    try:
        from boatland.kernels import _native as _impl  # type: ignore
    except ImportError:
        if _forced == "native":
            raise ImportError(
                "BOATLAND_KERNELS=native but the compiled extension is not built"
            )
if _impl is None:
    _impl = _reference

BACKEND = _impl.BACKEND_NAME


def get_backend(name=None):
    """Return a backend module by name ('native' or 'reference')."""
    if name in (None, BACKEND):
        return _impl
    if name == "reference":
        return _reference
    if name == "native":
        from boatland.kernels import _native

        return _native
    raise ValueError(f"unknown kernel backend {name!r}")


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _u8(a):
    return np.ascontiguousarray(a, dtype=np.uint8)


def convolve2d(img, kernel):
    return _impl.convolve2d(_f64(img), _f64(kernel))


def window_sum(field, radius):
    return _impl.window_sum(_f64(field), int(radius))


def dilate(img, radius):
    return _impl.dilate(_u8(img), int(radius))


def erode(img, radius):
    return _impl.erode(_u8(img), int(radius))


def nms(mag, gx, gy):
    return _impl.nms(_f64(mag), _f64(gx), _f64(gy))


def hysteresis(strong, weak):
    return _impl.hysteresis(_u8(strong), _u8(weak))


def label8(img):
    return _impl.label8(_u8(img))


def fill_outside(img):
    return _impl.fill_outside(_u8(img))
