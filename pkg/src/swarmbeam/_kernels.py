"""Selects the compiled kernels when available, else the numpy fallback.

Set ``SWARMBEAM_PURE_PYTHON=1`` to force the fallback. ``BACKEND`` names the
active implementation (``"cython"`` or ``"python"``).
"""

import os

import numpy as np

from . import _core_py

if os.environ.get("SWARMBEAM_PURE_PYTHON", "") not in ("", "0"):
    _impl = _core_py
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _core_py

BACKEND = "python" if _impl is _core_py else "cython"


def _vec(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _split(w):
    w = np.asarray(w, dtype=np.complex128)
    return _vec(w.real), _vec(w.imag)


def array_factor(x, y, w, sin_o, cos_o, impl=None):
    """Unnormalized ``sum_n w_n exp(j 2 pi (x_n sin + y_n cos))`` for each observation angle."""
    impl = impl or _impl
    return impl.array_factor(_vec(x), _vec(y), *_split(w), _vec(sin_o), _vec(cos_o))


def weight_sum(mag, impl=None):
    """``sum(mag)`` reduced in the same order ``steered_factor`` uses, so steered cells divide to exactly 1."""
    impl = impl or _impl
    return impl.weight_sum(_vec(mag))


def steered_factor(x, y, mag, sin_s, cos_s, sin_o, cos_o, impl=None):
    """Unnormalized phase-compensated sums, shape ``(n_steer, n_obs)``."""
    impl = impl or _impl
    return impl.steered_factor(
        _vec(x), _vec(y), _vec(mag), _vec(sin_s), _vec(cos_s), _vec(sin_o), _vec(cos_o)
    )


def perturbed_factor(x, y, dx, dy, w, sin_o, cos_o, impl=None):
    """Unnormalized sums over displaced positions, one row per trial."""
    impl = impl or _impl
    dx = np.ascontiguousarray(dx, dtype=np.float64)
    dy = np.ascontiguousarray(dy, dtype=np.float64)
    return impl.perturbed_factor(_vec(x), _vec(y), dx, dy, *_split(w), _vec(sin_o), _vec(cos_o))


def kernel_pair(pts, wavenumber, impl=None):
    """Zero-diagonal ``cos(kr)/(-kr)`` and ``sin(kr)/(kr)`` matrices plus the minimum distance."""
    impl = impl or _impl
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    return impl.kernel_pair(pts, float(wavenumber))
