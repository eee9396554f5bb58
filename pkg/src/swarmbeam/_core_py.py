"""Numpy implementations of the hot kernels (fallback for ``swarmbeam._core``).

Reductions use ``ndarray.sum`` along the element axis, never BLAS, so results
are reproducible regardless of BLAS threading.
"""

import numpy as np

_TWO_PI = 2.0 * np.pi
# complex128 cells per temporary block: bounds peak memory at ~32 MB
_BLOCK_CELLS = 1 << 21


def _rows_per_block(cells_per_row):
    return max(1, _BLOCK_CELLS // max(1, cells_per_row))


def array_factor(x, y, w_re, w_im, sin_o, cos_o):
    w = w_re + 1j * w_im
    out = np.empty(len(sin_o), dtype=np.complex128)
    step = _rows_per_block(len(x))
    for lo in range(0, len(sin_o), step):
        sl = slice(lo, lo + step)
        ph = _TWO_PI * (np.multiply.outer(sin_o[sl], x) + np.multiply.outer(cos_o[sl], y))
        out[sl] = (w * np.exp(1j * ph)).sum(axis=-1)
    return out


def weight_sum(mag):
    # complex reduction groups terms like the steered sums do
    return float(mag.astype(np.complex128).sum().real)


def steered_factor(x, y, mag, sin_s, cos_s, sin_o, cos_o):
    out = np.empty((len(sin_s), len(sin_o)), dtype=np.complex128)
    step = _rows_per_block(len(sin_o) * len(x))
    for lo in range(0, len(sin_s), step):
        sl = slice(lo, lo + step)
        ds = sin_o[None, :] - sin_s[sl, None]
        dc = cos_o[None, :] - cos_s[sl, None]
        ph = _TWO_PI * (ds[..., None] * x + dc[..., None] * y)
        out[sl] = (mag * np.exp(1j * ph)).sum(axis=-1)
    return out


def perturbed_factor(x, y, dx, dy, w_re, w_im, sin_o, cos_o):
    w = w_re + 1j * w_im
    out = np.empty((dx.shape[0], len(sin_o)), dtype=np.complex128)
    step = _rows_per_block(len(sin_o) * len(x))
    for lo in range(0, dx.shape[0], step):
        sl = slice(lo, lo + step)
        px = (x + dx[sl])[:, None, :]
        py = (y + dy[sl])[:, None, :]
        ph = _TWO_PI * (px * sin_o[None, :, None] + py * cos_o[None, :, None])
        out[sl] = (w * np.exp(1j * ph)).sum(axis=-1)
    return out


def kernel_pair(pts, wavenumber):
    n = pts.shape[0]
    C = np.zeros((n, n))
    S = np.zeros((n, n))
    rmin = np.inf
    step = _rows_per_block(n)
    for lo in range(0, n, step):
        sl = slice(lo, lo + step)
        # (p_i - p_j)**2 == (p_j - p_i)**2 bitwise, so the blocks stay exactly symmetric
        r = np.sqrt(((pts[sl, None, :] - pts[None, :, :]) ** 2).sum(axis=-1))
        rows = np.arange(lo, min(lo + step, n))
        r[rows - lo, rows] = np.inf
        if r.size:
            rmin = min(rmin, float(r.min()))
        kr = wavenumber * r
        zero = kr == 0.0
        safe = np.where(zero, 1.0, kr)
        with np.errstate(invalid="ignore"):
            C[sl] = np.where(zero | np.isinf(kr), 0.0, np.cos(safe) / -safe)
            S[sl] = np.where(zero | np.isinf(kr), 0.0, np.sin(safe) / safe)
    return C, S, rmin
