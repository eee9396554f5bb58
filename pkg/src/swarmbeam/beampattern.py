"""Normalized far-field array response and phase-compensation steering.

The response of a layout with weights ``w`` in direction ``theta`` is

    f(theta) = sum_n w_n exp(j 2 pi (x_n sin(theta) + y_n cos(theta))) / sum_n |w_n|

so ``|f| <= 1`` everywhere. Weight vectors are plain complex numpy arrays
aligned by index with the layout.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import InvalidArgumentError
from .geometry import ArrayLayout, MultiLinearTopology, _as_layout

__all__ = [
    "PatternGrid",
    "angle_grid",
    "steering_weights",
    "response",
    "multilinear_response",
    "pattern_sweep",
    "main_lobe_bounds",
    "write_pattern_csv",
]


def angle_grid(count: int, lo: float = -math.pi / 2, hi: float = math.pi / 2) -> np.ndarray:
    """``count`` uniformly spaced angles from ``lo`` to ``hi`` inclusive."""
    if int(count) != count or count < 1:
        raise InvalidArgumentError(f"grid count must be a positive integer, got {count}")
    if count == 1:
        return np.array([lo], dtype=float)
    return np.linspace(lo, hi, int(count))


def _magnitudes(n, magnitudes):
    if magnitudes is None:
        return np.ones(n)
    mag = np.asarray(magnitudes, dtype=float)
    if mag.shape != (n,):
        raise InvalidArgumentError(f"expected {n} magnitudes, got shape {mag.shape}")
    if not np.all(mag > 0) or not np.all(np.isfinite(mag)):
        raise InvalidArgumentError("weight magnitudes must be finite and > 0")
    return mag


def _weights(layout, w):
    w = np.asarray(w, dtype=np.complex128)
    if w.shape != (len(layout),):
        raise InvalidArgumentError(f"weight vector has shape {w.shape}, layout has {len(layout)} elements")
    norm = np.abs(w).sum()
    if not norm > 0:
        raise InvalidArgumentError("weights must have sum |w_n| > 0")
    return w, norm


def steering_weights(layout, theta_s: float, magnitudes: Optional[Sequence[float]] = None) -> np.ndarray:
    """Phase-compensation weights ``|w_n| exp(-j 2 pi (x_n sin(theta_s) + y_n cos(theta_s)))``.

    Parameters
    ----------
    layout : ArrayLayout or MultiLinearTopology
    theta_s : float
        Steering angle in radians.
    magnitudes : sequence of float, optional
        Per-element ``|w_n|``; all ones when omitted (uniform excitation).

    Returns
    -------
    ndarray of complex128, shape (N,)
    """
    layout = _as_layout(layout)
    mag = _magnitudes(len(layout), magnitudes)
    phase = 2.0 * np.pi * (layout.x * math.sin(theta_s) + layout.y * math.cos(theta_s))
    return mag * np.exp(-1j * phase)


def response(layout, w, theta):
    """Normalized array response at ``theta`` (scalar or array of angles)."""
    layout = _as_layout(layout)
    w, norm = _weights(layout, w)
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    out = _kernels.array_factor(layout.x, layout.y, w, np.sin(th), np.cos(th)) / norm
    return complex(out[0]) if np.ndim(theta) == 0 else out.reshape(np.shape(theta))


def multilinear_response(t: MultiLinearTopology, w, theta):
    """Response evaluated in the factored per-sub-array form.

    Each line contributes its leading-element phasor times a harmonic sum in
    ``d_m sin(theta)``. Numerically equivalent to ``response(expand_topology(t), w, theta)``.
    """
    w = np.asarray(w, dtype=np.complex128)
    if w.shape != (t.n_elements,):
        raise InvalidArgumentError(f"weight vector has shape {w.shape}, topology has {t.n_elements} elements")
    norm = np.abs(w).sum()
    if not norm > 0:
        raise InvalidArgumentError("weights must have sum |w_n| > 0")
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    s, c = np.sin(th), np.cos(th)
    total = np.zeros(th.shape, dtype=np.complex128)
    start = 0
    for sub in t.subarrays:
        wm = w[start:start + sub.count]
        start += sub.count
        n = np.arange(sub.count)
        harmonic = (wm * np.exp(2j * np.pi * np.multiply.outer(s, n) * sub.spacing_d)).sum(axis=-1)
        x0, y0 = sub.leading
        total += np.exp(2j * np.pi * (x0 * s + y0 * c)) * harmonic
    total /= norm
    return complex(total[0]) if np.ndim(theta) == 0 else total.reshape(np.shape(theta))


@dataclass
class PatternGrid:
    """Magnitudes indexed ``[steer][obs]``; ``complex_values`` kept only on request."""

    steer_angles: np.ndarray
    obs_angles: np.ndarray
    magnitude: np.ndarray
    complex_values: Optional[np.ndarray] = None


def _check_grid(name, grid):
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise InvalidArgumentError(f"{name} must be a non-empty 1-D grid")
    if g.size > 1 and not np.all(np.diff(g) > 0):
        raise InvalidArgumentError(f"{name} must be strictly increasing")
    return g


def pattern_sweep(layout, steer_grid, obs_grid, magnitudes=None, keep_complex=False, threads=1) -> PatternGrid:
    """Steered pattern for every ``(steer, obs)`` pair.

    Rows are split across ``threads`` workers; each cell is an independent
    sequential sum, so the output does not depend on the thread count.
    """
    layout = _as_layout(layout)
    st = _check_grid("steer grid", steer_grid)
    ob = _check_grid("observation grid", obs_grid)
    mag = _magnitudes(len(layout), magnitudes)
    sin_s, cos_s, sin_o, cos_o = np.sin(st), np.cos(st), np.sin(ob), np.cos(ob)

    def rows(sl):
        return _kernels.steered_factor(layout.x, layout.y, mag, sin_s[sl], cos_s[sl], sin_o, cos_o)

    threads = max(1, int(threads))
    if threads == 1 or len(st) == 1:
        values = rows(slice(None))
    else:
        bounds = np.linspace(0, len(st), min(threads, len(st)) + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(rows, [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]))
        values = np.concatenate(parts, axis=0)
    # real division keeps the on-steer cells at exactly 1 (complex division may not)
    norm = _kernels.weight_sum(mag)
    values.real /= norm
    values.imag /= norm
    return PatternGrid(st, ob, np.abs(values), values if keep_complex else None)


def main_lobe_bounds(row: np.ndarray, peak_index: int) -> tuple[int, int]:
    """Indices of the first local minima of ``row`` on either side of ``peak_index``.

    Walks outward while the magnitude strictly decreases; the grid ends bound
    the lobe when no minimum is reached.
    """
    lo = hi = int(peak_index)
    while lo > 0 and row[lo - 1] < row[lo]:
        lo -= 1
    while hi < len(row) - 1 and row[hi + 1] < row[hi]:
        hi += 1
    return lo, hi


def write_pattern_csv(grid: PatternGrid, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("theta_s_deg", "theta_deg", "magnitude"))
        obs_deg = np.degrees(grid.obs_angles)
        for s_deg, row in zip(np.degrees(grid.steer_angles), grid.magnitude):
            s_txt = format(s_deg, ".17g")
            w.writerows((s_txt, format(o, ".17g"), format(m, ".17g")) for o, m in zip(obs_deg, row))
