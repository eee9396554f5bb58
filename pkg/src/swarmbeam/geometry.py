"""Planar array layouts, multi-linear topologies and far-field distances.

All coordinates are in wavelength units (x/lambda, y/lambda). Angles are in
radians, measured from the +y axis, so a direction is ``(sin(theta), cos(theta))``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import InvalidArgumentError

__all__ = [
    "Position2D",
    "LinearSubarray",
    "MultiLinearTopology",
    "ArrayLayout",
    "FarFieldQuery",
    "DuplicatePositionWarning",
    "exact_distance",
    "far_field_distance",
    "expand_topology",
    "dual_linear",
    "equilateral_dual",
    "read_layout_csv",
    "write_layout_csv",
]

LAYOUT_CSV_HEADER = ("index", "x_wavelengths", "y_wavelengths")


class DuplicatePositionWarning(UserWarning):
    """Two or more elements of a layout share a position."""


def _check_finite(name, *values):
    for v in values:
        if not math.isfinite(v):
            raise InvalidArgumentError(f"{name} must be finite, got {v!r}")


class Position2D(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class LinearSubarray:
    """Uniform line of ``count`` elements parallel to the x-axis."""

    leading: Position2D
    spacing_d: float
    count: int

    def __post_init__(self):
        object.__setattr__(self, "leading", Position2D(float(self.leading[0]), float(self.leading[1])))
        _check_finite("leading position", *self.leading)
        _check_finite("spacing_d", self.spacing_d)
        if self.spacing_d <= 0:
            raise InvalidArgumentError(f"spacing_d must be > 0, got {self.spacing_d}")
        if int(self.count) != self.count or self.count < 1:
            raise InvalidArgumentError(f"count must be an integer >= 1, got {self.count}")
        object.__setattr__(self, "count", int(self.count))


@dataclass(frozen=True)
class MultiLinearTopology:
    """Ordered sub-arrays; the first one is anchored at the origin."""

    subarrays: tuple[LinearSubarray, ...]

    def __post_init__(self):
        subs = tuple(self.subarrays)
        if not subs:
            raise InvalidArgumentError("a topology needs at least one sub-array")
        if tuple(subs[0].leading) != (0.0, 0.0):
            raise InvalidArgumentError(
                f"sub-array 1 must lead at the origin, got {tuple(subs[0].leading)}"
            )
        object.__setattr__(self, "subarrays", subs)

    @property
    def n_elements(self) -> int:
        return sum(s.count for s in self.subarrays)

    @property
    def spacings(self) -> list[float]:
        return [s.spacing_d for s in self.subarrays]


class ArrayLayout:
    """An ordered set of planar element positions, stored as an ``(N, 2)`` array."""

    def __init__(self, positions):
        pts = np.array(positions, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InvalidArgumentError(f"positions must have shape (N, 2), got {pts.shape}")
        if pts.shape[0] < 1:
            raise InvalidArgumentError("a layout needs at least one element")
        if not np.all(np.isfinite(pts)):
            raise InvalidArgumentError("positions must be finite")
        pts.setflags(write=False)
        self._pts = pts
        if len(np.unique(pts, axis=0)) < len(pts):
            warnings.warn("layout contains duplicate positions", DuplicatePositionWarning, stacklevel=2)

    @property
    def positions(self) -> np.ndarray:
        return self._pts

    @property
    def x(self) -> np.ndarray:
        return self._pts[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self._pts[:, 1]

    def __len__(self):
        return self._pts.shape[0]

    def __iter__(self):
        return (Position2D(float(x), float(y)) for x, y in self._pts)

    def __getitem__(self, i):
        x, y = self._pts[i]
        return Position2D(float(x), float(y))

    def __repr__(self):
        return f"ArrayLayout(N={len(self)})"

    def shifted(self, deltas) -> "ArrayLayout":
        """Return a new layout with every element displaced by ``deltas`` (shape ``(N, 2)`` or ``(2,)``)."""
        d = np.asarray(deltas, dtype=float)
        if d.shape not in ((2,), self._pts.shape):
            raise InvalidArgumentError(f"deltas shape {d.shape} does not match layout {self._pts.shape}")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DuplicatePositionWarning)
            return ArrayLayout(self._pts + d)


@dataclass(frozen=True)
class FarFieldQuery:
    r: float
    theta: float

    def __post_init__(self):
        _check_finite("far-field query", self.r, self.theta)
        if self.r <= 0:
            raise InvalidArgumentError(f"reference distance r must be > 0, got {self.r}")


def exact_distance(q: FarFieldQuery, p: Sequence[float]) -> float:
    """Distance from element ``p`` to the point at range ``q.r`` in direction ``q.theta``."""
    x, y = float(p[0]), float(p[1])
    _check_finite("position", x, y)
    return math.hypot(q.r * math.sin(q.theta) - x, q.r * math.cos(q.theta) - y)


def far_field_distance(q: FarFieldQuery, p: Sequence[float]) -> float:
    """First-order (plane-wave) approximation ``r - (x sin(theta) + y cos(theta))``.

    The dropped term is ``(x**2 + y**2 - (x sin + y cos)**2) / (2 r)``, so the
    absolute error decays like ``|p|**2 / r``.
    """
    x, y = float(p[0]), float(p[1])
    _check_finite("position", x, y)
    return q.r - (x * math.sin(q.theta) + y * math.cos(q.theta))


def expand_topology(t: MultiLinearTopology) -> ArrayLayout:
    """Element positions, sub-array-major then index-major."""
    pts = []
    for sub in t.subarrays:
        x0, y0 = sub.leading
        pts.extend((x0 + n * sub.spacing_d, y0) for n in range(sub.count))
    return ArrayLayout(pts)


def dual_linear(d: float, x21: float, y21: float, n1: int, n2: int) -> MultiLinearTopology:
    """Two parallel lines with common spacing ``d``; line 2 leads at ``(x21, y21)``."""
    if not d > 0:
        raise InvalidArgumentError(f"spacing d must be > 0, got {d}")
    return MultiLinearTopology(
        (
            LinearSubarray(Position2D(0.0, 0.0), d, n1),
            LinearSubarray(Position2D(x21, y21), d, n2),
        )
    )


def equilateral_dual(d: float, n1: int, n2: int) -> MultiLinearTopology:
    """Dual-linear topology whose three leading elements form an equilateral triangle of side ``d``."""
    if not d > 0:
        raise InvalidArgumentError(f"spacing d must be > 0, got {d}")
    return dual_linear(d, d / 2.0, d * math.sqrt(3.0) / 2.0, n1, n2)


def write_layout_csv(layout: ArrayLayout, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LAYOUT_CSV_HEADER)
        for i, (x, y) in enumerate(layout.positions):
            w.writerow((i, format(x, ".17g"), format(y, ".17g")))


def read_layout_csv(path, scale: float = 1.0) -> ArrayLayout:
    """Read a layout CSV; ``scale`` converts file units to wavelengths (``1/lambda`` for meters)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(c.strip() for c in rows[0]) != LAYOUT_CSV_HEADER:
        raise InvalidArgumentError(f"{path}: expected header {','.join(LAYOUT_CSV_HEADER)}")
    body = [r for r in rows[1:] if r]
    indices = [int(r[0]) for r in body]
    if indices != list(range(len(body))):
        raise InvalidArgumentError(f"{path}: index column must run 0..N-1 in order")
    return ArrayLayout([(float(r[1]) * scale, float(r[2]) * scale) for r in body])


def _as_layout(obj: ArrayLayout | Iterable) -> ArrayLayout:
    if isinstance(obj, ArrayLayout):
        return obj
    if isinstance(obj, MultiLinearTopology):
        return expand_topology(obj)
    return ArrayLayout(obj)
