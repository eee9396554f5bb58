"""Periodicity and grating-lobe analysis for multi-linear topologies.

A pair ``(theta, theta')`` is a period pair when every sub-array spacing ``d_i``
makes ``d_i (sin theta - sin theta')`` a non-zero integer and every leading
element ``(x_l, y_l)`` makes ``x_l (sin theta - sin theta') + y_l (cos theta - cos theta')``
an integer. For two equally spaced lines the pair exists only if

    (p/d)**2 + ((q d - p x21) / (d y21))**2 = 2 - 2 cos(theta - theta') <= 4

for some integers ``p != 0`` and ``q``; when the left side exceeds 4 for every
such ``(p, q)`` the pattern has no grating lobes at all.

Integer pairs ``(p, q)`` and ``(-p, -q)`` give the same left side (they swap
``theta`` and ``theta'``), so enumeration is over ``p > 0``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .beampattern import main_lobe_bounds, pattern_sweep
from .errors import DegenerateGeometryError, InvalidArgumentError
from .geometry import MultiLinearTopology, _as_layout

__all__ = [
    "PeriodPair",
    "C3Witness",
    "C3Report",
    "DEFAULT_TOL",
    "c1_residual",
    "c2_residual",
    "is_period_pair",
    "c3_lhs",
    "c3_candidates",
    "c3_check",
    "c3_y21_threshold",
    "period_angles",
    "period_pairs",
    "rational_spacing_precheck",
    "scan_grating_lobes",
    "scan_all_steer_angles",
    "write_scan_csv",
]

DEFAULT_TOL = 1e-9


class PeriodPair(NamedTuple):
    theta: float
    theta_image: float
    p: int
    q: int


class C3Witness(NamedTuple):
    p: int
    q: int
    lhs: float


@dataclass
class C3Report:
    verdict: str  # "strict" | "boundary" | "violated"
    witnesses: list[C3Witness]
    search_bounds: tuple[int, dict[int, tuple[int, int]]]
    y21_threshold: float = field(default=math.nan)

    def to_dict(self) -> dict:
        thr = self.y21_threshold
        return {
            "verdict": self.verdict,
            "witnesses": [{"p": w.p, "q": w.q, "lhs": w.lhs} for w in self.witnesses],
            "y21_threshold": "unconstrained (d < lambda/2)" if math.isinf(thr) else thr,
            "search_bounds": {
                "p_max": self.search_bounds[0],
                "q_range": {str(p): list(r) for p, r in self.search_bounds[1].items()},
            },
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _nearest(v):
    k = round(v)
    return v - k, int(k)


def c1_residual(d: float, theta: float, theta_image: float) -> tuple[float, int]:
    """``v = d (sin theta - sin theta')``; returns ``(v - round(v), round(v))``."""
    if not d > 0:
        raise InvalidArgumentError(f"spacing d must be > 0, got {d}")
    return _nearest(d * (math.sin(theta) - math.sin(theta_image)))


def c2_residual(leading: Sequence[float], theta: float, theta_image: float) -> tuple[float, int]:
    x, y = leading
    return _nearest(
        x * (math.sin(theta) - math.sin(theta_image)) + y * (math.cos(theta) - math.cos(theta_image))
    )


def is_period_pair(t: MultiLinearTopology, theta: float, theta_image: float, tol: float = DEFAULT_TOL) -> bool:
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be > 0, got {tol}")
    if theta_image == theta:
        return False
    for d in t.spacings:
        res, k = c1_residual(d, theta, theta_image)
        if abs(res) > tol or k == 0:
            return False
    for sub in t.subarrays[1:]:
        res, _ = c2_residual(sub.leading, theta, theta_image)
        if abs(res) > tol:
            return False
    return True


def _check_dual(d, y21, tol=0.0):
    if not d > 0:
        raise InvalidArgumentError(f"spacing d must be > 0, got {d}")
    if tol < 0:
        raise InvalidArgumentError(f"tol must be >= 0, got {tol}")
    if y21 == 0:
        raise DegenerateGeometryError(
            "y21 = 0 puts both lines on one axis; analyse it as a single linear array"
        )


def c3_lhs(p: int, q: int, d: float, x21: float, y21: float) -> float:
    return (p / d) ** 2 + ((q * d - p * x21) / (d * y21)) ** 2


def c3_candidates(d: float, x21: float, y21: float, tol: float = DEFAULT_TOL):
    """Integer pairs ``(p > 0, q)`` for which the C3 left side can be ``<= 4 + tol``.

    Returns ``(pairs, bounds)`` with ``bounds = (p_max, {p: (q_lo, q_hi)})``.
    Outside these bounds one of the two squares alone exceeds ``4 + tol``.
    """
    _check_dual(d, y21, tol)
    lim = math.sqrt(4.0 + tol)
    p_max = math.floor(d * lim)
    radius = lim * d * abs(y21)
    pairs, q_bounds = [], {}
    for p in range(1, p_max + 1):
        q_lo = math.ceil((p * x21 - radius) / d)
        q_hi = math.floor((p * x21 + radius) / d)
        q_bounds[p] = (q_lo, q_hi)
        pairs.extend((p, q) for q in range(q_lo, q_hi + 1))
    return pairs, (p_max, q_bounds)


def c3_y21_threshold(d: float, x21: float, tol: float = DEFAULT_TOL) -> float:
    """Supremum of ``|y21|`` for which :func:`c3_check` (same ``tol``) reports ``strict``.

    Each ``p`` with ``(p/d)**2 < 4 + tol`` is bound by the ``q`` minimising
    ``|q d - p x21|``; the threshold is the smallest
    ``|q d - p x21| / (d sqrt(4 + tol - (p/d)**2))``. With ``tol = 0`` this is
    the exact supremum. Infinite when ``d < 1/2``; zero when some term has
    ``q d = p x21`` exactly.
    """
    if not d > 0:
        raise InvalidArgumentError(f"spacing d must be > 0, got {d}")
    if tol < 0:
        raise InvalidArgumentError(f"tol must be >= 0, got {tol}")
    best = math.inf
    p = 1
    while (p / d) ** 2 <= 4.0 + tol:
        k = p * x21 / d
        gap = min(abs(math.floor(k) * d - p * x21), abs(math.ceil(k) * d - p * x21))
        room = 4.0 + tol - (p / d) ** 2
        if room > 0:
            best = min(best, gap / (d * math.sqrt(room)))
        elif gap == 0:
            return 0.0
        p += 1
    return best


def c3_check(d: float, x21: float, y21: float, tol: float = DEFAULT_TOL) -> C3Report:
    """Enumerate the finite C3 candidate set and classify the geometry.

    ``strict``: every left side exceeds ``4 + tol`` (no grating lobes anywhere).
    ``boundary``: the minimum left side is 4 within ``tol``.
    ``violated``: some left side is below ``4 - tol``.
    """
    pairs, bounds = c3_candidates(d, x21, y21, tol)
    witnesses = []
    for p, q in pairs:
        lhs = c3_lhs(p, q, d, x21, y21)
        if lhs <= 4.0 + tol:
            witnesses.append(C3Witness(p, q, lhs))
    if not witnesses:
        verdict = "strict"
    elif min(w.lhs for w in witnesses) >= 4.0 - tol:
        verdict = "boundary"
    else:
        verdict = "violated"
    return C3Report(verdict, witnesses, bounds, c3_y21_threshold(d, x21, tol))


def _wrap(a):
    # into (-pi, pi]
    w = math.atan2(math.sin(a), math.cos(a))
    return math.pi if w == -math.pi else w


def period_pairs(d: float, x21: float, y21: float, tol: float = DEFAULT_TOL) -> list[PeriodPair]:
    """All angle pairs ``(theta, theta')`` on the full circle satisfying both dual-linear conditions.

    With ``v = (p/d, (q d - p x21)/(d y21))`` the unit vectors
    ``u(theta) = (sin theta, cos theta)`` must satisfy ``u(theta) - u(theta') = v``.
    Their midpoint is orthogonal to ``v`` with length ``sqrt(1 - |v|**2 / 4)``,
    giving two solutions for ``|v| < 2``, one at ``|v| = 2`` and none beyond.
    Both orientations ``(p, q)`` and ``(-p, -q)`` are reported.
    """
    pairs, _ = c3_candidates(d, x21, y21, tol)
    out = []
    for p, q in pairs:
        a = p / d
        b = (q * d - p * x21) / (d * y21)
        lhs = a * a + b * b
        if lhs > 4.0 + tol:
            continue
        half = math.sqrt(max(0.0, 1.0 - lhs / 4.0))
        norm = math.sqrt(lhs)
        perp = (-b / norm, a / norm)
        signs = (1.0,) if half == 0.0 else (1.0, -1.0)
        for sg in signs:
            mx, my = sg * half * perp[0], sg * half * perp[1]
            th = _wrap(math.atan2(mx + a / 2, my + b / 2))
            im = _wrap(math.atan2(mx - a / 2, my - b / 2))
            out.append(PeriodPair(th, im, p, q))
            out.append(PeriodPair(im, th, -p, -q))
    return sorted(out)


def period_angles(d: float, x21: float, y21: float, theta: float, tol: float = DEFAULT_TOL) -> list[PeriodPair]:
    """Images ``theta'`` of a fixed ``theta`` under the dual-linear period conditions.

    For each candidate ``(p, q)`` (both signs of ``p``) solves
    ``sin theta' = sin theta - p/d`` and ``cos theta' = cos theta - (q d - p x21)/(d y21)``
    and keeps the solutions lying on the unit circle within ``tol``.
    """
    pairs, _ = c3_candidates(d, x21, y21, tol)
    s0, c0 = math.sin(theta), math.cos(theta)
    out = []
    for p, q in pairs:
        for sp, sq in ((p, q), (-p, -q)):
            s = s0 - sp / d
            c = c0 - (sq * d - sp * x21) / (d * y21)
            if abs(math.hypot(s, c) - 1.0) <= tol:
                im = _wrap(math.atan2(s, c))
                if abs(_wrap(im - theta)) > tol:
                    out.append(PeriodPair(theta, im, sp, sq))
    return out


def rational_spacing_precheck(spacings: Sequence[float], max_denominator: int = 10**6, rtol: float = 1e-13) -> bool:
    """Whether every spacing ratio is (numerically) rational.

    Each ratio ``d_i/d_j`` is matched against its best continued-fraction
    approximation with denominator ``<= max_denominator``; ``False`` means
    some ratio is irrational, which rules out grating lobes.

    ``rtol`` must sit well below ``1 / max_denominator**2``: any real number has
    approximations with error ``< 1/(q * max_denominator)``, so a loose
    tolerance accepts irrationals such as sqrt(2).
    """
    if int(max_denominator) != max_denominator or max_denominator < 1:
        raise InvalidArgumentError(f"max_denominator must be an integer >= 1, got {max_denominator}")
    ds = [float(d) for d in spacings]
    if any(not d > 0 for d in ds):
        raise InvalidArgumentError("spacings must be positive")
    for di in ds:
        for dj in ds:
            r = di / dj
            approx = Fraction(r).limit_denominator(int(max_denominator))
            if abs(r - float(approx)) > rtol * abs(r):
                return False
    return True


def scan_grating_lobes(layout, theta_s: float, obs_grid, epsilon: float = 0.01, magnitudes=None) -> list[float]:
    """Observation angles outside the main lobe where ``|f| >= 1 - epsilon``.

    The main lobe is the interval between the first local minima of ``|f|`` on
    either side of the grid point nearest ``theta_s``.
    """
    if not 0 < epsilon < 1:
        raise InvalidArgumentError(f"epsilon must lie in (0, 1), got {epsilon}")
    obs = np.asarray(obs_grid, dtype=float)
    if obs.size < 3:
        raise InvalidArgumentError("observation grid needs at least 3 points to bracket the main lobe")
    row = pattern_sweep(layout, [theta_s], obs, magnitudes).magnitude[0]
    return _grating_from_row(row, obs, theta_s, epsilon)


def _grating_from_row(row, obs, theta_s, epsilon):
    k = int(np.argmin(np.abs(obs - theta_s)))
    lo, hi = main_lobe_bounds(row, k)
    mask = row >= 1.0 - epsilon
    mask[lo:hi + 1] = False
    return [float(a) for a in obs[mask]]


def scan_all_steer_angles(layout, steer_grid, obs_grid, epsilon: float = 0.01, magnitudes=None, threads=1):
    """Run the grating-lobe scan for every steering angle.

    Returns ``(pattern_grid, hits)`` where ``hits[i]`` lists grating-lobe angles
    for ``steer_grid[i]``.
    """
    if not 0 < epsilon < 1:
        raise InvalidArgumentError(f"epsilon must lie in (0, 1), got {epsilon}")
    obs = np.asarray(obs_grid, dtype=float)
    if obs.size < 3:
        raise InvalidArgumentError("observation grid needs at least 3 points to bracket the main lobe")
    grid = pattern_sweep(_as_layout(layout), steer_grid, obs, magnitudes, threads=threads)
    hits = [_grating_from_row(row, obs, s, epsilon) for s, row in zip(grid.steer_angles, grid.magnitude)]
    return grid, hits


def write_scan_csv(steer_grid, hits, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("theta_s_deg", "grating_angle_deg"))
        for s, angles in zip(steer_grid, hits):
            for a in angles:
                w.writerow((format(math.degrees(s), ".17g"), format(math.degrees(a), ".17g")))
