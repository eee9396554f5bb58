"""Euclidean random matrices of disordered 3-D layouts and their limiting spectra.

For points ``r_i`` in a cube of side ``L`` the matrix has zero diagonal and
entries ``exp(-j k r) / (-k r)`` off the diagonal, ``k = 2 pi / lambda``. Its
real part (``cos(kr)/(-kr)``) and imaginary part (``sin(kr)/(kr)``) are real
symmetric. With ``beta = 2.8 N / (k L)**2``:

* the sinc part plus the identity follows Marcenko-Pastur with ratio ``beta`` (``beta < 1``);
* the cosine part follows a semicircle of variance ``beta`` when ``rho lambda**3 << 1`` and ``beta << 1``;
* the cosine part tends to a standard Cauchy law when ``rho lambda**3 << 1`` and ``beta >> 1``.
"""

from __future__ import annotations

import csv
import functools
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial import chebyshev

from . import _kernels
from .errors import DegenerateGeometryError, InvalidArgumentError, OutOfRegimeError

__all__ = [
    "CubeEnsemble",
    "RegimeDescriptor",
    "KernelPair",
    "SpectrumResult",
    "LimitingLaw",
    "MEMORY_WARN_N",
    "sample_cube",
    "regime",
    "build_kernels",
    "esd",
    "mp_density",
    "mp_cdf",
    "semicircle_density",
    "semicircle_cdf",
    "cauchy_density",
    "cauchy_cdf",
    "compare_esd",
    "spectrum",
    "default_law",
    "write_eigs_csv",
    "write_law_csv",
]

MEMORY_WARN_N = 4000
_SYM_TOL = 1e-12


@dataclass(frozen=True)
class CubeEnsemble:
    n: int
    side_m: float
    lambda_m: float
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidArgumentError(f"n must be an integer >= 2, got {self.n}")
        if not self.side_m > 0:
            raise InvalidArgumentError(f"side_m must be > 0, got {self.side_m}")
        if not self.lambda_m > 0:
            raise InvalidArgumentError(f"lambda_m must be > 0, got {self.lambda_m}")


@dataclass(frozen=True)
class RegimeDescriptor:
    beta: float
    rho_lambda3: float


@dataclass
class KernelPair:
    cosine_part: np.ndarray
    sinc_part: np.ndarray


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    part: str
    shift_applied: float
    regime: RegimeDescriptor


def sample_cube(e: CubeEnsemble) -> np.ndarray:
    """``N`` i.i.d. uniform points in ``[0, L]**3`` (meters), shape ``(N, 3)``."""
    rng = np.random.default_rng(e.seed)
    return rng.uniform(0.0, e.side_m, size=(e.n, 3))


def regime(e: CubeEnsemble) -> RegimeDescriptor:
    beta = 2.8 * e.n / (2.0 * math.pi * e.side_m / e.lambda_m) ** 2
    return RegimeDescriptor(beta, e.n * e.lambda_m**3 / e.side_m**3)


def build_kernels(positions, lambda_m: float) -> KernelPair:
    """Cosine and sinc parts of the Euclidean random matrix (zero diagonals)."""
    pts = np.asarray(positions, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise InvalidArgumentError(f"positions must have shape (N, 3), got {pts.shape}")
    if not lambda_m > 0:
        raise InvalidArgumentError(f"lambda_m must be > 0, got {lambda_m}")
    C, S, rmin = _kernels.kernel_pair(pts, 2.0 * math.pi / lambda_m)
    if rmin == 0.0:
        raise DegenerateGeometryError("two points coincide; the kernel is undefined at zero distance")
    return KernelPair(C, S)


def esd(matrix) -> np.ndarray:
    """Ascending eigenvalues of a real symmetric matrix (LAPACK ``syevd``)."""
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {A.shape}")
    scale = max(1.0, float(np.abs(A).max())) if A.size else 1.0
    if not np.allclose(A, A.T, rtol=0.0, atol=_SYM_TOL * scale):
        raise InvalidArgumentError("matrix is not symmetric")
    return np.linalg.eigvalsh(A)


def _mp_edges(beta):
    if not 0 < beta < 1:
        raise OutOfRegimeError(f"Marcenko-Pastur density needs 0 < beta < 1, got {beta}")
    rb = math.sqrt(beta)
    return (1.0 - rb) ** 2, (1.0 + rb) ** 2


def mp_density(x, beta: float):
    a, b = _mp_edges(beta)
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.sqrt(np.clip(x - a, 0, None) * np.clip(b - x, 0, None)) / (2.0 * math.pi * beta * x)
    d = np.where((x > a) & (x < b), d, 0.0)
    return float(d) if d.ndim == 0 else d


@functools.lru_cache(maxsize=32)
def _mp_cdf_series(beta):
    # x = c - h cos(phi) maps [0, pi] onto [a, b] and turns the density into
    # an analytic integrand in phi; integrating its Chebyshev interpolant
    # gives the CDF to near machine precision.
    a, b = _mp_edges(beta)
    c, h = (a + b) / 2.0, (b - a) / 2.0

    def integrand(phi):
        s = np.sin(phi)
        return (h * s) ** 2 / (2.0 * math.pi * beta * (c - h * np.cos(phi)))

    series = chebyshev.Chebyshev.interpolate(integrand, 96, domain=[0.0, math.pi])
    return series.integ(lbnd=0.0), c, h


def mp_cdf(x, beta: float):
    a, b = _mp_edges(beta)
    cdf, c, h = _mp_cdf_series(float(beta))
    x = np.asarray(x, dtype=float)
    phi = np.arccos(np.clip((c - x) / h, -1.0, 1.0))
    out = np.where(x <= a, 0.0, np.where(x >= b, 1.0, np.clip(cdf(phi), 0.0, 1.0)))
    return float(out) if out.ndim == 0 else out


def semicircle_density(x, beta: float):
    """Semicircle of variance ``beta``: ``sqrt(4 beta - x**2) / (2 pi beta)`` on ``|x| <= 2 sqrt(beta)``."""
    if not beta > 0:
        raise InvalidArgumentError(f"beta must be > 0, got {beta}")
    x = np.asarray(x, dtype=float)
    d = np.sqrt(np.clip(4.0 * beta - x**2, 0, None)) / (2.0 * math.pi * beta)
    return float(d) if d.ndim == 0 else d


def semicircle_cdf(x, beta: float):
    if not beta > 0:
        raise InvalidArgumentError(f"beta must be > 0, got {beta}")
    R = 2.0 * math.sqrt(beta)
    u = np.clip(np.asarray(x, dtype=float) / R, -1.0, 1.0)
    out = 0.5 + (u * np.sqrt(1.0 - u**2) + np.arcsin(u)) / math.pi
    return float(out) if out.ndim == 0 else out


def cauchy_density(x):
    x = np.asarray(x, dtype=float)
    d = 1.0 / (math.pi * (1.0 + x**2))
    return float(d) if d.ndim == 0 else d


def cauchy_cdf(x):
    out = 0.5 + np.arctan(np.asarray(x, dtype=float)) / math.pi
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class LimitingLaw:
    """One of ``mp(beta)``, ``semicircle(beta)`` or ``cauchy``."""

    kind: str
    beta: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("mp", "semicircle", "cauchy"):
            raise InvalidArgumentError(f"unknown law {self.kind!r}")
        if self.kind == "mp":
            _mp_edges(self.beta if self.beta is not None else math.nan)
        elif self.kind == "semicircle" and not (self.beta is not None and self.beta > 0):
            raise InvalidArgumentError("semicircle law needs beta > 0")

    def pdf(self, x):
        if self.kind == "mp":
            return mp_density(x, self.beta)
        if self.kind == "semicircle":
            return semicircle_density(x, self.beta)
        return cauchy_density(x)

    def cdf(self, x):
        if self.kind == "mp":
            return mp_cdf(x, self.beta)
        if self.kind == "semicircle":
            return semicircle_cdf(x, self.beta)
        return cauchy_cdf(x)

    def support(self) -> tuple[float, float]:
        """Bounded support, or ``[-10, 10]`` as the plotting window for Cauchy."""
        if self.kind == "mp":
            return _mp_edges(self.beta)
        if self.kind == "semicircle":
            R = 2.0 * math.sqrt(self.beta)
            return -R, R
        return -10.0, 10.0

    def curve(self, points: int = 500):
        lo, hi = self.support()
        pad = 0.1 * (hi - lo)
        x = np.linspace(lo - pad, hi + pad, points)
        return x, self.pdf(x)


def compare_esd(eigs, law: LimitingLaw, bins: int = 100) -> tuple[float, float]:
    """Kolmogorov-Smirnov and histogram L1 distances between eigenvalues and ``law``.

    KS is the exact supremum of ``|F_emp - F_law|`` (checked on both sides of
    every jump). L1 compares bin masses on ``bins`` equal bins spanning the
    law's support padded by 10% on each side.
    """
    e = np.sort(np.asarray(eigs, dtype=float))
    n = e.size
    if n == 0:
        raise InvalidArgumentError("need at least one eigenvalue")
    F = law.cdf(e)
    ks = float(max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n)))
    lo, hi = law.support()
    pad = 0.1 * (hi - lo)
    edges = np.linspace(lo - pad, hi + pad, bins + 1)
    counts, _ = np.histogram(e, bins=edges)
    law_mass = np.diff(law.cdf(edges))
    l1 = float(np.abs(counts / n - law_mass).sum())
    return ks, l1


def spectrum(e: CubeEnsemble, part: str = "sinc", shift: Optional[float] = None, kernels: Optional[KernelPair] = None) -> SpectrumResult:
    """Sample the ensemble and return the sorted spectrum of one kernel part.

    The sinc part is shifted by +1 by default (restoring the unit diagonal the
    Marcenko-Pastur law refers to); the cosine part is left unshifted.
    """
    if part not in ("sinc", "cosine"):
        raise InvalidArgumentError(f"part must be 'sinc' or 'cosine', got {part!r}")
    if e.n > MEMORY_WARN_N:
        warnings.warn(f"N={e.n} builds two dense {e.n}x{e.n} matrices", ResourceWarning, stacklevel=2)
    if kernels is None:
        kernels = build_kernels(sample_cube(e), e.lambda_m)
    if shift is None:
        shift = 1.0 if part == "sinc" else 0.0
    A = kernels.sinc_part if part == "sinc" else kernels.cosine_part
    return SpectrumResult(esd(A) + shift, part, float(shift), regime(e))


def default_law(part: str, beta: float) -> LimitingLaw:
    return LimitingLaw("mp", beta) if part == "sinc" else LimitingLaw("semicircle", beta)


def write_eigs_csv(eigs, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("eigenvalue\n")
        for v in eigs:
            fh.write(format(float(v), ".17g") + "\n")


def write_law_csv(law: LimitingLaw, path, points: int = 500) -> None:
    x, d = law.curve(points)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("x", "density"))
        w.writerows((format(a, ".17g"), format(b, ".17g")) for a, b in zip(x, d))
