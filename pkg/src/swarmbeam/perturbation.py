"""Gaussian positional perturbations: closed-form statistics and Monte Carlo.

Variance of a complex quantity ``X`` is ``E|X|**2 - |E X|**2`` throughout.

At the steering angle the phase-compensated response depends only on the
displacements, and its mean and variance follow exactly from the Gaussian
characteristic function. Elsewhere the first-order fluctuation

    df(theta) = j 2 pi / sum|w| * sum_n w_n e^{j 2 pi (x_n sin + y_n cos)} (sin dx_n + cos dy_n)

is zero-mean Gaussian with variance ``(2 pi)**2 sum |w_n|**2 u^T S_n u / (sum |w_n|)**2``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .beampattern import _weights, response
from .errors import InvalidArgumentError
from .geometry import _as_layout

__all__ = [
    "PerturbationModel",
    "FluctuationStats",
    "sample_perturbation",
    "trial_rngs",
    "perturbed_response",
    "analytic_mean_steer",
    "analytic_var_steer",
    "linearized_fluctuation",
    "fluctuation_variance",
    "tail_bound",
    "monte_carlo_stats",
    "write_stats_csv",
]

_PSD_TOL = 1e-12
# trials evaluated per kernel call
_TRIAL_BLOCK = 2048


class PerturbationModel:
    """Independent zero-mean bivariate Gaussian displacement per element.

    Use :meth:`isotropic` for a shared ``sigma**2 I`` or :meth:`per_element`
    for explicit 2x2 covariances (wavelength**2 units).
    """

    def __init__(self, sigma: Optional[float] = None, covariances=None):
        if (sigma is None) == (covariances is None):
            raise InvalidArgumentError("give exactly one of sigma or covariances")
        self.sigma = None
        self.covariances = None
        self._factors = None
        if sigma is not None:
            sigma = float(sigma)
            if not (sigma >= 0 and math.isfinite(sigma)):
                raise InvalidArgumentError(f"sigma must be finite and >= 0, got {sigma}")
            self.sigma = sigma
        else:
            cov = np.array(covariances, dtype=float)
            if cov.ndim != 3 or cov.shape[1:] != (2, 2) or cov.shape[0] < 1:
                raise InvalidArgumentError(f"covariances must have shape (N, 2, 2), got {cov.shape}")
            if not np.all(np.isfinite(cov)):
                raise InvalidArgumentError("covariances must be finite")
            if not np.allclose(cov, cov.transpose(0, 2, 1), rtol=0, atol=_PSD_TOL):
                raise InvalidArgumentError("covariances must be symmetric")
            vals, vecs = np.linalg.eigh(cov)
            scale = np.maximum(np.abs(vals).max(axis=1), 1.0)
            if np.any(vals.min(axis=1) < -_PSD_TOL * scale):
                bad = int(np.argmax(vals.min(axis=1) < -_PSD_TOL * scale))
                raise InvalidArgumentError(f"covariance {bad} is not positive semidefinite")
            cov.setflags(write=False)
            self.covariances = cov
            # eigen factor handles singular PSD matrices where Cholesky fails
            self._factors = vecs * np.sqrt(np.clip(vals, 0.0, None))[:, None, :]

    @classmethod
    def isotropic(cls, sigma: float) -> "PerturbationModel":
        return cls(sigma=sigma)

    @classmethod
    def per_element(cls, covariances) -> "PerturbationModel":
        return cls(covariances=covariances)

    @property
    def is_isotropic(self) -> bool:
        return self.sigma is not None

    def check_size(self, n: int) -> None:
        if self.covariances is not None and self.covariances.shape[0] != n:
            raise InvalidArgumentError(
                f"model has {self.covariances.shape[0]} covariances, layout has {n} elements"
            )

    def projected_variance(self, theta: float, n: int) -> np.ndarray:
        """``u^T S_n u`` with ``u = (sin theta, cos theta)`` for each element."""
        self.check_size(n)
        if self.sigma is not None:
            return np.full(n, self.sigma**2)
        u = np.array([math.sin(theta), math.cos(theta)])
        return np.einsum("i,nij,j->n", u, self.covariances, u)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        self.check_size(n)
        z = rng.standard_normal((n, 2))
        if self.sigma is not None:
            return self.sigma * z
        return np.einsum("nij,nj->ni", self._factors, z)

    def __repr__(self):
        if self.sigma is not None:
            return f"PerturbationModel(sigma={self.sigma})"
        return f"PerturbationModel(N={self.covariances.shape[0]} covariances)"


def trial_rngs(seed: int, trials: int) -> list[np.random.Generator]:
    """One independent generator per trial, spawned from ``seed``."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(trials)]


def sample_perturbation(model: PerturbationModel, n_elements: int, seed) -> np.ndarray:
    """Displacements ``(dx, dy)`` per element, shape ``(N, 2)``; deterministic for a given seed."""
    if int(n_elements) != n_elements or n_elements < 1:
        raise InvalidArgumentError(f"n_elements must be an integer >= 1, got {n_elements}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return model.draw(rng, int(n_elements))


def _sample_array(layout, sample):
    s = np.asarray(sample, dtype=float)
    if s.shape != (len(layout), 2):
        raise InvalidArgumentError(f"sample shape {s.shape} does not match layout of {len(layout)} elements")
    return s


def perturbed_response(layout, w, sample, theta):
    """Response of the layout with each element displaced by ``sample``."""
    layout = _as_layout(layout)
    s = _sample_array(layout, sample)
    return response(layout.shifted(s), w, theta)


def _check_mags(magnitudes):
    mag = np.asarray(magnitudes, dtype=float)
    if mag.ndim != 1 or mag.size == 0 or not np.all(mag > 0):
        raise InvalidArgumentError("magnitudes must be a non-empty list of positive values")
    return mag


def analytic_mean_steer(model: PerturbationModel, magnitudes, theta_s: float) -> float:
    """Expected response at the steering angle (exact for Gaussian displacements)."""
    mag = _check_mags(magnitudes)
    q = model.projected_variance(theta_s, mag.size)
    return float((mag * np.exp(-2.0 * np.pi**2 * q)).sum() / mag.sum())


def analytic_var_steer(model: PerturbationModel, magnitudes, theta_s: float) -> float:
    mag = _check_mags(magnitudes)
    q = model.projected_variance(theta_s, mag.size)
    return float((mag**2 * -np.expm1(-4.0 * np.pi**2 * q)).sum() / mag.sum() ** 2)


def linearized_fluctuation(layout, w, sample, theta):
    """First-order change of the response caused by ``sample``."""
    layout = _as_layout(layout)
    w, norm = _weights(layout, w)
    s = _sample_array(layout, sample)
    st, ct = math.sin(theta), math.cos(theta)
    phasor = w * np.exp(2j * np.pi * (layout.x * st + layout.y * ct))
    return complex(2j * np.pi * (phasor * (st * s[:, 0] + ct * s[:, 1])).sum() / norm)


def _linearized_batch(layout, w, norm, deltas, theta):
    st, ct = math.sin(theta), math.cos(theta)
    phasor = w * np.exp(2j * np.pi * (layout.x * st + layout.y * ct))
    proj = st * deltas[..., 0] + ct * deltas[..., 1]
    return 2j * np.pi * (phasor * proj).sum(axis=-1) / norm


def fluctuation_variance(model: PerturbationModel, magnitudes, theta: float) -> float:
    mag = _check_mags(magnitudes)
    q = model.projected_variance(theta, mag.size)
    return float((2.0 * np.pi) ** 2 * (mag**2 * q).sum() / mag.sum() ** 2)


def tail_bound(t: float, n: int, sigma: float) -> float:
    """Sub-Gaussian bound on ``P(|df| >= t)`` for unit magnitudes and isotropic ``sigma``.

    Not clamped; values above 1 are vacuous.
    """
    if not t > 0 or n < 1 or not sigma > 0:
        raise InvalidArgumentError("tail_bound needs t > 0, n >= 1, sigma > 0")
    ratio = t / sigma
    return 2.0 * math.exp(-(ratio * ratio) * n / (2.0 * (2.0 * math.pi) ** 2))


@dataclass
class FluctuationStats:
    theta: float
    analytic_mean: complex
    analytic_variance: float
    mc_mean: complex
    mc_variance: float
    trials: int
    law: str  # "exact" at the steering angle, "linearized" elsewhere
    mean_abs_fluct: float
    mc_linear_variance: float
    tail_bound_at: Optional[list[tuple[float, float]]] = None


def draw_trials(model: PerturbationModel, n: int, trials: int, seed: int) -> np.ndarray:
    """Displacements for ``trials`` independent trials, shape ``(trials, N, 2)``."""
    return np.stack([model.draw(rng, n) for rng in trial_rngs(seed, trials)])


def monte_carlo_stats(layout, w, model: PerturbationModel, theta_grid: Sequence[float], trials: int = 500,
                      seed: int = 0, theta_s: float = 0.0, tail_t: Optional[Sequence[float]] = None,
                      return_samples: bool = False):
    """Monte Carlo statistics of the perturbed response on ``theta_grid``.

    Each trial draws from its own seed-derived generator and trials are
    reduced in a fixed order, so the result is a pure function of ``seed``.
    ``analytic_*`` use the exact steering-angle law where ``theta == theta_s``
    and the linearized law elsewhere (mean = unperturbed response).
    ``mean_abs_fluct`` is the sample mean of ``|f - f_perturbed|``;
    ``mc_linear_variance`` is the sample variance of the linearized fluctuation.

    When ``return_samples`` is set, also returns ``(perturbed, linearized)``
    arrays of shape ``(trials, len(theta_grid))``.
    """
    if int(trials) != trials or trials < 1:
        raise InvalidArgumentError(f"trials must be an integer >= 1, got {trials}")
    layout = _as_layout(layout)
    w, norm = _weights(layout, w)
    n = len(layout)
    model.check_size(n)
    th = np.asarray(theta_grid, dtype=float).ravel()
    mag = np.abs(w)
    rngs = trial_rngs(seed, int(trials))
    nominal = response(layout, w, th)

    pert = np.empty((trials, th.size), dtype=np.complex128)
    lin = np.empty((trials, th.size), dtype=np.complex128)
    for lo in range(0, trials, _TRIAL_BLOCK):
        block = np.stack([model.draw(r, n) for r in rngs[lo:lo + _TRIAL_BLOCK]])
        hi = lo + block.shape[0]
        pert[lo:hi] = _kernels.perturbed_factor(
            layout.x, layout.y, block[..., 0], block[..., 1], w, np.sin(th), np.cos(th)
        ) / norm
        for j, t in enumerate(th):
            lin[lo:hi, j] = _linearized_batch(layout, w, norm, block, t)

    stats = []
    for j, t in enumerate(th):
        col = pert[:, j]
        mc_mean = complex(col.mean())
        mc_var = float(np.mean(np.abs(col - mc_mean) ** 2))
        lcol = lin[:, j]
        lin_var = float(np.mean(np.abs(lcol - lcol.mean()) ** 2))
        if math.isclose(t, theta_s, rel_tol=0.0, abs_tol=1e-12):
            a_mean = complex(analytic_mean_steer(model, mag, t))
            a_var = analytic_var_steer(model, mag, t)
            law = "exact"
        else:
            a_mean = complex(nominal[j])
            a_var = fluctuation_variance(model, mag, t)
            law = "linearized"
        bounds = None
        if tail_t is not None and model.is_isotropic and model.sigma > 0:
            bounds = [(float(tt), min(1.0, tail_bound(tt, n, model.sigma))) for tt in tail_t]
        stats.append(FluctuationStats(
            theta=float(t), analytic_mean=a_mean, analytic_variance=a_var, mc_mean=mc_mean,
            mc_variance=mc_var, trials=int(trials), law=law,
            mean_abs_fluct=float(np.mean(np.abs(nominal[j] - col))),
            mc_linear_variance=lin_var, tail_bound_at=bounds,
        ))
    if return_samples:
        return stats, pert, lin
    return stats


def write_stats_csv(stats: Sequence[FluctuationStats], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("theta_deg", "analytic_mean_abs", "analytic_var", "mc_mean_abs", "mc_var", "mean_abs_fluct"))
        for s in stats:
            w.writerow(tuple(format(v, ".17g") for v in (
                math.degrees(s.theta), abs(s.analytic_mean), s.analytic_variance,
                abs(s.mc_mean), s.mc_variance, s.mean_abs_fluct,
            )))
