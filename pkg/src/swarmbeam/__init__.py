"""Swarm antenna array beamforming, grating-lobe conditions, perturbation
statistics and Euclidean random matrix spectra."""

__version__ = "0.1.0"

from ._kernels import BACKEND  # noqa: E402
