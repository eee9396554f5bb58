"""Experiment configuration: INI-style sections, strict key checking, presets.

Grammar: ``[section]`` headers followed by ``key = value`` lines; ``#`` and
``;`` start comments. Angles are in degrees, lengths in wavelengths unless a
key name says ``_m`` (meters). Unknown sections or keys are errors.

Sections and keys
-----------------
[run]           threads
[topology]      kind = dual | equilateral | multilinear | explicit-csv
                units = wavelengths | meters, lambda_m (required for meters)
                dual: d, x21, y21, n1, n2     equilateral: d, n1, n2
                multilinear: subarrays = "x, y, d, count; x, y, d, count; ..."
                explicit-csv: path
[sweep]         steer_count, obs_count, fov_deg = "lo, hi", epsilon
[perturbation]  sigma_wavelengths | covariance_file, trials, seed, steer_deg,
                obs_count | obs_deg = "a, b, ...", element_counts = "n, n, ..."
[spectrum]      n, side_m, lambda_m, seed, part = sinc | cosine | both, shift = auto | <float>
"""

from __future__ import annotations

import configparser
import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, InvalidArgumentError
from .geometry import (
    ArrayLayout,
    LinearSubarray,
    MultiLinearTopology,
    Position2D,
    dual_linear,
    equilateral_dual,
    expand_topology,
    read_layout_csv,
)
from .perturbation import PerturbationModel
from .randmatrix import CubeEnsemble

__all__ = ["load_config", "parse_config", "PRESETS", "build_topology", "resolve"]

SCHEMA = {
    "run": {"threads"},
    "topology": {"kind", "units", "lambda_m", "d", "x21", "y21", "n1", "n2", "subarrays", "path"},
    "sweep": {"steer_count", "obs_count", "fov_deg", "epsilon"},
    "perturbation": {
        "sigma_wavelengths", "covariance_file", "trials", "seed", "steer_deg",
        "obs_count", "obs_deg", "element_counts",
    },
    "spectrum": {"n", "side_m", "lambda_m", "seed", "part", "shift"},
}

TOPOLOGY_KEYS = {
    "dual": {"d", "x21", "y21", "n1", "n2"},
    "equilateral": {"d", "n1", "n2"},
    "multilinear": {"subarrays"},
    "explicit-csv": {"path"},
}

DEFAULTS = {
    "run": {"threads": "1"},
    "sweep": {"steer_count": "181", "obs_count": "721", "fov_deg": "-90, 90", "epsilon": "0.01"},
    "perturbation": {"trials": "500", "seed": "0", "steer_deg": "0", "obs_count": "181"},
    "spectrum": {"seed": "0", "part": "sinc", "shift": "auto"},
}

_SQRT3 = math.sqrt(3.0)

PRESETS = {
    "fig6": {"topology": {"kind": "dual", "d": "0.8", "x21": "0.4", "y21": "0.32", "n1": "50", "n2": "49"}},
    "fig7": {"topology": {"kind": "equilateral", "d": repr(_SQRT3 / 3), "n1": "50", "n2": "49"}},
    "fig8": {"topology": {"kind": "equilateral", "d": "0.6", "n1": "50", "n2": "49"}},
    "fig9": {
        "topology": {"kind": "equilateral", "d": repr(_SQRT3 / 3), "n1": "50", "n2": "49"},
        "perturbation": {
            "sigma_wavelengths": "0.1", "trials": "500", "seed": "0", "steer_deg": "0",
            "obs_count": "721", "element_counts": "40, 80, 160",
        },
    },
    "long": {
        "topology": {"kind": "equilateral", "d": repr(_SQRT3 / 3), "n1": "50", "n2": "49"},
        "perturbation": {
            "sigma_wavelengths": "0.1", "trials": "100000", "seed": "0", "steer_deg": "0", "obs_deg": "0, 30",
        },
    },
    "fig10": {"spectrum": {"n": "8000", "side_m": "20", "lambda_m": "0.3", "part": "both"}},
    "fig11": {"spectrum": {"n": "8000", "side_m": "40", "lambda_m": "0.3", "part": "both"}},
    "fig10-desk": {"spectrum": {"n": "2000", "side_m": "10", "lambda_m": "0.3", "part": "both"}},
}


def _parser():
    cp = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"), comment_prefixes=("#", ";"),
        default_section="__defaults__",
    )
    cp.optionxform = str
    return cp


def _check_keys(raw: dict, origin: str):
    for section, items in raw.items():
        if section not in SCHEMA:
            raise ConfigError(f"{origin}[{section}]", "unknown section")
        for key in items:
            if key not in SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", f"unknown key in {origin}")


def parse_config(text: str, origin: str = "<config>") -> dict:
    cp = _parser()
    try:
        cp.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(origin, str(exc).splitlines()[0]) from None
    raw = {s: dict(cp.items(s)) for s in cp.sections()}
    _check_keys(raw, origin)
    return raw


def load_config(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(p), f"cannot read config: {exc.strerror}") from None
    raw = parse_config(text, origin=str(p))
    raw.setdefault("__dir__", {})["base"] = str(p.parent)
    return raw


def resolve(raw: Optional[dict], preset: Optional[str] = None) -> dict:
    """Merge defaults, a named preset and a parsed config (later wins)."""
    merged: dict = {s: dict(v) for s, v in DEFAULTS.items()}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError("--preset", f"unknown preset {preset!r}; choose from {', '.join(sorted(PRESETS))}")
        for s, items in PRESETS[preset].items():
            merged.setdefault(s, {}).update(items)
    base = "."
    for s, items in (raw or {}).items():
        if s == "__dir__":
            base = items["base"]
            continue
        merged.setdefault(s, {}).update(items)
    merged["__dir__"] = {"base": base}
    return merged


# -- typed getters ---------------------------------------------------------

def get_float(cfg, section, key, default=None, positive=False, nonneg=False):
    val = cfg.get(section, {}).get(key, default)
    if val is None:
        raise ConfigError(f"{section}.{key}", "missing required value")
    try:
        x = float(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{section}.{key}", f"expected a number, got {val!r}") from None
    if not math.isfinite(x):
        raise ConfigError(f"{section}.{key}", "must be finite")
    if positive and not x > 0:
        raise ConfigError(f"{section}.{key}", f"must be > 0, got {x}")
    if nonneg and x < 0:
        raise ConfigError(f"{section}.{key}", f"must be >= 0, got {x}")
    return x


def get_int(cfg, section, key, default=None, minimum=None):
    val = cfg.get(section, {}).get(key, default)
    if val is None:
        raise ConfigError(f"{section}.{key}", "missing required value")
    try:
        n = int(str(val).strip())
    except ValueError:
        raise ConfigError(f"{section}.{key}", f"expected an integer, got {val!r}") from None
    if minimum is not None and n < minimum:
        raise ConfigError(f"{section}.{key}", f"must be >= {minimum}, got {n}")
    return n


def get_list(cfg, section, key, conv=float, sep=","):
    val = cfg.get(section, {}).get(key)
    if val is None:
        return None
    try:
        return [conv(v.strip()) for v in val.split(sep) if v.strip()]
    except ValueError:
        raise ConfigError(f"{section}.{key}", f"cannot parse list {val!r}") from None


def has(cfg, section, key):
    return key in cfg.get(section, {})


# -- builders ----------------------------------------------------------------

@dataclass
class TopologySpec:
    kind: str
    layout: ArrayLayout
    topology: Optional[MultiLinearTopology]
    scale: float  # multiply file/config lengths by this to get wavelengths

    @property
    def dual_params(self):
        """``(d, x21, y21)`` when the topology is two lines of equal spacing, else None."""
        t = self.topology
        if t is None or len(t.subarrays) != 2:
            return None
        s1, s2 = t.subarrays
        if s1.spacing_d != s2.spacing_d:
            return None
        return s1.spacing_d, s2.leading.x, s2.leading.y


def build_topology(cfg, n_override: Optional[int] = None) -> TopologySpec:
    """Validate the ``[topology]`` section and build the layout.

    ``n_override`` resizes dual/equilateral topologies to ``ceil(N/2) + floor(N/2)``.
    """
    sec = cfg.get("topology")
    if not sec:
        raise ConfigError("topology", "section is required for this command")
    kind = sec.get("kind")
    if kind not in TOPOLOGY_KEYS:
        raise ConfigError("topology.kind", f"expected one of {', '.join(TOPOLOGY_KEYS)}, got {kind!r}")
    allowed = TOPOLOGY_KEYS[kind] | {"kind", "units", "lambda_m"}
    for key in sec:
        if key not in allowed:
            raise ConfigError(f"topology.{key}", f"not used by kind = {kind}")
    for key in TOPOLOGY_KEYS[kind]:
        if key not in sec:
            raise ConfigError(f"topology.{key}", f"required for kind = {kind}")
    units = sec.get("units", "wavelengths")
    if units == "wavelengths":
        scale = 1.0
    elif units == "meters":
        scale = 1.0 / get_float(cfg, "topology", "lambda_m", positive=True)
    else:
        raise ConfigError("topology.units", f"expected wavelengths or meters, got {units!r}")

    try:
        if kind in ("dual", "equilateral"):
            d = get_float(cfg, "topology", "d", positive=True) * scale
            n1 = get_int(cfg, "topology", "n1", minimum=1)
            n2 = get_int(cfg, "topology", "n2", minimum=1)
            if n_override is not None:
                n1, n2 = (n_override + 1) // 2, n_override // 2
            if kind == "dual":
                x21 = get_float(cfg, "topology", "x21") * scale
                y21 = get_float(cfg, "topology", "y21") * scale
                t = dual_linear(d, x21, y21, n1, n2)
            else:
                t = equilateral_dual(d, n1, n2)
            return TopologySpec(kind, expand_topology(t), t, scale)
        if n_override is not None:
            raise ConfigError("perturbation.element_counts", f"needs a dual or equilateral topology, not {kind}")
        if kind == "multilinear":
            subs = []
            for i, chunk in enumerate(s for s in sec["subarrays"].split(";") if s.strip()):
                parts = [v.strip() for v in chunk.split(",")]
                if len(parts) != 4:
                    raise ConfigError("topology.subarrays", f"entry {i + 1} needs 'x, y, d, count'")
                try:
                    x, y, d = (float(v) * scale for v in parts[:3])
                    count = int(parts[3])
                except ValueError:
                    raise ConfigError("topology.subarrays", f"entry {i + 1} is not numeric") from None
                subs.append(LinearSubarray(Position2D(x, y), d, count))
            t = MultiLinearTopology(tuple(subs))
            return TopologySpec(kind, expand_topology(t), t, scale)
        path = Path(cfg["__dir__"]["base"]) / sec["path"]
        try:
            layout = read_layout_csv(path, scale)
        except OSError as exc:
            raise ConfigError("topology.path", f"cannot read {path}: {exc.strerror}") from None
        return TopologySpec(kind, layout, None, scale)
    except InvalidArgumentError as exc:
        raise ConfigError("topology", str(exc)) from None


def build_grids(cfg):
    from .beampattern import angle_grid

    fov = get_list(cfg, "sweep", "fov_deg")
    if fov is None or len(fov) != 2 or not fov[0] < fov[1]:
        raise ConfigError("sweep.fov_deg", "expected 'lo, hi' with lo < hi (degrees)")
    steer_n = get_int(cfg, "sweep", "steer_count", minimum=1)
    obs_n = get_int(cfg, "sweep", "obs_count", minimum=3)
    eps = get_float(cfg, "sweep", "epsilon")
    if not 0 < eps < 1:
        raise ConfigError("sweep.epsilon", f"must lie in (0, 1), got {eps}")
    lo, hi = math.radians(fov[0]), math.radians(fov[1])
    return angle_grid(steer_n, lo, hi), angle_grid(obs_n, lo, hi), eps, (lo, hi)


def read_covariance_csv(path, scale: float) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows or [c.strip() for c in rows[0]] != ["index", "sxx", "sxy", "syy"]:
        raise ConfigError("perturbation.covariance_file", "expected header index,sxx,sxy,syy")
    cov = []
    for i, r in enumerate(rows[1:], start=2):
        try:
            sxx, sxy, syy = (float(v) * scale**2 for v in r[1:4])
        except ValueError:
            raise ConfigError("perturbation.covariance_file", f"line {i} is not numeric") from None
        cov.append([[sxx, sxy], [sxy, syy]])
    return np.array(cov)


def build_perturbation(cfg, scale: float, n: int) -> PerturbationModel:
    sec = cfg.get("perturbation", {})
    has_sigma, has_cov = "sigma_wavelengths" in sec, "covariance_file" in sec
    if has_sigma == has_cov:
        raise ConfigError("perturbation", "give exactly one of sigma_wavelengths or covariance_file")
    try:
        if has_sigma:
            return PerturbationModel.isotropic(get_float(cfg, "perturbation", "sigma_wavelengths", nonneg=True))
        path = Path(cfg["__dir__"]["base"]) / sec["covariance_file"]
        try:
            cov = read_covariance_csv(path, scale)
        except OSError as exc:
            raise ConfigError("perturbation.covariance_file", f"cannot read {path}: {exc.strerror}") from None
        model = PerturbationModel.per_element(cov)
        model.check_size(n)
        return model
    except InvalidArgumentError as exc:
        raise ConfigError("perturbation", str(exc)) from None


def build_ensemble(cfg) -> CubeEnsemble:
    if "spectrum" not in cfg or "n" not in cfg["spectrum"]:
        raise ConfigError("spectrum", "section with n, side_m, lambda_m is required")
    try:
        return CubeEnsemble(
            get_int(cfg, "spectrum", "n", minimum=2),
            get_float(cfg, "spectrum", "side_m", positive=True),
            get_float(cfg, "spectrum", "lambda_m", positive=True),
            get_int(cfg, "spectrum", "seed", minimum=0),
        )
    except InvalidArgumentError as exc:
        raise ConfigError("spectrum", str(exc)) from None


def public_view(cfg) -> dict:
    """Resolved config without internal bookkeeping, for embedding in outputs."""
    return {s: dict(sorted(v.items())) for s, v in sorted(cfg.items()) if not s.startswith("__")}
