import os
import subprocess
import sys

import numpy as np
import pytest

from swarmbeam import _core_py, _kernels

try:
    from swarmbeam import _core
except ImportError:  # extension not built
    _core = None

needs_ext = pytest.mark.skipif(_core is None, reason="compiled extension not built")


def _setup(n=57, n_obs=41, seed=0):
    rng = np.random.default_rng(seed)
    x, y = rng.uniform(-8, 8, (2, n))
    w = rng.normal(size=n) + 1j * rng.normal(size=n)
    th = np.linspace(-np.pi / 2, np.pi / 2, n_obs)
    return x, y, w, th


@pytest.mark.parametrize("impl", [_core_py, pytest.param(_core, marks=needs_ext)])
def test_array_factor_against_direct_sum(impl):
    x, y, w, th = _setup()
    ref = np.array([(w * np.exp(2j * np.pi * (x * np.sin(t) + y * np.cos(t)))).sum() for t in th])
    got = _kernels.array_factor(x, y, w, np.sin(th), np.cos(th), impl=impl)
    np.testing.assert_allclose(got, ref, rtol=0, atol=1e-12)


@needs_ext
def test_backends_agree():
    x, y, w, th = _setup(n=120, n_obs=97, seed=1)
    s, c = np.sin(th), np.cos(th)
    a = _kernels.array_factor(x, y, w, s, c, impl=_core)
    b = _kernels.array_factor(x, y, w, s, c, impl=_core_py)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-11)

    mag = np.abs(w)
    a = _kernels.steered_factor(x, y, mag, s[::4], c[::4], s, c, impl=_core)
    b = _kernels.steered_factor(x, y, mag, s[::4], c[::4], s, c, impl=_core_py)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-11)

    rng = np.random.default_rng(2)
    dx, dy = rng.normal(0, 0.1, (2, 9, x.size))
    a = _kernels.perturbed_factor(x, y, dx, dy, w, s, c, impl=_core)
    b = _kernels.perturbed_factor(x, y, dx, dy, w, s, c, impl=_core_py)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-11)

    pts = rng.uniform(0, 3, (150, 3))
    C1, S1, r1 = _kernels.kernel_pair(pts, 20.0, impl=_core)
    C2, S2, r2 = _kernels.kernel_pair(pts, 20.0, impl=_core_py)
    np.testing.assert_allclose(C1, C2, rtol=0, atol=1e-14)
    np.testing.assert_allclose(S1, S2, rtol=0, atol=1e-14)
    assert r1 == pytest.approx(r2, rel=1e-15)


@pytest.mark.parametrize("impl", [_core_py, pytest.param(_core, marks=needs_ext)])
def test_steered_diagonal_exact(impl):
    x, y, w, th = _setup()
    mag = np.abs(w)
    out = _kernels.steered_factor(x, y, mag, np.sin(th), np.cos(th), np.sin(th), np.cos(th), impl=impl)
    np.testing.assert_array_equal(np.diag(out), _kernels.weight_sum(mag, impl=impl))


@pytest.mark.parametrize("impl", [_core_py, pytest.param(_core, marks=needs_ext)])
def test_kernel_pair_symmetric_zero_diagonal(impl):
    pts = np.random.default_rng(5).uniform(0, 2, (40, 3))
    C, S, rmin = _kernels.kernel_pair(pts, 10.0, impl=impl)
    for A in (C, S):
        np.testing.assert_array_equal(A, A.T)
        np.testing.assert_array_equal(np.diag(A), 0.0)
    d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    assert rmin == pytest.approx(d[~np.eye(40, dtype=bool)].min(), rel=1e-15)


def test_pure_python_switch():
    env = dict(os.environ, SWARMBEAM_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import swarmbeam; print(swarmbeam.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


def test_fallback_row_blocking(monkeypatch):
    monkeypatch.setattr(_core_py, "_BLOCK_CELLS", 64)
    x, y, w, th = _setup(n=30, n_obs=50)
    ref = np.array([(w * np.exp(2j * np.pi * (x * np.sin(t) + y * np.cos(t)))).sum() for t in th])
    got = _kernels.array_factor(x, y, w, np.sin(th), np.cos(th), impl=_core_py)
    np.testing.assert_allclose(got, ref, rtol=0, atol=1e-12)


def test_benchmark_quick_run(capsys):
    import runpy
    from pathlib import Path

    script = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    mod = runpy.run_path(str(script))
    mod["main"](["--quick", "--repeat", "1"])
    out = capsys.readouterr().out
    assert "kernel_pair" in out and "steered_factor" in out
