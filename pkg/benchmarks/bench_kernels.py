"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--quick]

Prints best-of-``repeat`` wall times and the largest absolute difference
between the two backends for each kernel.
"""

import argparse
import time

import numpy as np

from swarmbeam import _core_py, _kernels

try:
    from swarmbeam import _core
except ImportError:
    _core = None


def best_time(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(quick):
    rng = np.random.default_rng(0)
    n = 99
    x, y = rng.uniform(-5, 5, (2, n))
    w = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
    n_steer, n_obs = (46, 181) if quick else (181, 721)
    steer = np.linspace(-np.pi / 2, np.pi / 2, n_steer)
    obs = np.linspace(-np.pi / 2, np.pi / 2, n_obs)
    trials = 256 if quick else 2048
    dx, dy = rng.normal(0, 0.1, (2, trials, n))
    pts = rng.uniform(0, 10, (500 if quick else 2000, 3))
    return [
        (f"array_factor N={n} obs={n_obs}",
         lambda impl: _kernels.array_factor(x, y, w, np.sin(obs), np.cos(obs), impl=impl)),
        (f"steered_factor {n_steer}x{n_obs} N={n}",
         lambda impl: _kernels.steered_factor(x, y, np.abs(w), np.sin(steer), np.cos(steer),
                                              np.sin(obs), np.cos(obs), impl=impl)),
        (f"perturbed_factor trials={trials} obs=2 N={n}",
         lambda impl: _kernels.perturbed_factor(x, y, dx, dy, w, np.sin(obs[:2]), np.cos(obs[:2]), impl=impl)),
        (f"kernel_pair N={len(pts)}",
         lambda impl: _kernels.kernel_pair(pts, 2 * np.pi / 0.3, impl=impl)[:2]),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = ap.parse_args(argv)
    if _core is None:
        print("compiled extension not built; only the numpy fallback is available")
    print(f"{'kernel':<42}{'numpy [s]':>12}{'cython [s]':>12}{'speedup':>10}{'max |diff|':>13}")
    for name, fn in cases(args.quick):
        t_py, r_py = best_time(lambda: fn(_core_py), args.repeat)
        if _core is None:
            print(f"{name:<42}{t_py:>12.4f}{'-':>12}{'-':>10}{'-':>13}")
            continue
        t_c, r_c = best_time(lambda: fn(_core), args.repeat)
        if isinstance(r_py, tuple):
            diff = max(float(np.abs(a - b).max()) for a, b in zip(r_py, r_c))
        else:
            diff = float(np.abs(r_py - r_c).max())
        print(f"{name:<42}{t_py:>12.4f}{t_c:>12.4f}{t_py / t_c:>9.1f}x{diff:>13.1e}")


if __name__ == "__main__":
    main()
