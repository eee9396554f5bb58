"""``swarmbeam`` command-line front end.

    swarmbeam pattern|grating|perturb|spectrum [--config FILE] [--preset NAME]
              [--out DIR] [--seed N] [--threads N] [--force]

Exit codes: 0 success, 2 configuration error, 3 degenerate geometry,
4 resource guard (large spectrum run without ``--force``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from . import config as cfgmod
from .beampattern import angle_grid, main_lobe_bounds, steering_weights, write_pattern_csv
from .errors import ConfigError, DegenerateGeometryError, ResourceGuardError
from .gratinglobe import (
    c3_check,
    period_pairs,
    rational_spacing_precheck,
    scan_all_steer_angles,
    write_scan_csv,
)
from .perturbation import monte_carlo_stats, write_stats_csv
from .randmatrix import (
    MEMORY_WARN_N,
    build_kernels,
    compare_esd,
    default_law,
    regime,
    sample_cube,
    spectrum,
    write_eigs_csv,
    write_law_csv,
)

log = logging.getLogger("swarmbeam")

EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_RESOURCE = 0, 2, 3, 4


def _g(x):
    return float(format(x, ".17g"))


def write_json(path: Path, obj) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


def _provenance(cfg):
    return {"config": cfgmod.public_view(cfg), "version": __version__, "backend": _kernels.BACKEND}


def _in_fov(a, fov):
    return fov[0] - 1e-12 <= a <= fov[1] + 1e-12


def _period_records(dual, fov):
    d, x21, y21 = dual
    return [
        {"theta_deg": _g(math.degrees(pp.theta)), "theta_image_deg": _g(math.degrees(pp.theta_image)),
         "p": pp.p, "q": pp.q, "in_fov": _in_fov(pp.theta, fov) and _in_fov(pp.theta_image, fov)}
        for pp in period_pairs(d, x21, y21)
    ]


def cmd_pattern(cfg, out: Path) -> int:
    topo = cfgmod.build_topology(cfg)
    steer, obs, eps, fov = cfgmod.build_grids(cfg)
    threads = cfgmod.get_int(cfg, "run", "threads", minimum=1)
    grid, hits = scan_all_steer_angles(topo.layout, steer, obs, eps, threads=threads)
    write_pattern_csv(grid, out / "pattern.csv")

    per_steer, overall = [], 0.0
    for s, row, angles in zip(steer, grid.magnitude, hits):
        lo, hi = main_lobe_bounds(row, int(np.argmin(np.abs(obs - s))))
        side = np.concatenate([row[:lo], row[hi + 1:]])
        peak = float(side.max()) if side.size else 0.0
        overall = max(overall, peak)
        per_steer.append({
            "theta_s_deg": _g(math.degrees(s)),
            "max_sidelobe": _g(peak),
            "main_lobe_width_deg": _g(math.degrees(obs[hi] - obs[lo])),
            "grating_lobe_angles": [_g(math.degrees(a)) for a in angles],
        })
    summary = {
        "n_elements": len(topo.layout),
        "epsilon": eps,
        "max_sidelobe": _g(overall),
        "grating_lobes_total": sum(len(h) for h in hits),
        "steer": per_steer,
        **_provenance(cfg),
    }
    dual = topo.dual_params
    if dual is not None and dual[2] != 0:
        summary["period_angles"] = _period_records(dual, fov)
    write_json(out / "pattern_summary.json", summary)
    log.info("pattern: %d grating-lobe detections over %d steer angles", summary["grating_lobes_total"], len(steer))
    return EXIT_OK


def cmd_grating(cfg, out: Path) -> int:
    topo = cfgmod.build_topology(cfg)
    steer, obs, eps, fov = cfgmod.build_grids(cfg)
    threads = cfgmod.get_int(cfg, "run", "threads", minimum=1)
    dual = topo.dual_params
    report: dict
    if dual is not None:
        d, x21, y21 = dual
        if y21 == 0:
            raise DegenerateGeometryError("y21 = 0 puts both lines on one axis; analyse it as a single linear array")
        rep = c3_check(d, x21, y21)
        report = {"kind": "dual-linear", **rep.to_dict()}
        records = _period_records(dual, fov)
        with open(out / "period_angles.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("theta_deg", "theta_image_deg", "p", "q", "in_fov"))
            for r in records:
                w.writerow((format(r["theta_deg"], ".17g"), format(r["theta_image_deg"], ".17g"),
                            r["p"], r["q"], int(r["in_fov"])))
    else:
        spacings = topo.topology.spacings if topo.topology is not None else []
        report = {
            "kind": topo.kind,
            "rational_spacing_precheck": rational_spacing_precheck(spacings) if spacings else None,
        }
    _, hits = scan_all_steer_angles(topo.layout, steer, obs, eps, threads=threads)
    write_scan_csv(steer, hits, out / "grating_scan.csv")
    report["scan"] = {"epsilon": eps, "steer_count": len(steer), "detections": sum(len(h) for h in hits)}
    report.update(_provenance(cfg))
    write_json(out / "c3_report.json", report)
    log.info("grating: %s", report.get("verdict", report["kind"]))
    return EXIT_OK


def _obs_angles(cfg, steer):
    deg = cfgmod.get_list(cfg, "perturbation", "obs_deg")
    if deg is not None:
        th = np.radians(deg)
    else:
        _, _, _, fov = cfgmod.build_grids(cfg)
        th = angle_grid(cfgmod.get_int(cfg, "perturbation", "obs_count", minimum=1), *fov)
    # the exact steering-angle law needs theta_s on the grid
    return np.unique(np.append(th, steer))


def cmd_perturb(cfg, out: Path) -> int:
    trials = cfgmod.get_int(cfg, "perturbation", "trials", minimum=1)
    seed = cfgmod.get_int(cfg, "perturbation", "seed", minimum=0)
    steer = math.radians(cfgmod.get_float(cfg, "perturbation", "steer_deg"))
    counts = cfgmod.get_list(cfg, "perturbation", "element_counts", conv=int)
    th = _obs_angles(cfg, steer)
    runs = []
    for n in counts or [None]:
        topo = cfgmod.build_topology(cfg, n_override=n)
        model = cfgmod.build_perturbation(cfg, topo.scale, len(topo.layout))
        runs.append((topo, model))

    manifest = {"seed": seed, "trials": trials, "steer_deg": _g(math.degrees(steer)), "runs": [], **_provenance(cfg)}
    off = (np.abs(np.degrees(th)) >= 20) & (np.abs(np.degrees(th)) <= 70)
    for topo, model in runs:
        n = len(topo.layout)
        w = steering_weights(topo.layout, steer)
        stats = monte_carlo_stats(topo.layout, w, model, th, trials=trials, seed=seed, theta_s=steer)
        name = f"perturb_stats_N{n}.csv" if counts else "perturb_stats.csv"
        write_stats_csv(stats, out / name)
        fl = np.array([s.mean_abs_fluct for s in stats])
        at_steer = [s for s in stats if s.law == "exact"][0]
        manifest["runs"].append({
            "N": n,
            "file": name,
            "sigma": model.sigma,
            "mean_abs_fluct_at_steer": _g(at_steer.mean_abs_fluct),
            "mean_abs_fluct_off_steer_20_70": _g(float(fl[off].mean())) if off.any() else None,
        })
    write_json(out / "manifest.json", manifest)
    return EXIT_OK


def cmd_spectrum(cfg, out: Path, force: bool = False) -> int:
    ens = cfgmod.build_ensemble(cfg)
    part = cfg["spectrum"].get("part", "sinc")
    if part not in ("sinc", "cosine", "both"):
        raise ConfigError("spectrum.part", f"expected sinc, cosine or both, got {part!r}")
    shift_txt = cfg["spectrum"].get("shift", "auto")
    shift = None if shift_txt == "auto" else cfgmod.get_float(cfg, "spectrum", "shift")
    if ens.n > MEMORY_WARN_N and not force:
        raise ResourceGuardError(
            f"N={ens.n} needs ~{2 * 8 * ens.n**2 / 1e9:.1f} GB for two dense kernels; pass --force to run"
        )
    reg = regime(ens)
    kernels = build_kernels(sample_cube(ens), ens.lambda_m)
    parts = ["sinc", "cosine"] if part == "both" else [part]
    summary = {"N": ens.n, "L_m": ens.side_m, "lambda_m": ens.lambda_m, "seed": ens.seed,
               "beta": _g(reg.beta), "rho_lambda3": _g(reg.rho_lambda3), "parts": {}, **_provenance(cfg)}
    for p in parts:
        res = spectrum(ens, p, shift=shift, kernels=kernels)
        law = default_law(p, reg.beta)
        ks, l1 = compare_esd(res.eigenvalues, law)
        write_eigs_csv(res.eigenvalues, out / f"eigs_{p}.csv")
        law_name = "law.csv" if len(parts) == 1 else f"law_{p}.csv"
        write_law_csv(law, out / law_name)
        summary["parts"][p] = {"part": p, "law": law.kind, "shift_applied": res.shift_applied,
                               "ks": _g(ks), "l1": _g(l1), "law_file": law_name}
        log.info("spectrum %s: KS=%.4f L1=%.4f vs %s(beta=%.4f)", p, ks, l1, law.kind, reg.beta)
    write_json(out / "spectrum_summary.json", summary)
    return EXIT_OK


COMMANDS = {"pattern": cmd_pattern, "grating": cmd_grating, "perturb": cmd_perturb, "spectrum": cmd_spectrum}


def build_parser():
    ap = argparse.ArgumentParser(prog="swarmbeam", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="INI-style experiment file")
    ap.add_argument("--preset", help="built-in configuration: " + ", ".join(sorted(cfgmod.PRESETS)))
    ap.add_argument("--out", default=".", help="output directory (created if missing)")
    ap.add_argument("--seed", type=int, help="override every seed in the config")
    ap.add_argument("--threads", type=int, help="worker threads for pattern sweeps")
    ap.add_argument("--force", action="store_true", help="allow spectrum runs above N=%d" % MEMORY_WARN_N)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.config is None and args.preset is None:
            raise ConfigError("--config", "give a config file, a preset, or both")
        raw = cfgmod.load_config(args.config) if args.config else None
        cfg = cfgmod.resolve(raw, args.preset)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed", "must be >= 0")
            for section in ("perturbation", "spectrum"):
                cfg.setdefault(section, {})["seed"] = str(args.seed)
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads", "must be >= 1")
            cfg["run"]["threads"] = str(args.threads)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, out, force=args.force)
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateGeometryError as exc:
        print(f"degenerate geometry: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ResourceGuardError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
