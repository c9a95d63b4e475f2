"""Command-line front end: run one mode or compare all of them.

Artifacts per run: trajectory.csv (slot, x, y), convergence.csv
(iteration, min rate, per-user rates), bands.csv / power.csv (final
plan), and summary.json.  CSVs use shortest round-trip float formatting,
so repeated runs with the same scenario, mode, and seed produce
byte-identical tables; summary.json additionally carries the (non-
deterministic) wall time.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from . import engine, scenario as scenario_mod
from ._kernels import BACKEND

_MODE_FLAGS = tuple(m.replace("_", "-") for m in engine.MODES)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_run(out_dir: str, scn, trace: engine.RunTrace,
               wall_time_s: float) -> None:
    os.makedirs(out_dir, exist_ok=True)
    world = trace.world
    num_users = scn.num_users
    _write_csv(os.path.join(out_dir, "trajectory.csv"),
               ["slot", "x_m", "y_m"],
               [(t, float(p[0]), float(p[1]))
                for t, p in enumerate(world.trajectory)])
    _write_csv(os.path.join(out_dir, "convergence.csv"),
               ["iteration", "min_avg_rate_bps"]
               + [f"rate_user{u}_bps" for u in range(num_users)],
               [(rec.iteration, rec.min_rate, *map(float, rec.user_rates))
                for rec in trace.records])
    _write_csv(os.path.join(out_dir, "bands.csv"),
               ["band", "center_hz", "user"],
               [(i, float(b.center_hz), int(world.band_ue[i]))
                for i, b in enumerate(scn.bands)])
    _write_csv(os.path.join(out_dir, "power.csv"),
               ["slot", "band", "power_w"],
               [(t, i, float(world.power[t, i]))
                for t in range(world.power.shape[0])
                for i in range(world.power.shape[1])])
    summary = {
        "mode": trace.mode,
        "seed": trace.seed,
        "scenario_digest": scenario_mod.scenario_digest(scn),
        "iterations": trace.iterations,
        "converged": trace.converged,
        "initial_min_avg_rate_bps": trace.initial_min_rate,
        "final_min_avg_rate_bps": trace.final_min_rate,
        "user_avg_rates_bps": [float(r) for r in trace.user_rates],
        "kernel_backend": BACKEND,
        "wall_time_s": wall_time_s,
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thzuav",
        description="Max-min rate optimizer for a UAV THz downlink with a "
                    "reflecting surface.")
    parser.add_argument("--scenario", default=None,
                        help="scenario YAML (default: packaged example)")
    parser.add_argument("--mode", default="proposed", choices=_MODE_FLAGS,
                        help="which optimizer variant to run")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the scenario seed")
    parser.add_argument("--out", default="out",
                        help="output directory (default: ./out)")
    parser.add_argument("--max-iterations", type=int,
                        default=engine.MAX_ITERATIONS,
                        help="outer iteration cap")
    parser.add_argument("--compare", action="store_true",
                        help="run every mode (same seed) and write one "
                             "sub-directory per mode plus compare.csv")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    path = args.scenario or scenario_mod.default_scenario_path()
    try:
        scn = scenario_mod.load_scenario(path)
    except (scenario_mod.ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    def _timed(mode: str) -> tuple[engine.RunTrace, float]:
        started = time.perf_counter()
        trace = engine.run(scn, mode=mode, seed=args.seed,
                           max_iterations=args.max_iterations)
        return trace, time.perf_counter() - started

    if not args.compare:
        trace, elapsed = _timed(args.mode.replace("-", "_"))
        _write_run(args.out, scn, trace, elapsed)
        print(f"mode={trace.mode} seed={trace.seed} "
              f"iterations={trace.iterations} converged={trace.converged}")
        print(f"min average rate: {trace.final_min_rate:.6e} bit/s")
        print(f"outputs written to {args.out}")
        return 0

    threads = os.environ.get("THZ_UAV_THREADS")
    workers = max(1, int(threads)) if threads else len(engine.MODES)
    workers = min(workers, len(engine.MODES))

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_timed, engine.MODES))

    rows = []
    for trace, elapsed in results:
        _write_run(os.path.join(args.out, trace.mode), scn, trace, elapsed)
        rows.append((trace.mode, trace.final_min_rate, trace.iterations,
                     trace.converged))
        print(f"mode={trace.mode:<14} min avg rate "
              f"{trace.final_min_rate:.6e} bit/s "
              f"({trace.iterations} iterations)")
    _write_csv(os.path.join(args.out, "compare.csv"),
               ["mode", "final_min_avg_rate_bps", "iterations", "converged"],
               rows)
    print(f"outputs written to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
