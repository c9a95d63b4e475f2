"""Benchmark the compiled kernels against the pure-Python fallback.

Runs both backends on identical inputs sized like a real solve (election
of candidate UAV positions, and per-band element phase sums) and prints
per-call timings plus the speedup.  Usage:

    python benchmarks/bench_kernels.py [--candidates 128] [--repeat 200]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from thzuav._kernels import _py

try:
    from thzuav._kernels import _core
except ImportError:
    _core = None


def _time(fn, args, repeat):
    fn(*args)                       # warm-up / JIT-free sanity call
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench(candidates: int, repeat: int) -> None:
    rng = np.random.default_rng(7)
    num_bands, num_users, num_elems = 20, 4, 80

    base = rng.uniform(0.0, 2.0, num_elems)
    phases = rng.uniform(0.0, 2.0 * np.pi, num_elems)
    wavenumbers = rng.uniform(4e3, 9e3, num_bands)
    phase_args = (base, phases, wavenumbers)

    cand = rng.uniform(-20.0, 20.0, (candidates, 2))
    ue = rng.uniform(-20.0, 20.0, (num_users, 2))
    band_ue = rng.integers(0, num_users, num_bands)
    score_args = (cand, ue, 100.0, 0.0, 64.0, band_ue,
                  rng.uniform(-1e-9, 0.0, num_bands),
                  rng.uniform(-1e-11, 0.0, num_bands),
                  rng.uniform(1e-9, 1e-7, num_bands),
                  np.full(num_bands, 1e17),
                  np.full(num_bands, 1e10),
                  rng.uniform(0.0, 1e9, num_users))

    for name, py_fn, core_fn in (
        ("phase_sums", _py.phase_sums,
         _core.phase_sums if _core else None),
        ("candidate_scores", _py.candidate_scores,
         _core.candidate_scores if _core else None),
    ):
        args = phase_args if name == "phase_sums" else score_args
        t_py = _time(py_fn, args, repeat)
        line = f"{name:<18} python {t_py * 1e6:9.1f} us"
        if core_fn is not None:
            got_py = py_fn(*args)
            got_core = core_fn(*args)
            np.testing.assert_allclose(got_core, got_py, rtol=1e-12)
            t_core = _time(core_fn, args, repeat)
            line += (f"   compiled {t_core * 1e6:9.1f} us"
                     f"   speedup {t_py / t_core:5.2f}x")
        else:
            line += "   compiled unavailable"
        print(line)


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--candidates", type=int, default=129)
    parser.add_argument("--repeat", type=int, default=200)
    opts = parser.parse_args()
    bench(opts.candidates, opts.repeat)
