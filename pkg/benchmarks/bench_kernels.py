"""Benchmark the numba-jitted Monte Carlo kernels against the numpy fallback.

Runs both implementations of each hot kernel on identical pre-drawn
batches, checks their outputs are bitwise identical, and reports
throughput. Usage:

    python benchmarks/bench_kernels.py [--trials N] [--repeats K]

The numba path needs the numba package importable and PMTCOUNT_NO_NUMBA
unset; otherwise only the numpy path is timed.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from pmtcount import ReceiverConfig
from pmtcount import _kernels
from pmtcount.simulate import _batch_rng, _draw_batch


def _time(fn, repeats):
    best = np.inf
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def bench(trials: int, repeats: int) -> None:
    cfg = ReceiverConfig(T=0.01, tau=0.02, xi=0.3, sigma=0.2, sigma0=0.02)
    lam = 10.0
    rng = _batch_rng(seed=12345, batch_index=0)
    counts, times, amps, noise = _draw_batch(lam, cfg, rng, trials)
    rng_ideal = _batch_rng(seed=12345, batch_index=1)
    counts_i, times_i, _, _ = _draw_batch(lam, None, rng_ideal, trials)

    jobs = [
        ("receiver_counts", lambda impl: impl(
            times, counts, amps, noise, cfg.n_samples, cfg.T, cfg.tau, cfg.xi),
         _kernels.receiver_counts_numpy,
         _kernels._receiver_counts_numba if _kernels.NUMBA_ENABLED else None),
        ("dead_time_counts", lambda impl: impl(times_i, counts_i, 0.01),
         _kernels.dead_time_counts_numpy,
         _kernels._dead_time_counts_numba if _kernels.NUMBA_ENABLED else None),
    ]

    print(f"trials per call: {trials}, repeats: {repeats} (best shown)")
    print(f"numba available: {_kernels.NUMBA_ENABLED}")
    print(f"{'kernel':<18}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    compared = False
    for name, call, np_impl, nb_impl in jobs:
        t_np, out_np = _time(lambda: call(np_impl), repeats)
        if nb_impl is None:
            print(f"{name:<18}{t_np:>12.4f}{'n/a':>12}{'n/a':>10}")
            continue
        call(nb_impl)  # warm up / compile outside the timed region
        t_nb, out_nb = _time(lambda: call(nb_impl), repeats)
        if not np.array_equal(out_np, out_nb):
            raise AssertionError(f"{name}: numpy and numba outputs differ")
        compared = True
        print(f"{name:<18}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}x")
    if compared:
        print("outputs bitwise identical across implementations")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=65536)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    bench(args.trials, args.repeats)


if __name__ == "__main__":
    main()
