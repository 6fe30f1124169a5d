"""Event-level Monte Carlo of the receiver chain.

Trials are grouped into fixed-size batches; batch b draws all of its
randomness from default_rng(SeedSequence(seed, spawn_key=(b,))), and
reductions are integer histograms accumulated in batch order, so results
are identical for any worker count. Workers are threads: the numba
kernels release the GIL, the numpy fallback simply runs them serially.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .params import ReceiverConfig

BATCH_SIZE = 16384

# Histogram length covering any reachable count: n_s <= ceil(n_samp / 2) + 1
# and the ideal receiver records at most floor(1/tau) + 1 pulses.
_HIST_PAD = 4


def default_workers() -> int:
    env = os.environ.get("PMTCOUNT_WORKERS")
    if env:
        return max(1, int(env))
    return 1


def _batch_rng(seed: int, batch_index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(batch_index,)))


# ---------------------------------------------------------------------------
# single-trial operations (unit-test surface; the batch engine is the
# vectorized equivalent)

@dataclass(frozen=True)
class ArrivalSet:
    """Sorted photon arrival epochs within one normalized symbol."""
    times: np.ndarray


@dataclass(frozen=True)
class SampleStream:
    """Analog samples F(t_k) at t_k = kT and their quantized bits."""
    values: np.ndarray
    bits: np.ndarray


@dataclass(frozen=True)
class TrialResult:
    n_s: int
    arrivals: int


def gen_arrivals(lam: float, rng: np.random.Generator) -> ArrivalSet:
    """Poisson(lam) arrival count with i.i.d. uniform epochs on [0, 1)."""
    if lam < 0.0:
        raise ValueError("lambda must be nonnegative")
    n = rng.poisson(lam)
    times = np.sort(rng.random(n))
    return ArrivalSet(times=times)


def synth_samples(arrivals: ArrivalSet, cfg: ReceiverConfig,
                  rng: np.random.Generator) -> SampleStream:
    """Held pulses with Gaussian amplitudes plus thermal noise, sampled.

    Each arrival contributes a rectangular pulse of width tau whose
    amplitude is drawn once from Normal(1, sigma^2); overlapping pulses
    add. Per-sample thermal noise is Normal(0, sigma0^2).
    """
    n_samp = cfg.n_samples
    t = arrivals.times
    if cfg.sigma > 0.0:
        amps = rng.normal(1.0, cfg.sigma, t.size)
    else:
        amps = np.ones(t.size)
    tk = np.arange(1, n_samp + 1) * cfg.T
    covered = (t[None, :] <= tk[:, None]) & (tk[:, None] < (t + cfg.tau)[None, :])
    values = covered @ amps
    if cfg.sigma0 > 0.0:
        values = values + rng.normal(0.0, cfg.sigma0, n_samp)
    bits = (values >= cfg.xi).astype(np.int8)
    return SampleStream(values=values, bits=bits)


def count_rising_edges(bits: np.ndarray) -> int:
    """Number of 0->1 transitions, with an implicit 0 before the stream."""
    b = np.asarray(bits).astype(bool)
    if b.size == 0:
        return 0
    return int(b[0]) + int((b[1:] & ~b[:-1]).sum())


def simulate_symbol(lam: float, cfg: ReceiverConfig,
                    rng: np.random.Generator) -> TrialResult:
    arrivals = gen_arrivals(lam, rng)
    stream = synth_samples(arrivals, cfg, rng)
    return TrialResult(n_s=count_rising_edges(stream.bits),
                       arrivals=arrivals.times.size)


# ---------------------------------------------------------------------------
# batch engine

def _draw_batch(lam, cfg: ReceiverConfig | None, rng, n):
    """Draw all randomness for one batch. lam may be scalar or (n,) array.

    Draw order is fixed (counts, epochs, amplitudes, noise) so a batch is
    fully determined by its SeedSequence.
    """
    counts = rng.poisson(lam, n)
    max_count = max(int(counts.max()), 1)
    times = rng.random((n, max_count))
    times[np.arange(max_count)[None, :] >= counts[:, None]] = np.inf
    times.sort(axis=1)
    if cfg is None:
        return counts, times, None, None
    if cfg.sigma > 0.0:
        amps = rng.normal(1.0, cfg.sigma, (n, max_count))
    else:
        amps = np.ones((n, max_count))
    if cfg.sigma0 > 0.0:
        noise = rng.normal(0.0, cfg.sigma0, (n, cfg.n_samples))
    else:
        noise = np.empty((0, 0))
    return counts, times, amps, noise


def _map_batches(worker, n_batches: int, workers: int | None):
    """Run worker(batch_index) for all batches, results in batch order."""
    workers = workers or default_workers()
    if workers <= 1 or n_batches <= 1:
        return [worker(b) for b in range(n_batches)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, range(n_batches)))


def _batch_sizes(trials: int):
    n_batches = (trials + BATCH_SIZE - 1) // BATCH_SIZE
    return n_batches


def simulate_counts_hist(lam: float, cfg: ReceiverConfig, trials: int,
                         seed: int, workers: int | None = None) -> np.ndarray:
    """Histogram of recorded pulse counts over `trials` receiver symbols."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n_samp = cfg.n_samples
    hist_len = n_samp // 2 + 1 + _HIST_PAD

    def worker(b):
        n = min(BATCH_SIZE, trials - b * BATCH_SIZE)
        rng = _batch_rng(seed, b)
        counts, times, amps, noise = _draw_batch(lam, cfg, rng, n)
        ns = _kernels.receiver_counts(times, counts, amps, noise,
                                      n_samp, cfg.T, cfg.tau, cfg.xi)
        return np.bincount(ns, minlength=hist_len)

    parts = _map_batches(worker, _batch_sizes(trials), workers)
    hist = np.zeros(hist_len, dtype=np.int64)
    for h in parts:
        if h.size > hist.size:
            hist = np.pad(hist, (0, h.size - hist.size))
        hist[:h.size] += h
    return hist


def ideal_counts_hist(lam: float, tau: float, trials: int, seed: int,
                      workers: int | None = None) -> np.ndarray:
    """Histogram of dead-time-censored counts for the ideal receiver."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not (0.0 < tau < 1.0):
        raise ValueError("tau must be in (0, 1)")
    hist_len = int(1.0 / tau) + 2 + _HIST_PAD

    def worker(b):
        n = min(BATCH_SIZE, trials - b * BATCH_SIZE)
        rng = _batch_rng(seed, b)
        counts, times, _, _ = _draw_batch(lam, None, rng, n)
        ns = _kernels.dead_time_counts(times, counts, tau)
        return np.bincount(ns, minlength=hist_len)

    parts = _map_batches(worker, _batch_sizes(trials), workers)
    hist = np.zeros(hist_len, dtype=np.int64)
    for h in parts:
        if h.size > hist.size:
            hist = np.pad(hist, (0, h.size - hist.size))
        hist[:h.size] += h
    return hist


def hist_moments(hist: np.ndarray) -> tuple[float, float]:
    """Sample mean and (unbiased) variance of a count histogram."""
    n = int(hist.sum())
    if n < 1:
        raise ValueError("empty histogram")
    k = np.arange(hist.size, dtype=np.int64)
    s1 = int(k @ hist)
    s2 = int((k * k) @ hist)
    mean = s1 / n
    if n == 1:
        return mean, 0.0
    var = (s2 - s1 * s1 / n) / (n - 1)
    return mean, var


def estimate_moments_mc(lam: float, cfg: ReceiverConfig, trials: int,
                        seed: int, workers: int | None = None
                        ) -> tuple[float, float, float]:
    """Monte Carlo mean, variance and standard error of the mean of n_s.

    A single trial yields variance 0 (flagged by the degenerate value, not
    an error).
    """
    hist = simulate_counts_hist(lam, cfg, trials, seed, workers)
    mean, var = hist_moments(hist)
    std_error = (var / trials) ** 0.5
    return mean, var, std_error
