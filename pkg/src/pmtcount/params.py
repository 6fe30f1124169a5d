"""Shared parameter types, validation, and the Gaussian tail function.

All quantities are dimensionless: the symbol duration is normalized to 1
and the mean pulse height to 1. The only bridge to physical units is
:func:`thermal_sigma_from_physical`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

_SQRT2 = math.sqrt(2.0)

# Boltzmann constant [J/K], used only by the physical-unit helper.
_BOLTZMANN = 1.380649e-23


def gaussian_q(x):
    """Gaussian tail probability Q(x) = P(Z > x) for standard normal Z.

    Accepts scalars or arrays. Computed as erfc(x/sqrt(2))/2, accurate to
    better than 1e-12 relative for |x| <= 8 and absolutely beyond; clamps
    to 0 in the far tail (Q(40) underflows).
    """
    if np.isscalar(x):
        return 0.5 * math.erfc(x / _SQRT2)
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / _SQRT2)


def thermal_sigma_from_physical(temperature_k: float, symbol_duration_s: float,
                                load_resistance_ohm: float) -> float:
    """Normalized thermal-noise std dev from physical receiver parameters.

    sigma0^2 = 2 * k_B * T0 * Ts / R, with T0 in kelvin, Ts in seconds and
    R in ohms. Returned value feeds ReceiverConfig.sigma0 directly.
    """
    if temperature_k <= 0 or symbol_duration_s <= 0 or load_resistance_ohm <= 0:
        raise ValueError("physical parameters must be positive")
    return math.sqrt(2.0 * _BOLTZMANN * temperature_k * symbol_duration_s
                     / load_resistance_ohm)


@dataclass(frozen=True)
class ReceiverConfig:
    """Receiver chain parameters, normalized to one symbol.

    T       sampling period as a fraction of the symbol; 1/T must be an
            integer sample count.
    tau     holding (dead) time of the pulse-holding circuit, in (0, 1).
    xi      quantizer decision threshold, normalized to unit pulse height.
    sigma   std dev of the random pulse amplitude (shot noise), >= 0.
    sigma0  std dev of the additive per-sample thermal noise, >= 0.
    """
    T: float
    tau: float
    xi: float
    sigma: float = 0.0
    sigma0: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.T <= 1.0):
            raise ValueError(f"sampling period T={self.T} must be in (0, 1]")
        n_samp = 1.0 / self.T
        if abs(n_samp - round(n_samp)) > 1e-9 * n_samp:
            raise ValueError(f"1/T = {n_samp} is not an integer sample count")
        if not (0.0 < self.tau < 1.0):
            raise ValueError(f"holding time tau={self.tau} must be in (0, 1)")
        if self.xi <= 0.0:
            raise ValueError(f"threshold xi={self.xi} must be positive")
        if self.sigma < 0.0 or self.sigma0 < 0.0:
            raise ValueError("noise std devs must be nonnegative")

    @property
    def n_samples(self) -> int:
        """Number of ADC samples per symbol."""
        return int(round(1.0 / self.T))


@dataclass(frozen=True)
class ChannelParams:
    """OOK photon arrival rates per symbol.

    lambda0 is the background (symbol 0) rate, lambda1 = lambda_s + lambda0
    the symbol-1 rate.
    """
    lambda0: float
    lambda1: float

    def __post_init__(self):
        if self.lambda0 < 0.0:
            raise ValueError("lambda0 must be nonnegative")
        if self.lambda1 <= 0.0 or self.lambda1 < self.lambda0:
            raise ValueError("need lambda1 >= lambda0 >= 0 and lambda1 > 0")

    @property
    def lambda_s(self) -> float:
        return self.lambda1 - self.lambda0


@dataclass(frozen=True)
class DerivedParams:
    """Quantities derived from a ReceiverConfig.

    q      probability a unit-mean pulse sample falls below threshold,
           Q((1 - xi) / sigma).
    p      probability a noise-only sample exceeds threshold, Q(xi / sigma0).
    alpha  floor(tau / T): whole sampling periods covered by the dead time.
    delta  remainder tau - alpha*T in [0, T).
    """
    q: float
    p: float
    alpha: int
    delta: float


def derive_params(cfg: ReceiverConfig) -> DerivedParams:
    """Compute (q, p, alpha, delta) for a validated receiver config.

    Pure and deterministic. The floor for alpha is nudged by 1e-12 so that
    tau equal to an exact multiple of T (the tau* = T operating point)
    lands on delta = 0 instead of flipping alpha down.
    """
    if cfg.sigma > 0.0:
        q = gaussian_q((1.0 - cfg.xi) / cfg.sigma)
    else:
        q = 0.0 if cfg.xi < 1.0 else 1.0
    if cfg.sigma0 > 0.0:
        p = gaussian_q(cfg.xi / cfg.sigma0)
    else:
        p = 0.0
    alpha = int(math.floor(cfg.tau / cfg.T + 1e-12))
    delta = cfg.tau - alpha * cfg.T
    if delta < 0.0:
        delta = 0.0
    return DerivedParams(q=q, p=p, alpha=alpha, delta=delta)
