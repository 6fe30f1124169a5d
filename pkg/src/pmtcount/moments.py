"""Analytic count moments for the finite-sampling-rate receiver.

Covers the noiseless exact and approximate forms, the shot-noise-only
approximations, the shot+thermal forms, and the moment-matched binomial
approximation of the count likelihood. Two sampling regimes throughout:
T > tau (sampling period longer than the held pulse) and T <= tau.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .params import DerivedParams, ReceiverConfig, derive_params


class Regime(enum.Enum):
    T_GT_TAU = "T>tau"
    T_LE_TAU = "T<=tau"


class NoiseModel(enum.Enum):
    NONE = "none"
    SHOT = "shot"
    SHOT_THERMAL = "shot+thermal"


@dataclass(frozen=True)
class CountMoments:
    """First two moments of the recorded pulse count n_s.

    lambda_equiv / tau_equiv are the parameters of the ideal sub-Poisson
    model matching these moments: tau' = 3T/2 for T > tau, tau + T/2 for
    T <= tau. approx_valid is False when the operating point is outside
    the small-(lambda T, lambda tau) validity region or the approximate
    variance came out nonpositive.
    """
    mean: float
    variance: float
    regime: Regime
    noise: NoiseModel
    lambda_equiv: float
    tau_equiv: float
    approx_valid: bool = True

    @property
    def second_moment(self) -> float:
        return self.variance + self.mean * self.mean


@dataclass(frozen=True)
class BinomialApprox:
    """Binomial(N, P) moment-matched to a count distribution; N stays real."""
    N: float
    P: float

    @property
    def mean(self) -> float:
        return self.N * self.P

    @property
    def variance(self) -> float:
        return self.N * self.P * (1.0 - self.P)


class ApproximationBreakdownError(ValueError):
    """Raised when a moment-matched approximation has no valid parameters."""


def _regime(cfg: ReceiverConfig) -> Regime:
    return Regime.T_LE_TAU if cfg.T <= cfg.tau else Regime.T_GT_TAU


def _tau_equiv(cfg: ReceiverConfig) -> float:
    if _regime(cfg) is Regime.T_LE_TAU:
        return cfg.tau + cfg.T / 2.0
    return 1.5 * cfg.T


def _in_validity(lam: float, cfg: ReceiverConfig) -> bool:
    return lam * cfg.tau < 0.5 and lam * cfg.T < 0.5


def moments_exact_noiseless(lam: float, cfg: ReceiverConfig) -> CountMoments:
    """Exact mean and second moment of n_s with no shot or thermal noise.

    T > tau:  mean = e^{-lam tau}(1 - e^{-lam tau})/T,
              E[n_s^2] = mean + mean^2 (1 - 3T + 2T^2).
    T <= tau: mean = e^{-lam tau}(1 - e^{-lam T})/T, second moment with the
              alpha/delta correlation terms of adjacent-window counting.
    """
    if lam < 0.0:
        raise ValueError("lambda must be nonnegative")
    T, tau = cfg.T, cfg.tau
    d = derive_params(cfg)
    regime = _regime(cfg)
    if regime is Regime.T_GT_TAU:
        mean = math.exp(-lam * tau) * (1.0 - math.exp(-lam * tau)) / T
        second = mean + mean * mean * (1.0 - 3.0 * T + 2.0 * T * T)
        lam_eq = tau * lam / T
    else:
        mean = math.exp(-lam * tau) * (1.0 - math.exp(-lam * T)) / T
        alpha, delta = d.alpha, d.delta
        if lam == 0.0:
            ratio = 0.0
        else:
            ratio = (1.0 - math.exp(-lam * (T - delta))) / (1.0 - math.exp(-lam * T))
        bracket = ((1.0 - (alpha + 1) * T) * (1.0 - (alpha + 2) * T)
                   + 2.0 * T * (1.0 - (alpha + 1) * T) * ratio)
        second = mean + mean * mean * bracket
        lam_eq = lam
    var = second - mean * mean
    return CountMoments(mean=mean, variance=var, regime=regime,
                        noise=NoiseModel.NONE, lambda_equiv=lam_eq,
                        tau_equiv=_tau_equiv(cfg))


def moments_approx_noiseless(lam: float, cfg: ReceiverConfig) -> CountMoments:
    """Small-(lambda T, lambda tau) sub-Poisson approximation, no noise.

    T > tau:  lambda' = tau lam / T, tau' = 3T/2.
    T <= tau: lambda' = lam,         tau' = tau + T/2.
    In both cases mean = lambda' e^{-lambda' tau'} and
    var = mean - 2 tau' mean^2.
    """
    if lam < 0.0:
        raise ValueError("lambda must be nonnegative")
    regime = _regime(cfg)
    tau_eq = _tau_equiv(cfg)
    lam_eq = lam * cfg.tau / cfg.T if regime is Regime.T_GT_TAU else lam
    mean = lam_eq * math.exp(-lam_eq * tau_eq)
    var = mean - 2.0 * tau_eq * mean * mean
    return CountMoments(mean=mean, variance=var, regime=regime,
                        noise=NoiseModel.NONE, lambda_equiv=lam_eq,
                        tau_equiv=tau_eq,
                        approx_valid=_in_validity(lam, cfg) and var > 0.0)


def moments_shot(lam: float, cfg: ReceiverConfig) -> CountMoments:
    """Approximate moments with shot noise only (sigma0 treated as 0).

    Shot noise thins the arrivals: a pulse sample misses the threshold
    with probability q = Q((1-xi)/sigma), so the equivalent rate becomes
    (1-q) lam (T <= tau) or (1-q) lam tau / T (T > tau); the equivalent
    dead time is unchanged.
    """
    if lam < 0.0:
        raise ValueError("lambda must be nonnegative")
    d = derive_params(cfg)
    regime = _regime(cfg)
    tau_eq = _tau_equiv(cfg)
    thinned = (1.0 - d.q) * lam
    lam_eq = thinned * cfg.tau / cfg.T if regime is Regime.T_GT_TAU else thinned
    mean = lam_eq * math.exp(-lam_eq * tau_eq)
    var = mean - 2.0 * tau_eq * mean * mean
    return CountMoments(mean=mean, variance=var, regime=regime,
                        noise=NoiseModel.SHOT, lambda_equiv=lam_eq,
                        tau_equiv=tau_eq,
                        approx_valid=_in_validity(lam, cfg) and var > 0.0)


def moments_full(lam: float, cfg: ReceiverConfig) -> CountMoments:
    """Approximate moments with both shot and thermal noise.

    The shot noise enters only through the modified rate
    lambda' = (1 - q) lam; thermal noise adds false threshold crossings
    with per-sample probability p = Q(xi/sigma0).

    T > tau:  mean = e^{-lam' tau}(1-p)[1 - e^{-lam' tau}(1-p)]/T,
              var = mean + (2T^2 - 3T) mean^2.
    T <= tau: mean = e^{-lam' tau}(1-p)[1 - e^{-lam' T}(1-p)]/T,
              var = mean[1 + 2(alpha-1)p]
                    + 2 mean^2 [-(tau + T/2) + p delta/(lam' T + p)].
    """
    if lam < 0.0:
        raise ValueError("lambda must be nonnegative")
    d = derive_params(cfg)
    T, tau = cfg.T, cfg.tau
    regime = _regime(cfg)
    tau_eq = _tau_equiv(cfg)
    lam_p = (1.0 - d.q) * lam
    p = d.p
    if regime is Regime.T_GT_TAU:
        g = math.exp(-lam_p * tau) * (1.0 - p)
        mean = g * (1.0 - g) / T
        var = mean + (2.0 * T * T - 3.0 * T) * mean * mean
        lam_eq = lam_p * tau / T
        valid = _in_validity(lam, cfg) and var > 0.0
    else:
        if lam_p * T + p == 0.0:
            # Degenerate: no signal and no thermal crossings.
            return CountMoments(mean=0.0, variance=0.0, regime=regime,
                                noise=NoiseModel.SHOT_THERMAL,
                                lambda_equiv=0.0, tau_equiv=tau_eq)
        mean = (math.exp(-lam_p * tau) * (1.0 - p)
                * (1.0 - math.exp(-lam_p * T) * (1.0 - p)) / T)
        var = (mean * (1.0 + 2.0 * (d.alpha - 1) * p)
               + 2.0 * mean * mean
               * (-(tau + T / 2.0) + p * d.delta / (lam_p * T + p)))
        lam_eq = lam_p
        valid = _in_validity(lam, cfg) and var > 0.0
    return CountMoments(mean=mean, variance=var, regime=regime,
                        noise=NoiseModel.SHOT_THERMAL, lambda_equiv=lam_eq,
                        tau_equiv=tau_eq, approx_valid=valid)


def binomial_approx(moments: CountMoments, derived: DerivedParams) -> BinomialApprox:
    """Moment-matched Binomial(N, P) for a count distribution.

    T > tau:  N = 1/(2 tau'), P = 2 tau' mean.
    T <= tau: the thermal correction bracket
              c = p delta / (tau'(lam' T + p)) + (alpha - 1) p / (mean tau')
              gives N = 1/(2 tau' (1 - c)), P = 2 tau' mean (1 - c).
    N P equals the source mean exactly; rejects P outside (0, 1) or
    N <= mean (approximation breakdown).
    """
    n_hat = moments.mean
    if n_hat <= 0.0:
        raise ApproximationBreakdownError("count mean must be positive")
    tau_eq = moments.tau_equiv
    if moments.regime is Regime.T_GT_TAU:
        correction = 0.0
    else:
        # tau' = alpha*T + delta + T/2 recovers the sampling period.
        T = (tau_eq - derived.delta) / (derived.alpha + 0.5)
        p = derived.p
        lam_p = moments.lambda_equiv
        if p == 0.0:
            correction = 0.0
        elif lam_p * T + p == 0.0:
            raise ApproximationBreakdownError("degenerate lambda' T + p = 0")
        else:
            correction = (p * derived.delta / (tau_eq * (lam_p * T + p))
                          + (derived.alpha - 1) * p / (n_hat * tau_eq))
    if correction >= 1.0:
        raise ApproximationBreakdownError(
            f"thermal correction bracket {correction} >= 1")
    N = 1.0 / (2.0 * tau_eq * (1.0 - correction))
    P = 2.0 * tau_eq * n_hat * (1.0 - correction)
    if not (0.0 < P < 1.0):
        raise ApproximationBreakdownError(
            f"binomial probability P={P} outside (0, 1) at mean {n_hat}")
    if N <= n_hat:
        raise ApproximationBreakdownError(
            f"binomial trial count N={N} <= mean {n_hat}")
    return BinomialApprox(N=N, P=P)
