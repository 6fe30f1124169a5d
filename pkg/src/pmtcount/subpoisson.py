"""Dead-time-modified Poisson counting statistics (ideal infinite-rate receiver).

The counting law for a Poisson arrival stream censored by a (paralyzable)
dead time tau is sub-Poisson: variance below the mean. The PMF is an
alternating series that cancels catastrophically for small tau, so terms
are evaluated in log magnitude and summed exactly with math.fsum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

# Beyond this the alternating series loses digits faster than exact
# summation recovers; moments stay closed-form for all inputs.
MAX_LAMBDA_TAU = 0.5

_NORMALIZATION_TOL = 1e-4
_NEGATIVE_CLAMP = -1e-9


class SeriesBreakdownError(ValueError):
    """Raised when the stabilized PMF series misses normalization."""


@dataclass(frozen=True)
class SubPoissonDist:
    """Counting distribution of recorded pulses in one symbol.

    pmf[n] for n = 0..M with M = floor(1/tau) + 1, the maximum number of
    countable pulses.
    """
    lam: float
    tau: float
    M: int
    pmf: np.ndarray

    def mean(self) -> float:
        return float(np.arange(self.M + 1) @ self.pmf)

    def variance(self) -> float:
        n = np.arange(self.M + 1)
        m = self.mean()
        return float((n * n) @ self.pmf - m * m)


def subpoisson_pmf(lam: float, tau: float) -> SubPoissonDist:
    """Evaluate the dead-time counting PMF.

    P(n) = sum_{m=0}^{M-n} (-1)^m / (n! m!) * [(1-(n+m-1)tau) lam e^{-lam tau}]^{n+m}

    with the n = m = 0 term defined as 1. Requires lam * tau <= 0.5; the
    series is rejected (SeriesBreakdownError) if the stabilized sum misses
    unit normalization by more than 1e-4.
    """
    if lam < 0.0:
        raise ValueError("lambda must be nonnegative")
    if not (0.0 < tau < 1.0):
        raise ValueError("tau must be in (0, 1)")
    if lam * tau > MAX_LAMBDA_TAU:
        raise SeriesBreakdownError(
            f"lambda*tau = {lam * tau:.3g} exceeds {MAX_LAMBDA_TAU}; "
            "PMF series unreliable (moments remain available)")

    M = int(math.floor(1.0 / tau)) + 1
    if lam == 0.0:
        pmf = np.zeros(M + 1)
        pmf[0] = 1.0
        return SubPoissonDist(lam=lam, tau=tau, M=M, pmf=pmf)

    s = np.arange(M + 1)
    # base[s] = log of [(1-(s-1)tau) lam e^{-lam tau}]^s ; s = 0 gives 1.
    avail = 1.0 - (s - 1) * tau
    with np.errstate(divide="ignore"):
        log_base = s * (np.log(np.maximum(avail, 0.0))
                        + math.log(lam) - lam * tau)
    log_base[0] = 0.0
    log_base[avail < 0.0] = -np.inf

    lg = gammaln(s + 1.0)
    # log_terms[n, m] for n + m <= M; signs alternate with m.
    idx = np.minimum(s[:, None] + s[None, :], M)
    log_terms = log_base[idx] - lg[:, None] - lg[None, :]
    log_terms[s[:, None] + s[None, :] > M] = -np.inf
    terms = np.exp(log_terms)
    terms[:, 1::2] *= -1.0

    pmf = np.array([math.fsum(terms[n, :M - n + 1]) for n in range(M + 1)])
    pmf[(pmf < 0.0) & (pmf >= _NEGATIVE_CLAMP)] = 0.0
    total = math.fsum(pmf)
    if abs(total - 1.0) > _NORMALIZATION_TOL or np.any(pmf < 0.0):
        raise SeriesBreakdownError(
            f"PMF series breakdown at lambda={lam}, tau={tau}: "
            f"sum={total!r}, min={pmf.min()!r}")
    return SubPoissonDist(lam=lam, tau=tau, M=M, pmf=pmf)


def subpoisson_moments(lam: float, tau: float) -> tuple[float, float]:
    """Closed-form mean and variance of the dead-time counting law.

    mean = lam e^{-lam tau};  var = mean - [1 - (1-tau)^2] mean^2.
    """
    if lam < 0.0:
        raise ValueError("lambda must be nonnegative")
    if not (0.0 < tau < 1.0):
        raise ValueError("tau must be in (0, 1)")
    mean = lam * math.exp(-lam * tau)
    var = mean - (1.0 - (1.0 - tau) ** 2) * mean * mean
    return mean, var


def invert_moments(mean: float, variance: float) -> tuple[float, float]:
    """Fit equivalent (lambda', tau') from measured count moments.

    Uses the small-dead-time moment model

        mean = lambda' e^{-lambda' tau'},  variance = mean - 2 tau' mean^2,

    so tau' comes from the variance equation in closed form and lambda'
    from 1-D root finding on the smaller branch (lambda' tau' < 1).
    Rejects super-Poisson input (variance > mean).
    """
    if mean <= 0.0:
        raise ValueError("mean must be positive")
    if variance <= 0.0:
        raise ValueError("variance must be positive")
    if variance > mean * (1.0 + 1e-12):
        raise ValueError(
            f"variance {variance} exceeds mean {mean}: super-Poisson input, "
            "dead-time model does not apply")

    tau_eq = (mean - variance) / (2.0 * mean * mean)
    if tau_eq <= 0.0:
        return mean, 0.0  # Poisson limit

    def f(lam):
        return lam * math.exp(-lam * tau_eq) - mean

    lo, hi = mean, mean * math.e
    if f(hi) < 0.0:
        # mean*e*tau' > 1: extend toward the peak of lam e^{-lam tau'}.
        hi = 1.0 / tau_eq
        if f(hi) < 0.0:
            raise ValueError(
                f"no lambda' with lambda'*tau' <= 1 reproduces mean={mean} "
                f"at tau'={tau_eq}")
    lam_eq = brentq(f, lo, hi, xtol=1e-10, rtol=8.9e-16)
    return float(lam_eq), float(tau_eq)
