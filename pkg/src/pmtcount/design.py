"""KL-distance computation and (xi*, tau*) selection.

The operating point is chosen to maximize the minimum of the two KL
distances between the binomial count models for the OOK hypotheses
(Chernoff-Stein rationale). When the asymmetry and holding-time
conditions hold, the tractable fast path fixes tau* = T and maximizes an
approximate D(P0||P1) over xi alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .detector import binom_pmf_support, build_rule, error_prob_analytic
from .moments import (ApproximationBreakdownError, BinomialApprox,
                      binomial_approx, moments_full)
from .params import ChannelParams, ReceiverConfig, derive_params

# Ceiling on the KL gap D01(tau) - D01(T) under the stated parameter box.
KL_GAP_CEILING = 0.0102

# Probability mass allowed on excluded (n >= k) terms of the expectation
# in the general-N KL distance at a valid operating point.
EXCLUDED_MASS_TOL = 1e-6

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class DegenerateKlError(ValueError):
    """Raised for P in {0, 1} exactly (infinite KL distance)."""


def _check_probs(*approxes: BinomialApprox):
    for b in approxes:
        if not (0.0 < b.P < 1.0):
            raise DegenerateKlError(f"binomial P={b.P} gives infinite KL")
        if b.N <= 0.0:
            raise ValueError(f"binomial N={b.N} must be positive")


def kl_equal_n(b0: BinomialApprox, b1: BinomialApprox) -> tuple[float, float]:
    """KL distances between Binomial(N, P0) and Binomial(N, P1), equal N.

    D(P0||P1) = N [P0 log(P0/P1) + (1-P0) log((1-P0)/(1-P1))], and the
    symmetric counterpart.
    """
    if abs(b0.N - b1.N) > 1e-9 * max(b0.N, b1.N):
        raise ValueError(f"trial counts differ: {b0.N} vs {b1.N}")
    _check_probs(b0, b1)
    N = b0.N
    p0, p1 = b0.P, b1.P

    def d(pa, pb):
        return N * (pa * math.log(pa / pb)
                    + (1.0 - pa) * (math.log1p(-pa) - math.log1p(-pb)))

    return d(p0, p1), d(p1, p0)


def _kl_directed(ba: BinomialApprox, bb: BinomialApprox) -> tuple[float, float]:
    """D(Pa||Pb) for real-valued trial counts, plus excluded mass.

    Uses the identity log[C(Na,n)/C(Nb,n)] = sum over integer
    k in (Nb, Na] of log(k/(k-n)) (negated when Na < Nb); the expectation
    over n ~ Pa is computed exactly on the integer support. Terms with
    n >= k are excluded and their conditioning mass reported.
    """
    _check_probs(ba, bb)
    Na, Pa = ba.N, ba.P
    Nb, Pb = bb.N, bb.P
    base = (Na * Pa * math.log(Pa / Pb)
            + Na * (1.0 - Pa) * (math.log1p(-Pa) - math.log1p(-Pb))
            + (Na - Nb) * math.log1p(-Pb))
    lo, hi = (Nb, Na) if Na >= Nb else (Na, Nb)
    ks = np.arange(math.floor(lo) + 1, math.floor(hi) + 1)
    if ks.size == 0:
        return base, 0.0
    pmf_a, _ = binom_pmf_support(ba)
    n = np.arange(pmf_a.size)
    ok = n[:, None] < ks[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = ks[None, :] / (ks[None, :] - n[:, None]).astype(float)
    log_sum = np.where(ok, np.log(np.where(ok, ratio, 1.0)), 0.0).sum(axis=1)
    row_ok = ok.all(axis=1)
    excluded = float(pmf_a[~row_ok].sum())
    expectation = float(pmf_a[row_ok] @ log_sum[row_ok])
    if Na < Nb:
        expectation = -expectation
    return base + expectation, excluded


def kl_general_n(b0: BinomialApprox, b1: BinomialApprox,
                 mass_tol: float = EXCLUDED_MASS_TOL
                 ) -> tuple[float, float]:
    """KL distances for binomials with (possibly) different trial counts.

    Reduces exactly to kl_equal_n when N0 = N1. Raises if the probability
    mass on excluded expectation terms exceeds mass_tol.
    """
    d01, ex01 = _kl_directed(b0, b1)
    d10, ex10 = _kl_directed(b1, b0)
    if max(ex01, ex10) > mass_tol:
        raise ApproximationBreakdownError(
            f"excluded expectation mass {max(ex01, ex10):.3g} exceeds "
            f"{mass_tol}; KL truncation convention invalid here")
    return d01, d10


def kl_approx_01(b0: BinomialApprox, b1: BinomialApprox) -> float:
    """Tractable approximation of D(P0||P1), the optimization objective.

    D(P0||P1) ~= N1 log((1-P0)/(1-P1))
                 + N0 P0 [log(P0/P1) - log((1-P0)/(1-P1))].
    """
    _check_probs(b0, b1)
    log_ratio = math.log1p(-b0.P) - math.log1p(-b1.P)
    return (b1.N * log_ratio
            + b0.N * b0.P * (math.log(b0.P / b1.P) - log_ratio))


@dataclass(frozen=True)
class ConditionFlags:
    """Numeric condition checks backing the fast selection path.

    Margins are (bound - value): positive means satisfied.
    """
    kl_asymmetry: bool
    holding_time_ok: bool
    p_bound: bool
    kl_gap_bound: bool
    kl_asymmetry_margin: float
    holding_time_margin: float
    p_bound_margin: float
    kl_gap_value: float


def kl_gap_bound(lambda0p: float, lambda1p: float, tau: float, T: float,
                 alpha: int, P0: float, P1: float, n_hat0: float) -> float:
    """Upper bound on D01(tau) - D01(T), the loss from fixing tau* = T.

    bound = {P0 + lam0' tau [log(1/lam0') + log((2 alpha + 3) lam1' / 3)
             + log(1 - P1)]} * n_hat0.
    """
    bracket = (math.log(1.0 / lambda0p)
               + math.log((2.0 * alpha + 3.0) * lambda1p / 3.0)
               + math.log1p(-P1))
    return (P0 + lambda0p * tau * bracket) * n_hat0


def check_conditions(channel: ChannelParams,
                     cfg: ReceiverConfig) -> ConditionFlags:
    """Evaluate the inequalities licensing the fast tau* = T path."""
    d = derive_params(cfg)
    m0 = moments_full(channel.lambda0, cfg)
    m1 = moments_full(channel.lambda1, cfg)
    n_hat0, n_hat1 = m0.mean, m1.mean
    if n_hat0 <= 0.0 or n_hat1 <= n_hat0:
        return ConditionFlags(False, False, False, False,
                              -math.inf, -math.inf, -math.inf, math.inf)
    tau_eq = m1.tau_equiv
    tau0_eq = 1.5 * cfg.T
    lam0p = (1.0 - d.q) * channel.lambda0
    lam1p = (1.0 - d.q) * channel.lambda1
    alpha = max(d.alpha, 1)

    # Asymmetry: log(n1/n0) > (1 + tau'/tau0') / (1 - 2 tau' n1).
    denom = 1.0 - 2.0 * tau_eq * n_hat1
    if denom <= 0.0:
        kl_asymmetry_margin = -math.inf
    else:
        kl_asymmetry_margin = (math.log(n_hat1 / n_hat0)
                         - (1.0 + tau_eq / tau0_eq) / denom)

    # Holding time: p < 1/2 - log(gamma)/(2(gamma-1)) - gamma tau.
    gamma = n_hat1 / n_hat0
    holding_time_margin = (0.5 - math.log(gamma) / (2.0 * (gamma - 1.0))
                     - gamma * cfg.tau) - d.p

    # Three-part bound on p.
    bound = min(1.0 - math.exp(-((lam1p * cfg.T) ** 3)),
                (1.0 - channel.lambda0 * tau_eq) / (alpha + 0.5),
                1.0 - (2.0 * (alpha - 1) / (2.0 * alpha + 1.0))
                * math.exp(lam0p * (cfg.tau + cfg.T)))
    p_bound_margin = bound - d.p

    try:
        b0 = binomial_approx(m0, d)
        b1 = binomial_approx(m1, d)
        gap = kl_gap_bound(max(lam0p, 1e-300), lam1p, cfg.tau, cfg.T,
                           alpha, b0.P, b1.P, n_hat0)
    except (ApproximationBreakdownError, ValueError):
        gap = math.inf

    return ConditionFlags(
        kl_asymmetry=kl_asymmetry_margin > 0.0,
        holding_time_ok=holding_time_margin > 0.0,
        p_bound=p_bound_margin > 0.0,
        kl_gap_bound=gap <= KL_GAP_CEILING,
        kl_asymmetry_margin=kl_asymmetry_margin,
        holding_time_margin=holding_time_margin,
        p_bound_margin=p_bound_margin,
        kl_gap_value=gap,
    )


@dataclass(frozen=True)
class DesignResult:
    xi_star: float
    tau_star: float
    kl_01: float
    kl_10: float
    conditions: ConditionFlags
    predicted_ber: float
    fast_path: bool
    separable: bool = True
    skipped_points: int = 0


def _approx_pair(channel, cfg):
    d = derive_params(cfg)
    b0 = binomial_approx(moments_full(channel.lambda0, cfg), d)
    b1 = binomial_approx(moments_full(channel.lambda1, cfg), d)
    return b0, b1


def default_xi_grid(cfg: ReceiverConfig, points: int = 64) -> np.ndarray:
    """Coarse deterministic xi grid: (max(6 sigma0, 0.05), 1 + 3 sigma)."""
    lo = max(6.0 * cfg.sigma0, 0.05)
    hi = 1.0 + 3.0 * cfg.sigma
    return np.linspace(lo, hi, points + 1, endpoint=False)[1:]


def default_tau_grid(cfg: ReceiverConfig, multiples: int = 10) -> np.ndarray:
    """tau candidates {T, 2T, ..., kT}, capped below the symbol length."""
    taus = cfg.T * np.arange(1, multiples + 1)
    return taus[taus < 1.0]


def select_params(channel: ChannelParams, cfg_template: ReceiverConfig,
                  xi_grid=None, tau_grid=None,
                  force_full: bool = False) -> DesignResult:
    """Select (xi*, tau*) by the max-min-KL criterion.

    Fast path (conditions satisfied): tau* = T, grid search on xi
    maximizing the approximate D(P0||P1), then one golden-section
    refinement pass. Full path: maximize min(D01, D10) from the exact
    general-N KL over the (xi, tau) grid; breakdown points are skipped
    and counted.
    """
    xi_grid = default_xi_grid(cfg_template) if xi_grid is None \
        else np.asarray(xi_grid, dtype=float)
    tau_grid = default_tau_grid(cfg_template) if tau_grid is None \
        else np.asarray(tau_grid, dtype=float)
    if xi_grid.size == 0 or tau_grid.size == 0:
        raise ValueError("grids must be nonempty")
    T = cfg_template.T
    if np.any(np.abs(tau_grid / T - np.round(tau_grid / T)) > 1e-9):
        raise ValueError("tau grid must contain integer multiples of T")

    def cfg_at(xi, tau):
        return ReceiverConfig(T=T, tau=float(tau), xi=float(xi),
                              sigma=cfg_template.sigma,
                              sigma0=cfg_template.sigma0)

    if channel.lambda_s == 0.0:
        cfg = cfg_at(xi_grid[xi_grid.size // 2], T)
        cond = check_conditions(channel, cfg)
        return DesignResult(xi_star=cfg.xi, tau_star=T, kl_01=0.0, kl_10=0.0,
                            conditions=cond, predicted_ber=0.5,
                            fast_path=False, separable=False)

    mid_cfg = cfg_at(np.median(xi_grid), T)
    cond_mid = check_conditions(channel, mid_cfg)
    fast = (not force_full and cond_mid.kl_asymmetry
            and cond_mid.holding_time_ok and cond_mid.p_bound)

    skipped = 0

    def objective_fast(xi):
        nonlocal skipped
        try:
            b0, b1 = _approx_pair(channel, cfg_at(xi, T))
            return kl_approx_01(b0, b1)
        except (ApproximationBreakdownError, DegenerateKlError, ValueError):
            skipped += 1
            return -math.inf

    def objective_full(xi, tau):
        nonlocal skipped
        try:
            b0, b1 = _approx_pair(channel, cfg_at(xi, tau))
            d01, d10 = kl_general_n(b0, b1)
            return min(d01, d10)
        except (ApproximationBreakdownError, DegenerateKlError, ValueError):
            skipped += 1
            return -math.inf

    if fast:
        tau_star = T
        vals = np.array([objective_fast(x) for x in xi_grid])
        best = int(np.argmax(vals))
        if not np.isfinite(vals[best]):
            raise ApproximationBreakdownError(
                "no valid operating point on the xi grid")
        lo = xi_grid[max(best - 1, 0)]
        hi = xi_grid[min(best + 1, xi_grid.size - 1)]
        xi_star = _golden_section(objective_fast, lo, hi)
    else:
        best_val, xi_star, tau_star = -math.inf, None, None
        for tau in tau_grid:
            for xi in xi_grid:
                v = objective_full(xi, tau)
                if v > best_val:
                    best_val, xi_star, tau_star = v, float(xi), float(tau)
        if xi_star is None:
            raise ApproximationBreakdownError(
                "no valid operating point on the (xi, tau) grid")

    cfg_star = cfg_at(xi_star, tau_star)
    cond = check_conditions(channel, cfg_star)
    b0, b1 = _approx_pair(channel, cfg_star)
    kl01, kl10 = kl_general_n(b0, b1)
    ber = error_prob_analytic(build_rule(channel, cfg_star))
    return DesignResult(xi_star=float(xi_star), tau_star=float(tau_star),
                        kl_01=kl01, kl_10=kl10, conditions=cond,
                        predicted_ber=ber, fast_path=fast,
                        skipped_points=skipped)


def _golden_section(f, lo, hi, iters: int = 40):
    """Golden-section maximization of a unimodal scalar function."""
    a, b = float(lo), float(hi)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (a + b) / 2.0
