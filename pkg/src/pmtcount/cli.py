"""Batch experiment harness: analytic/Monte-Carlo sweeps written as CSV.

Every run writes a CSV with a header row (values at 9 significant digits)
plus a JSON manifest (parameters, seed, version, wall time). Parameter
precedence: command-line flags > config file > preset. Exit codes:
0 success, 2 invalid configuration, 3 approximation breakdown at the
requested operating point, 1 internal error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time

import numpy as np

from . import __version__
from .design import DegenerateKlError, select_params
from .detector import ber_mc, build_rule, error_prob_analytic
from .moments import (ApproximationBreakdownError, binomial_approx,
                      moments_approx_noiseless, moments_exact_noiseless,
                      moments_full, moments_shot)
from .params import ChannelParams, ReceiverConfig, derive_params
from .simulate import default_workers, hist_moments, simulate_counts_hist
from .subpoisson import SeriesBreakdownError, invert_moments, subpoisson_pmf

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INVALID_CONFIG = 2
EXIT_BREAKDOWN = 3

_PARAM_KEYS = ("T", "tau", "xi", "sigma", "sigma0", "lambda0", "lambda1")

# Desk-scale presets mirroring the published sweeps. Trial counts are
# sized for minutes-scale runs; the listed BER presets use 1e5 symbols
# per point, the fitting presets 1e5..1e6 trials per point.
PRESETS = {
    "fig3": dict(command="sweep-sampling", lam=10.0, tau=0.02, xi=0.3,
                 sigma=0.0, sigma0=0.0, values=[0.02, 0.01, 0.005, 0.004, 0.002],
                 trials=200_000),
    "fig4": dict(command="sweep-sampling", lam=10.0, tau=0.005, xi=0.3,
                 sigma=0.0, sigma0=0.0, values=[0.02, 0.01, 0.005, 0.004, 0.002],
                 trials=200_000),
    "fig5": dict(command="sweep-noise", lam=10.0, tau=0.02, T=0.01, xi=0.3,
                 sigma0=0.0, values=[0.1, 0.15, 0.2, 0.25, 0.3],
                 trials=200_000),
    "fig6": dict(command="approx-params", lam=10.0, tau=0.02, T=0.01,
                 sigma=0.2, sigma0=0.02,
                 values=[0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8], trials=200_000),
    "fig7": dict(command="approx-params", lam=10.0, tau=0.01, T=0.01,
                 sigma=0.2, sigma0=0.02,
                 values=[0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8], trials=200_000),
    "fig9": dict(command="ber", sweep="tau", lambda0=1.0, lambda1=12.0,
                 T=0.01, xi=0.3, sigma=0.2, sigma0=0.02,
                 values=[0.01, 0.02, 0.03, 0.04, 0.05], trials=100_000),
    "fig10": dict(command="ber", sweep="xi", lambda0=1.0, lambda1=12.0,
                  T=0.01, tau=0.01, sigma=0.2, sigma0=0.02,
                  values=[0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
                  trials=100_000),
    "fig11": dict(command="design", lambda0=1.0, lambda1=12.0, T=0.01,
                  tau=0.01, xi=0.3, sigma=0.2, sigma0=0.02, trials=100_000),
}


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.9g}"


def _write_csv(path, header, rows):
    out = open(path, "w", newline="") if path else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    finally:
        if path:
            out.close()


def _write_manifest(path, args, wall_time):
    if not path:
        return
    manifest = {
        "command": args.command,
        "params": {k: getattr(args, k, None) for k in
                   (*_PARAM_KEYS, "lam", "trials", "seed", "workers",
                    "sweep", "values", "preset")},
        "version": __version__,
        "wall_time_s": wall_time,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    with open(str(path) + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, default=str)
        fh.write("\n")


def _read_config_file(path):
    values = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"malformed config line: {line!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            values[key] = float(val)
    return values


def _resolve(args):
    """Apply preset < config-file < flag precedence in place."""
    layers = []
    if args.preset:
        if args.preset not in PRESETS:
            raise ValueError(f"unknown preset {args.preset!r}")
        layers.append(PRESETS[args.preset])
    if args.config:
        layers.append(_read_config_file(args.config))
    for layer in layers:
        for key, val in layer.items():
            if key == "command":
                continue
            if getattr(args, key, None) is None and hasattr(args, key):
                setattr(args, key, val)


def _receiver(args) -> ReceiverConfig:
    missing = [k for k in ("T", "tau", "xi") if getattr(args, k, None) is None]
    if missing:
        raise ValueError(f"missing receiver parameters: {', '.join(missing)}")
    return ReceiverConfig(T=args.T, tau=args.tau, xi=args.xi,
                          sigma=args.sigma or 0.0, sigma0=args.sigma0 or 0.0)


def _channel(args) -> ChannelParams:
    if args.lambda0 is None or args.lambda1 is None:
        raise ValueError("missing channel parameters: lambda0, lambda1")
    return ChannelParams(lambda0=args.lambda0, lambda1=args.lambda1)


def _mc_fit(lam, cfg, trials, seed, workers):
    hist = simulate_counts_hist(lam, cfg, trials, seed, workers)
    mean, var = hist_moments(hist)
    lam_fit, tau_fit = invert_moments(mean, var)
    return mean, var, lam_fit, tau_fit


# ---------------------------------------------------------------------------
# subcommand bodies

def _cmd_pmf(args):
    dist = subpoisson_pmf(args.lam, args.tau)
    rows = [(n, p) for n, p in enumerate(dist.pmf)]
    return ["n", "probability"], rows


def _cmd_moments(args):
    cfg = _receiver(args)
    rows = []
    for name, fn in (("exact_noiseless", moments_exact_noiseless),
                     ("approx_noiseless", moments_approx_noiseless),
                     ("shot", moments_shot),
                     ("full", moments_full)):
        m = fn(args.lam, cfg)
        rows.append((name, m.mean, m.variance, m.lambda_equiv, m.tau_equiv,
                     m.approx_valid))
    return (["model", "mean", "variance", "lambda_equiv", "tau_equiv",
             "approx_valid"], rows)


def _cmd_fit(args):
    with open(args.input) as fh:
        reader = csv.DictReader(fh)
        hist = {}
        for row in reader:
            hist[int(row["n"])] = float(row["count"])
    counts = np.zeros(max(hist) + 1)
    for n, c in hist.items():
        counts[n] = c
    total = counts.sum()
    k = np.arange(counts.size)
    mean = float(k @ counts / total)
    var = float((k - mean) ** 2 @ counts / total)
    lam_fit, tau_fit = invert_moments(mean, var)
    return (["mean", "variance", "lambda_fit", "tau_fit"],
            [(mean, var, lam_fit, tau_fit)])


def _cmd_sweep_sampling(args):
    rows = []
    for i, T in enumerate(args.values):
        cfg = ReceiverConfig(T=T, tau=args.tau, xi=args.xi,
                             sigma=args.sigma or 0.0, sigma0=args.sigma0 or 0.0)
        m = moments_approx_noiseless(args.lam, cfg)
        _, _, lam_fit, tau_fit = _mc_fit(args.lam, cfg, args.trials,
                                         args.seed + i, args.workers)
        rows.append((T, tau_fit, lam_fit, m.tau_equiv, m.lambda_equiv))
    return (["T", "tau_fit", "lambda_fit", "tau_theory", "lambda_theory"],
            rows)


def _cmd_sweep_noise(args):
    rows = []
    for i, sigma in enumerate(args.values):
        cfg = ReceiverConfig(T=args.T, tau=args.tau, xi=args.xi,
                             sigma=sigma, sigma0=args.sigma0 or 0.0)
        m = moments_shot(args.lam, cfg)
        _, _, lam_fit, tau_fit = _mc_fit(args.lam, cfg, args.trials,
                                         args.seed + i, args.workers)
        rows.append((sigma, tau_fit, lam_fit, m.tau_equiv, m.lambda_equiv))
    return (["sigma", "tau_fit", "lambda_fit", "tau_theory",
             "lambda_theory"], rows)


def _cmd_approx_params(args):
    rows = []
    for i, xi in enumerate(args.values):
        cfg = ReceiverConfig(T=args.T, tau=args.tau, xi=xi,
                             sigma=args.sigma or 0.0, sigma0=args.sigma0 or 0.0)
        b = binomial_approx(moments_full(args.lam, cfg), derive_params(cfg))
        mean, var, _, _ = _mc_fit(args.lam, cfg, args.trials,
                                  args.seed + i, args.workers)
        p_fit = 1.0 - var / mean
        n_fit = mean / p_fit
        rows.append((xi, b.N, b.P, n_fit, p_fit))
    return ["xi", "N_theory", "P_theory", "N_fit", "P_fit"], rows


def _cmd_design(args):
    channel = _channel(args)
    cfg = _receiver(args)
    result = select_params(channel, cfg, force_full=args.full_path)
    c = result.conditions
    row = (result.xi_star, result.tau_star, result.kl_01, result.kl_10,
           result.predicted_ber, result.fast_path, c.kl_asymmetry,
           c.holding_time_ok, c.p_bound, c.kl_gap_bound, result.skipped_points)
    return (["xi_star", "tau_star", "kl_01", "kl_10", "predicted_ber",
             "fast_path", "kl_asymmetry", "holding_time_ok", "p_bound",
             "kl_gap_bound", "skipped_points"], [row])


def _cmd_ber(args):
    channel = _channel(args)
    rows = []
    values = args.values if args.sweep else [None]
    for i, v in enumerate(values):
        kw = dict(T=args.T, tau=args.tau, xi=args.xi,
                  sigma=args.sigma or 0.0, sigma0=args.sigma0 or 0.0)
        chan = channel
        if args.sweep == "xi":
            kw["xi"] = v
        elif args.sweep == "tau":
            kw["tau"] = v
        elif args.sweep == "lambda_s":
            chan = ChannelParams(lambda0=channel.lambda0,
                                 lambda1=channel.lambda0 + v)
        cfg = ReceiverConfig(**kw)
        if args.mc_fitted_rule:
            rule = _mc_rule(chan, cfg, args)
        else:
            rule = build_rule(chan, cfg)
        ber, stderr = ber_mc(chan, cfg, args.trials, args.seed + 2 * i,
                             args.workers, rule=rule)
        analytic = error_prob_analytic(rule)
        rows.append((v if v is not None else 0.0, ber, stderr, analytic))
    label = args.sweep or "point"
    return [label, "ber", "stderr", "ber_analytic"], rows


def _mc_rule(channel, cfg, args):
    from .detector import build_rule_from_fit
    from .moments import BinomialApprox
    fits = []
    for i, lam in enumerate((channel.lambda0, channel.lambda1)):
        mean, var, _, _ = _mc_fit(lam, cfg, args.trials,
                                  args.seed + 1000 + i, args.workers)
        p = 1.0 - var / mean
        fits.append(BinomialApprox(N=mean / p, P=p))
    return build_rule_from_fit(*fits)


_COMMANDS = {
    "pmf": _cmd_pmf,
    "moments": _cmd_moments,
    "fit": _cmd_fit,
    "sweep-sampling": _cmd_sweep_sampling,
    "sweep-noise": _cmd_sweep_noise,
    "approx-params": _cmd_approx_params,
    "design": _cmd_design,
    "ber": _cmd_ber,
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="pmtcount",
        description="Photon-counting receiver experiments (CSV output)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_mc=True):
        p.add_argument("--config", help="flat key=value parameter file")
        p.add_argument("--preset", help="named parameter preset (fig3..fig11)")
        p.add_argument("--output", "-o", help="CSV output path (default stdout)")
        for key in _PARAM_KEYS:
            p.add_argument(f"--{key}", type=float, default=None)
        p.add_argument("--lambda", dest="lam", type=float, default=None,
                       help="single photon arrival rate")
        if needs_mc:
            p.add_argument("--trials", type=int, default=None)
            p.add_argument("--seed", type=int, default=1)
            p.add_argument("--workers", type=int, default=None,
                           help="thread count (default PMTCOUNT_WORKERS or 1)")

    p = sub.add_parser("pmf", help="ideal dead-time counting PMF")
    common(p, needs_mc=False)

    p = sub.add_parser("moments", help="analytic count moments, all models")
    common(p, needs_mc=False)

    p = sub.add_parser("fit", help="fit (lambda', tau') to a count histogram")
    common(p, needs_mc=False)
    p.add_argument("--input", required=True,
                   help="CSV histogram with columns n,count")

    for name, help_text, label in (
            ("sweep-sampling", "MC vs theory equivalent params over T",
             "sampling periods"),
            ("sweep-noise", "MC vs theory equivalent params over sigma",
             "shot noise std devs"),
            ("approx-params", "binomial (N, P) vs MC fit over xi",
             "decision thresholds")):
        p = sub.add_parser(name, help=help_text)
        common(p)
        p.add_argument("--values", type=float, nargs="+", default=None,
                       help=f"swept {label}")

    p = sub.add_parser("design", help="select (xi*, tau*) by max-min KL")
    common(p)
    p.add_argument("--full-path", action="store_true",
                   help="force the full max-min grid search")

    p = sub.add_parser("ber", help="Monte Carlo bit error rate")
    common(p)
    p.add_argument("--sweep", choices=["xi", "tau", "lambda_s"], default=None)
    p.add_argument("--values", type=float, nargs="+", default=None)
    p.add_argument("--mc-fitted-rule", action="store_true",
                   help="build the detection rule from MC-fitted moments")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    start = time.monotonic()
    try:
        _resolve(args)
        if getattr(args, "trials", None) is not None:
            args.trials = int(args.trials)
            if args.trials < 1:
                raise ValueError("trials must be >= 1")
        elif hasattr(args, "trials"):
            args.trials = 100_000
        if getattr(args, "workers", None) is None and hasattr(args, "workers"):
            args.workers = default_workers()
        if getattr(args, "seed", None) is not None:
            args.seed = int(args.seed)
        if getattr(args, "values", None) is not None:
            args.values = [float(v) for v in args.values]
        header, rows = _COMMANDS[args.command](args)
    except (ApproximationBreakdownError, SeriesBreakdownError,
            DegenerateKlError) as exc:
        print(f"pmtcount: approximation breakdown: {exc}", file=sys.stderr)
        return EXIT_BREAKDOWN
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"pmtcount: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"pmtcount: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    _write_csv(args.output, header, rows)
    _write_manifest(args.output, args, time.monotonic() - start)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
