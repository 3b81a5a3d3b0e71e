"""Command-line front end: ``fakestate <subcommand> [--config FILE] [options]``."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import report
from .attacks import AttackStrategy, RealizabilityError, Variant, observed
from .config import ConfigError, RunConfig, _parse_grid, load_config, reference_config
from .feasibility import analyze, find_thresholds, make_grid, sweep_intercept
from .finite_stats import acceptance_window
from .honest import expectation
from .model import ParameterError
from .montecarlo import fluctuation_check, simulate_attack, simulate_honest
from .reproduce import run_checks

EXIT_OK, EXIT_CONFIG, EXIT_REGRESSION, EXIT_REALIZABILITY = 0, 1, 2, 3


def _midpoint(i) -> float | None:
    if i is None or i.empty:
        return None
    return 0.5 * (i.lo + i.hi)


def resolve_strategy(cfg: RunConfig) -> AttackStrategy:
    """Build the configured strategy, filling 'auto' parameters.

    Auto resend probability: centre of the cross-source window when it
    exists, else of the signal window. Auto flip probability (naive only):
    centre of the signal's e_f window.
    """
    base = cfg.strategy()
    if base.variant is Variant.PHOTON_NUMBER_RESOLVING:
        return base
    if cfg.resend_prob is not None and (cfg.flip_prob is not None or base.variant is not Variant.NAIVE_GLOBAL):
        return base
    rep = analyze(base, cfg.system, cfg.session)
    sig = rep.per_source[0]
    resend = cfg.resend_prob
    if resend is None:
        resend = _midpoint(rep.cross_source_eta_f) or _midpoint(sig.combined_eta_f) or _midpoint(sig.eta_f_from_gain) or 0.0
    flip = cfg.flip_prob
    if flip is None:
        flip = _midpoint(sig.e_f_window) or 0.0
    return cfg.strategy(resend_prob=resend, flip_prob=flip)


def cmd_expect(cfg: RunConfig) -> tuple[str, int]:
    sys_ = cfg.system
    items = []
    for s in sys_.sources:
        h = expectation(s, sys_)
        items.append((h, acceptance_window(h.gain, cfg.session, s.label),
                      acceptance_window(h.error_gain, cfg.session, s.label)))
    fmt = cfg.output_format
    if fmt == "json":
        return report.dumps(report.expect_dict(sys_.eta, items)), EXIT_OK
    if fmt == "csv":
        return report.expect_csv(sys_.eta, items), EXIT_OK
    return report.expect_text(sys_.eta, items), EXIT_OK


def _feasibility(cfg: RunConfig, with_verdict: bool) -> tuple[str, int]:
    rep = analyze(cfg.strategy(), cfg.system, cfg.session)
    fmt = cfg.output_format
    if fmt == "json":
        d = report.feasibility_dict(rep)
        if not with_verdict:
            d = {"strategy": d["strategy"], "per_source": d["per_source"]}
        return report.dumps(d), EXIT_OK
    if fmt == "csv":
        return report.feasibility_csv(rep), EXIT_OK
    return report.feasibility_text(rep, with_verdict), EXIT_OK


def cmd_windows(cfg: RunConfig) -> tuple[str, int]:
    return _feasibility(cfg, with_verdict=False)


def cmd_feasibility(cfg: RunConfig) -> tuple[str, int]:
    return _feasibility(cfg, with_verdict=True)


def cmd_sweep(cfg: RunConfig) -> tuple[str, int]:
    grid = make_grid(*cfg.grid)
    rows = sweep_intercept(cfg.system, cfg.session, grid, workers=cfg.sweep_workers)
    fmt = cfg.output_format
    if fmt == "csv":
        return report.sweep_csv(rows), EXIT_OK
    th = find_thresholds(cfg.system, cfg.session, cfg.resolution_km)
    if fmt == "json":
        return report.dumps(report.sweep_dict(rows, th)), EXIT_OK
    return report.sweep_text(rows) + "\nthresholds:\n" + report.thresholds_text(th), EXIT_OK


def cmd_mc(cfg: RunConfig, fluctuation: bool = False) -> tuple[str, int]:
    fmt = cfg.output_format
    if fluctuation:
        f = fluctuation_check(cfg.system, cfg.session, cfg.fluct_trials, cfg.fluct_pulses, cfg.trial.seed)
        if fmt == "json":
            return report.dumps(report.fluctuation_dict(f)), EXIT_OK
        if fmt == "csv":
            d = report.fluctuation_dict(f)
            return report.to_csv(list(d), [[d[k] for k in d]]), EXIT_OK
        return report.fluctuation_text(f), EXIT_OK

    sys_ = cfg.system
    if cfg.strategy_name == "honest":
        emp = simulate_honest(sys_, cfg.trial)
        analytic = {s.label: (h.gain, h.error_gain) for s in sys_.sources for h in [expectation(s, sys_)]}
        title = f"honest session, {cfg.trial.pulses} pulses, seed {cfg.trial.seed}"
    else:
        strategy = resolve_strategy(cfg)
        emp = simulate_attack(strategy, sys_, cfg.trial)
        analytic = {s.label: (o.observed_gain, o.observed_error)
                    for s in sys_.sources for o in [observed(strategy, s, sys_)]}
        params = ""
        if strategy.variant is Variant.NAIVE_GLOBAL:
            params = f" (eta_f={strategy.resend_prob:.4e}, e_f={strategy.flip_prob:.4e})"
        elif strategy.variant is not Variant.PHOTON_NUMBER_RESOLVING:
            params = f" (eta_f={strategy.resend_prob:.4e})"
        title = f"{strategy.describe()} attack{params}, {cfg.trial.pulses} pulses, seed {cfg.trial.seed}"
    rows = report.mc_rows(emp, analytic)
    if fmt == "json":
        return report.dumps({"title": title, "sources": rows}), EXIT_OK
    if fmt == "csv":
        return report.mc_csv(rows), EXIT_OK
    return report.mc_text(title, rows), EXIT_OK


def cmd_reproduce(cfg: RunConfig | None = None) -> tuple[str, int]:
    cfg = cfg or reference_config()
    checks = run_checks()
    code = EXIT_OK if all(c.passed for c in checks) else EXIT_REGRESSION
    fmt = cfg.output_format
    if fmt == "json":
        return report.dumps(report.checks_dict(checks)), code
    if fmt == "csv":
        return report.checks_csv(checks), code
    return report.checks_text(checks), code


COMMANDS = {
    "expect": cmd_expect,
    "windows": cmd_windows,
    "feasibility": cmd_feasibility,
    "sweep": cmd_sweep,
    "mc": cmd_mc,
    "reproduce": cmd_reproduce,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="configuration file (default: bundled reference link)")
    common.add_argument("--strategy", help="naive | pnr | vacuum-split | intercept (mc also accepts honest)")
    common.add_argument("--l", type=float, dest="l_km", help="intercept distance from Alice (km)")
    common.add_argument("--grid", help="sweep grid start:stop:step (km)")
    common.add_argument("--seed", type=int, help="Monte Carlo master seed (u64)")
    common.add_argument("--pulses", type=float, help="Monte Carlo pulse count")
    common.add_argument("--workers", type=int, help="worker threads for sweep / Monte Carlo")
    common.add_argument("--format", choices=("csv", "json", "text"), dest="fmt")
    common.add_argument("--out", help="write output to this path instead of stdout")

    p = argparse.ArgumentParser(prog="fakestate", description="Fake-state attack feasibility on decoy-state QKD.")
    sub = p.add_subparsers(dest="cmd", required=True)
    sub.add_parser("expect", parents=[common], help="honest gains, error gains and acceptance windows")
    sub.add_parser("windows", parents=[common], help="per-source eta_f / e_f windows for a strategy")
    sub.add_parser("feasibility", parents=[common], help="cross-source feasibility verdict for a strategy")
    sub.add_parser("sweep", parents=[common], help="eta_f windows versus intercept distance")
    mc = sub.add_parser("mc", parents=[common], help="Monte Carlo session simulation")
    mc.add_argument("--fluctuation", action="store_true", help="run the finite-size fluctuation check")
    sub.add_parser("reproduce", parents=[common], help="regression against the published numbers")
    return p


def apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    kw = {}
    if args.strategy is not None:
        kw["strategy_name"] = args.strategy
    if args.l_km is not None:
        kw["intercept_km"] = args.l_km
    if args.grid is not None:
        kw["grid"] = _parse_grid(args.grid)
    if args.fmt is not None:
        kw["output_format"] = args.fmt
    if args.out is not None:
        kw["output_path"] = args.out
    trial_kw = {}
    if args.seed is not None:
        trial_kw["seed"] = args.seed
    if args.pulses is not None:
        if not float(args.pulses).is_integer():
            raise ValueError(f"--pulses must be an integer, got {args.pulses}")
        trial_kw["pulses"] = int(args.pulses)
    if args.workers is not None:
        trial_kw["workers"] = args.workers
        kw["sweep_workers"] = args.workers
    if trial_kw:
        kw["trial"] = replace(cfg.trial, **trial_kw)
    cfg = replace(cfg, **kw)
    if not 0 <= cfg.intercept_km <= cfg.system.channel.length_km:
        raise ValueError(f"--l must be in [0, {cfg.system.channel.length_km}]")
    if cfg.strategy_name != "honest":
        cfg.strategy()
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else reference_config()
        cfg = apply_overrides(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, ParameterError) as exc:
        print(f"argument error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.cmd != "mc" and cfg.strategy_name == "honest":
        print("argument error: strategy 'honest' is only valid for mc", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.cmd == "mc":
            text, code = cmd_mc(cfg, fluctuation=args.fluctuation)
        else:
            text, code = COMMANDS[args.cmd](cfg)
    except RealizabilityError as exc:
        print(f"realizability violation: {exc}", file=sys.stderr)
        return EXIT_REALIZABILITY
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if cfg.output_path:
        Path(cfg.output_path).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
