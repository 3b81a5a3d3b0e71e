"""Acceptance criteria for the reference 120 km link.

Each test records one ``CRITERION <n> PASS|FAIL`` line, printed in the
pytest terminal summary. Run alone with::

    pytest tests/test_acceptance.py -v
"""
import io
import math
import time
from contextlib import redirect_stdout

import numpy as np

from conftest import ACCEPTANCE_LINES
from fakestate.attacks import AttackStrategy, Variant, observed
from fakestate.cli import main
from fakestate.feasibility import Verdict, analyze, find_thresholds
from fakestate.finite_stats import SessionStats
from fakestate.model import ChannelParams, DetectorParams, SystemParams, overall_transmittance
from fakestate.montecarlo import TrialConfig, fluctuation_check, simulate_attack
from fakestate.reproduce import pnr_identity_error, vacuum_rule_gap_ulps, within_units

SYS = SystemParams()
STATS = SessionStats()


def record(n: int, title: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"CRITERION {n} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
    assert ok, detail


def close(i, lo, hi, units):
    return not i.empty and within_units(i.lo, lo, units) and within_units(i.hi, hi, units)


def fmt(i):
    return "empty" if i.empty else f"[{i.lo:.4e}, {i.hi:.4e}]"


def test_1_transmittance():
    t0 = time.perf_counter()
    eta = overall_transmittance(ChannelParams(0.21, 120), DetectorParams(eta_bob=0.045))
    dt = time.perf_counter() - t0
    record(1, "transmittance", f"{eta:.3e}" == "1.359e-04" and dt < 0.1, f"eta={eta:.6e} ({dt * 1e3:.2f} ms)")


def test_2_naive_windows():
    t0 = time.perf_counter()
    rep = analyze(AttackStrategy(Variant.NAIVE_GLOBAL), SYS, STATS)
    s, d = rep.per_source
    dt = time.perf_counter() - t0
    ok = (
        close(s.eta_f_from_gain, 3.467e-4, 3.553e-4, 1)
        and close(s.e_f_window, 4.178e-2, 4.806e-2, 1)
        and close(d.eta_f_from_gain, 3.106e-4, 3.252e-4, 1)
        and close(d.e_f_window, 6.705e-2, 8.307e-2, 1)
        and rep.verdict is Verdict.INFEASIBLE
        and dt < 1
    )
    record(2, "naive windows", ok,
           f"signal eta_f {fmt(s.eta_f_from_gain)} e_f {fmt(s.e_f_window)}; decoy eta_f {fmt(d.eta_f_from_gain)} "
           f"e_f {fmt(d.e_f_window)}; {rep.verdict.value} ({dt:.3f} s)")


def test_3_vacuum_split():
    t0 = time.perf_counter()
    rep = analyze(AttackStrategy(Variant.VACUUM_SPLIT), SYS, STATS)
    s, d = rep.per_source
    dt = time.perf_counter() - t0
    ok = s.combined_eta_f.empty and close(d.combined_eta_f, 2.855e-4, 3.001e-4, 1) and dt < 1
    record(3, "vacuum-split", ok, f"signal {fmt(s.combined_eta_f)}; decoy {fmt(d.combined_eta_f)} ({dt:.3f} s)")


def test_4_intercept_120():
    t0 = time.perf_counter()
    rep = analyze(AttackStrategy(Variant.INTERCEPT_AT_DISTANCE, intercept_km=120.0), SYS, STATS)
    s, d = rep.per_source
    dt = time.perf_counter() - t0
    ok = (
        close(s.combined_eta_f, 8.893e-2, 9.120e-2, 2)
        and close(d.combined_eta_f, 8.775e-2, 9.229e-2, 2)
        and rep.verdict is Verdict.FEASIBLE
        and dt < 1
    )
    record(4, "intercept at 120 km", ok,
           f"signal {fmt(s.combined_eta_f)}; decoy {fmt(d.combined_eta_f)}; {rep.verdict.value} ({dt:.3f} s)")


def test_5_thresholds():
    t0 = time.perf_counter()
    th = find_thresholds(SYS, STATS, 0.5)
    dt = time.perf_counter() - t0
    want = {"signal_existence": 10.0, "overlap": 30.0, "containment": 45.0}
    parts, ok = [], dt < 5
    for t in (th.signal_existence, th.overlap, th.containment):
        good = t.km is not None and abs(t.km - want[t.name]) <= 2.5
        ok &= good
        got = "absent" if t.km is None else f"{t.km:.2f}"
        parts.append(f"{t.name} {got} km (want {want[t.name]:g}+/-2.5) {'ok' if good else 'MISS'}")
    record(5, "threshold distances", ok, "; ".join(parts) + f" ({dt:.2f} s)")


def test_6_pnr_identity():
    t0 = time.perf_counter()
    err = pnr_identity_error(SYS, np.linspace(0.0, 2.0, 50))
    dt = time.perf_counter() - t0
    record(6, "pnr identity", err <= 1e-12 and dt < 1, f"max |attacked - honest| = {err:.2e} ({dt:.3f} s)")


def test_7_vacuum_consistency():
    gap = vacuum_rule_gap_ulps(SYS.detector.dark_count)
    record(7, "vacuum-decoy consistency", gap <= 1, f"gap {gap:g} ulp")


def _mc_strategies():
    naive = analyze(AttackStrategy(Variant.NAIVE_GLOBAL), SYS, STATS).per_source[0]
    mid = lambda i: 0.5 * (i.lo + i.hi)  # noqa: E731
    return [
        AttackStrategy(Variant.NAIVE_GLOBAL, mid(naive.eta_f_from_gain), mid(naive.e_f_window)),
        AttackStrategy(Variant.VACUUM_SPLIT, 2.928e-4),
        AttackStrategy(Variant.INTERCEPT_AT_DISTANCE, 9.007e-2, 0.0, 120.0),
        AttackStrategy(Variant.PHOTON_NUMBER_RESOLVING),
    ]


def test_8_monte_carlo_oracle():
    t0 = time.perf_counter()
    parts, ok = [], True
    for strategy in _mc_strategies():
        hits = total = 0
        for seed in range(5):
            emp = simulate_attack(strategy, SYS, TrialConfig(pulses=10**8, seed=seed))
            for c in emp.per_source:
                a = observed(strategy, SYS.source(c.label), SYS)
                total += 2
                hits += abs(c.gain - a.observed_gain) <= 5 * c.gain_se
                hits += abs(c.qber - a.qber) <= 5 * c.qber_se
        ok &= hits >= 0.95 * total
        parts.append(f"{strategy.variant.value} {hits}/{total}")
    dt = time.perf_counter() - t0
    ok &= dt < 600
    record(8, "Monte Carlo oracle agreement", ok, "; ".join(parts) + f" within 5 SE ({dt:.1f} s)")


def test_9_fluctuation_law():
    t0 = time.perf_counter()
    r = fluctuation_check(SYS, STATS, trials=200, scaled_n=10**7, seed=20110101)
    dt = time.perf_counter() - t0
    ok = abs(r.std_ratio - 1.0) <= 0.10 and dt < 600
    record(9, "fluctuation law", ok,
           f"std {r.empirical_std:.4e} vs sqrt(p(1-p)/N) {r.predicted_std:.4e}, ratio {r.std_ratio:.3f}; "
           f"outside fraction {r.outside_fraction:g} ({dt:.1f} s)")


def _sweep_csv(workers: int) -> str:
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = main(["sweep", "--format", "csv", "--workers", str(workers)])
    assert code == 0
    return buf.getvalue()


def test_10_sweep_determinism():
    t0 = time.perf_counter()
    outs = [_sweep_csv(1), _sweep_csv(1), _sweep_csv(4)]
    dt = time.perf_counter() - t0
    ok = len(set(outs)) == 1 and dt < 5
    record(10, "sweep determinism", ok,
           f"{len(outs)} runs, {len(set(outs))} distinct, {outs[0].count(chr(10))} lines ({dt:.2f} s)")
