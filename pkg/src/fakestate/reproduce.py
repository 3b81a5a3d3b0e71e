"""Regression of the published reference-link numbers against recomputed values."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .attacks import AttackStrategy, Variant, dark_click_prob, pnr_observed, vacuum_prep_prob
from .feasibility import Verdict, analyze, find_thresholds
from .finite_stats import Interval, SessionStats
from .honest import expected_error_gain, expected_gain
from .model import SourceLabel, SourceSpec, SystemParams

SIGNAL, DECOY = SourceLabel.SIGNAL, SourceLabel.DECOY

# Published values for the 120 km reference link.
ETA = 1.359e-4
NAIVE = {
    SIGNAL: {"eta_f": (3.467e-4, 3.553e-4), "e_f": (4.178e-2, 4.806e-2)},
    DECOY: {"eta_f": (3.106e-4, 3.252e-4), "e_f": (6.705e-2, 8.307e-2)},
}
VACUUM_SPLIT_DECOY = (2.855e-4, 3.001e-4)
INTERCEPT_120 = {SIGNAL: (8.893e-2, 9.120e-2), DECOY: (8.775e-2, 9.229e-2)}
THRESHOLDS_KM = {"signal_existence": 10.0, "overlap": 30.0, "containment": 45.0}
THRESHOLD_TOL_KM = 2.5


@dataclass(frozen=True)
class Check:
    name: str
    expected: str
    computed: str
    passed: bool


def sig4_unit(x: float) -> float:
    """One unit in the 4th significant digit of ``x``."""
    return 10.0 ** (math.floor(math.log10(abs(x))) - 3)


def within_units(computed: float, expected: float, units: float) -> bool:
    # the slack absorbs binary representation of the decimal tolerance
    return abs(computed - expected) <= units * sig4_unit(expected) * (1 + 1e-9)


def _fmt(x: float) -> str:
    return f"{x:.4g}" if abs(x) >= 1 else f"{x:.3e}"


def _fmt_interval(i: Interval | None) -> str:
    if i is None or i.empty:
        return "empty"
    return f"[{i.lo:.3e}, {i.hi:.3e}]"


def _interval_checks(name: str, got: Interval, expected: tuple[float, float], units: float) -> list[Check]:
    exp = f"[{expected[0]:.3e}, {expected[1]:.3e}] +/-{units:g}u"
    if got.empty:
        return [Check(name, exp, "empty", False)]
    ok = within_units(got.lo, expected[0], units) and within_units(got.hi, expected[1], units)
    return [Check(name, exp, _fmt_interval(got), ok)]


def pnr_identity_error(sys: SystemParams, means=None) -> float:
    """Largest |attacked - honest| over gains and error gains of the per-n attack."""
    det = sys.detector
    eta = sys.eta
    if means is None:
        means = np.linspace(0.0, 2.0, 50)
    worst = 0.0
    for m in means:
        src = SourceSpec(SIGNAL, float(m))
        obs = pnr_observed(src, eta, det.dark_count, det.misalignment)
        worst = max(
            worst,
            abs(obs.observed_gain - expected_gain(src, eta, det.dark_count)),
            abs(obs.observed_error - expected_error_gain(src, eta, det.dark_count, det.misalignment)),
        )
    return worst


def vacuum_rule_gap_ulps(p_d: float) -> float:
    """Distance, in ulps, between Eve's vacuum click rate and Bob's dark-click rate."""
    eve = 0.5 * vacuum_prep_prob(p_d)
    bob = dark_click_prob(p_d)
    return abs(eve - bob) / math.ulp(bob)


def run_checks(sys: SystemParams | None = None, stats: SessionStats | None = None) -> list[Check]:
    sys = sys or SystemParams()
    stats = stats or SessionStats()
    checks: list[Check] = []

    eta = sys.eta
    checks.append(Check("transmittance eta", _fmt(ETA), f"{eta:.4e}", abs(eta - ETA) <= 0.5 * sig4_unit(ETA)))

    naive = analyze(AttackStrategy(Variant.NAIVE_GLOBAL), sys, stats)
    for label in (SIGNAL, DECOY):
        w = naive.source(label)
        checks += _interval_checks(f"naive {label.value} eta_f", w.eta_f_from_gain, NAIVE[label]["eta_f"], 1)
        checks += _interval_checks(f"naive {label.value} e_f", w.e_f_window, NAIVE[label]["e_f"], 1)
    checks.append(Check("naive verdict", "Infeasible", naive.verdict.value,
                        naive.verdict is Verdict.INFEASIBLE))

    vs = analyze(AttackStrategy(Variant.VACUUM_SPLIT), sys, stats)
    sig = vs.source(SIGNAL).combined_eta_f
    checks.append(Check("vacuum-split signal eta_f", "empty", _fmt_interval(sig), sig.empty))
    checks += _interval_checks("vacuum-split decoy eta_f", vs.source(DECOY).combined_eta_f, VACUUM_SPLIT_DECOY, 1)

    ic = analyze(AttackStrategy(Variant.INTERCEPT_AT_DISTANCE, intercept_km=120.0), sys, stats)
    for label in (SIGNAL, DECOY):
        checks += _interval_checks(f"intercept l=120 {label.value} eta_f",
                                   ic.source(label).combined_eta_f, INTERCEPT_120[label], 2)
    checks.append(Check("intercept l=120 verdict", "Feasible", ic.verdict.value,
                        ic.verdict is Verdict.FEASIBLE))

    th = find_thresholds(sys, stats, 0.5)
    for t in (th.signal_existence, th.overlap, th.containment):
        want = THRESHOLDS_KM[t.name]
        got = "absent" if t.km is None else f"{t.km:.2f} km"
        ok = t.km is not None and abs(t.km - want) <= THRESHOLD_TOL_KM
        checks.append(Check(f"threshold {t.name}", f"{want:g} km +/-{THRESHOLD_TOL_KM:g}", got, ok))

    err = pnr_identity_error(sys)
    checks.append(Check("pnr identity", "<= 1e-12", f"{err:.1e}", err <= 1e-12))

    gap = vacuum_rule_gap_ulps(sys.detector.dark_count)
    checks.append(Check("vacuum-decoy consistency", "<= 1 ulp", f"{gap:g} ulp", gap <= 1))
    return checks
