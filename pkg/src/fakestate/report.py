"""
Rendering of results as text, CSV and JSON.

Machine formats carry 6 significant digits, text carries 4. Every value in
the JSON output is already rounded, so re-parsing reproduces it exactly.
"""
from __future__ import annotations

import csv
import io
import json
from typing import Iterable, Sequence

from .feasibility import FeasibilityReport, SourceWindows, SweepRow, Thresholds
from .finite_stats import AcceptanceWindow, Interval
from .honest import HonestExpectation
from .montecarlo import EmpiricalStats, FluctuationReport
from .reproduce import Check

SWEEP_COLUMNS = (
    "l_km", "source", "eta_f_gain_lo", "eta_f_gain_hi", "eta_f_err_lo", "eta_f_err_hi",
    "combined_lo", "combined_hi", "feasible",
)


def m6(x: float | None) -> float | None:
    """Round to 6 significant digits for machine output."""
    return None if x is None else float(f"{x:.5e}")


def s6(x: float | None) -> str:
    return "nan" if x is None else f"{x:.5e}"


def h4(x: float) -> str:
    return f"{x:.3e}"


def interval_dict(i: Interval | None) -> dict | None:
    if i is None:
        return None
    d = i.to_dict()
    return {"empty": d["empty"], "lo": m6(d["lo"]), "hi": m6(d["hi"])}


def interval_text(i: Interval | None) -> str:
    if i is None:
        return "n/a"
    return "empty" if i.empty else f"[{h4(i.lo)}, {h4(i.hi)}]"


def _ends(i: Interval | None) -> tuple[float | None, float | None]:
    if i is None or i.empty:
        return None, None
    return i.lo, i.hi


def window_dict(w: AcceptanceWindow) -> dict:
    return {"center": m6(w.center), "half_width": m6(w.half_width), "interval": interval_dict(w.interval)}


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# --- expectations ---

def expect_dict(eta: float, items: Sequence[tuple[HonestExpectation, AcceptanceWindow, AcceptanceWindow]]) -> dict:
    return {
        "eta": m6(eta),
        "sources": [
            {"source": h.source_label.value, "p_det": m6(h.gain), "p_err": m6(h.error_gain),
             "qber": m6(h.qber), "gain_window": window_dict(gw), "error_window": window_dict(ew)}
            for h, gw, ew in items
        ],
    }


def expect_csv(eta: float, items) -> str:
    rows = [
        (h.source_label.value, s6(eta), s6(h.gain), s6(h.error_gain), s6(h.qber),
         s6(gw.interval.lo), s6(gw.interval.hi), s6(ew.interval.lo), s6(ew.interval.hi))
        for h, gw, ew in items
    ]
    return to_csv(("source", "eta", "p_det", "p_err", "qber", "gain_lo", "gain_hi", "err_lo", "err_hi"), rows)


def expect_text(eta: float, items) -> str:
    out = [f"overall transmittance eta = {h4(eta)}", ""]
    for h, gw, ew in items:
        out.append(f"{h.source_label.value:>7}: p_det = {h4(h.gain)}  p_err = {h4(h.error_gain)}  "
                   f"QBER = {h4(h.qber)}")
        out.append(f"         gain window  {interval_text(gw.interval)}")
        out.append(f"         error window {interval_text(ew.interval)}")
    return "\n".join(out) + "\n"


# --- feasibility ---

def source_windows_dict(w: SourceWindows) -> dict:
    return {
        "source": w.source_label.value,
        "gain_window": window_dict(w.gain_window),
        "error_window": window_dict(w.error_window),
        "eta_f_from_gain": interval_dict(w.eta_f_from_gain),
        "eta_f_from_error": interval_dict(w.eta_f_from_error),
        "e_f_window": interval_dict(w.e_f_window),
        "combined_eta_f": interval_dict(w.combined_eta_f),
        "eta_f_unconstrained": w.eta_f_unconstrained,
    }


def feasibility_dict(r: FeasibilityReport) -> dict:
    s = r.strategy
    return {
        "strategy": {"name": s.variant.value, "intercept_km": m6(s.intercept_km)},
        "per_source": [source_windows_dict(w) for w in r.per_source],
        "cross_source_eta_f": interval_dict(r.cross_source_eta_f),
        "cross_source_e_f": interval_dict(r.cross_source_e_f),
        "verdict": r.verdict.value,
        "vacuum_consistency": r.vacuum_consistency,
    }


WINDOW_COLUMNS = ("strategy", "source", "eta_f_gain_lo", "eta_f_gain_hi", "eta_f_err_lo", "eta_f_err_hi",
                  "e_f_lo", "e_f_hi", "combined_lo", "combined_hi")


def feasibility_csv(r: FeasibilityReport) -> str:
    rows = []
    for w in r.per_source:
        vals = [*_ends(w.eta_f_from_gain), *_ends(w.eta_f_from_error), *_ends(w.e_f_window), *_ends(w.combined_eta_f)]
        rows.append((r.strategy.describe(), w.source_label.value, *(s6(v) for v in vals)))
    return to_csv(WINDOW_COLUMNS, rows)


def feasibility_text(r: FeasibilityReport, with_verdict: bool = True) -> str:
    out = [f"strategy: {r.strategy.describe()}"]
    for w in r.per_source:
        out.append(f"  {w.source_label.value}:")
        out.append(f"    gain window      {interval_text(w.gain_window.interval)}")
        out.append(f"    error window     {interval_text(w.error_window.interval)}")
        if w.eta_f_from_gain is not None:
            out.append(f"    eta_f from gain  {interval_text(w.eta_f_from_gain)}")
        if w.eta_f_from_error is not None:
            out.append(f"    eta_f from error {interval_text(w.eta_f_from_error)}")
        if w.e_f_window is not None:
            out.append(f"    e_f              {interval_text(w.e_f_window)}")
        if w.combined_eta_f is not None:
            out.append(f"    eta_f combined   {interval_text(w.combined_eta_f)}")
    if with_verdict:
        if r.cross_source_eta_f is not None:
            out.append(f"  cross-source eta_f {interval_text(r.cross_source_eta_f)}")
        if r.cross_source_e_f is not None:
            out.append(f"  cross-source e_f   {interval_text(r.cross_source_e_f)}")
        out.append(f"  vacuum decoy consistent: {'yes' if r.vacuum_consistency else 'no'}")
        out.append(f"  verdict: {r.verdict.value}")
    return "\n".join(out) + "\n"


# --- sweep ---

def sweep_records(rows: Sequence[SweepRow]) -> list[tuple]:
    out = []
    for r in rows:
        vals = [*_ends(r.eta_f_gain), *_ends(r.eta_f_err), *_ends(r.combined)]
        out.append((f"{r.l_km:g}", r.source_label.value, *(s6(v) for v in vals), str(r.feasible).lower()))
    return out


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    return to_csv(SWEEP_COLUMNS, sweep_records(rows))


def sweep_dict(rows: Sequence[SweepRow], thresholds: Thresholds | None = None) -> dict:
    recs = []
    for r in rows:
        vals = [*_ends(r.eta_f_gain), *_ends(r.eta_f_err), *_ends(r.combined)]
        rec = {"l_km": m6(r.l_km), "source": r.source_label.value}
        rec.update({k: m6(v) for k, v in zip(SWEEP_COLUMNS[2:8], vals)})
        rec["feasible"] = r.feasible
        recs.append(rec)
    out = {"columns": list(SWEEP_COLUMNS), "rows": recs}
    if thresholds is not None:
        out["thresholds"] = thresholds_dict(thresholds)
    return out


def sweep_text(rows: Sequence[SweepRow]) -> str:
    out = [f"{'l_km':>6} {'source':>7} {'eta_f(gain)':>24} {'eta_f(error)':>24} {'combined':>24} feasible"]
    for r in rows:
        out.append(f"{r.l_km:>6g} {r.source_label.value:>7} {interval_text(r.eta_f_gain):>24} "
                   f"{interval_text(r.eta_f_err):>24} {interval_text(r.combined):>24} "
                   f"{'yes' if r.feasible else 'no'}")
    return "\n".join(out) + "\n"


def thresholds_dict(t: Thresholds) -> dict:
    return {
        x.name: {"km": m6(x.km), "bracket": None if x.bracket is None else [m6(b) for b in x.bracket]}
        for x in (t.signal_existence, t.overlap, t.containment)
    }


def thresholds_text(t: Thresholds) -> str:
    out = []
    for x in (t.signal_existence, t.overlap, t.containment):
        got = "absent" if x.km is None else f"{x.km:.2f} km (bracket {x.bracket[0]:.2f}-{x.bracket[1]:.2f})"
        out.append(f"  {x.name:<17} {got}")
    return "\n".join(out) + "\n"


# --- Monte Carlo ---

def mc_rows(emp: EmpiricalStats, analytic: dict) -> list[dict]:
    """Empirical vs analytic rates; ``analytic`` maps label -> (gain, error_gain)."""
    out = []
    for c in emp.per_source:
        g, e = analytic[c.label]
        q = e / g if g > 0 else 0.0
        z_gain = (c.gain - g) / c.gain_se if c.gain_se > 0 else 0.0
        z_qber = (c.qber - q) / c.qber_se if c.qber_se > 0 else 0.0
        out.append({
            "source": c.label.value, "sent": c.sent, "detections": c.detections, "errors": c.errors,
            "gain": m6(c.gain), "gain_se": m6(c.gain_se), "gain_expected": m6(g), "z_gain": m6(z_gain),
            "qber": m6(c.qber), "qber_se": m6(c.qber_se), "qber_expected": m6(q), "z_qber": m6(z_qber),
        })
    return out


MC_COLUMNS = ("source", "sent", "detections", "errors", "gain", "gain_se", "gain_expected", "z_gain",
              "qber", "qber_se", "qber_expected", "z_qber")


def mc_csv(rows: list[dict]) -> str:
    return to_csv(MC_COLUMNS, [[r[k] if isinstance(r[k], (int, str)) else s6(r[k]) for k in MC_COLUMNS]
                               for r in rows])


def mc_text(title: str, rows: list[dict]) -> str:
    out = [title]
    for r in rows:
        out.append(f"  {r['source']:>7}: sent {r['sent']}  detections {r['detections']}  errors {r['errors']}")
        out.append(f"           gain {h4(r['gain'])} (expected {h4(r['gain_expected'])}, z = {r['z_gain']:+.2f})")
        out.append(f"           QBER {h4(r['qber'])} (expected {h4(r['qber_expected'])}, z = {r['z_qber']:+.2f})")
    return "\n".join(out) + "\n"


def fluctuation_dict(f: FluctuationReport) -> dict:
    return {
        "source": f.source_label.value, "trials": f.trials, "expected_rate": m6(f.expected_rate),
        "half_width": m6(f.half_width), "outside_fraction": m6(f.outside_fraction), "bound": m6(f.bound),
        "empirical_std": m6(f.empirical_std), "predicted_std": m6(f.predicted_std),
        "std_ratio": m6(f.std_ratio),
    }


def fluctuation_text(f: FluctuationReport) -> str:
    return (
        f"fluctuation check ({f.source_label.value}, {f.trials} sessions)\n"
        f"  expected rate     {h4(f.expected_rate)}\n"
        f"  window half-width {h4(f.half_width)}\n"
        f"  outside window    {f.outside_fraction:.4f} (bound {h4(f.bound)})\n"
        f"  std empirical     {h4(f.empirical_std)}\n"
        f"  std binomial      {h4(f.predicted_std)} (ratio {f.std_ratio:.3f})\n"
    )


# --- reproduce ---

def checks_text(checks: Sequence[Check]) -> str:
    width = max(len(c.name) for c in checks)
    out = []
    for c in checks:
        out.append(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  expected {c.expected:<32} got {c.computed}")
    n_fail = sum(not c.passed for c in checks)
    out.append(f"{len(checks) - n_fail}/{len(checks)} checks passed")
    return "\n".join(out) + "\n"


def checks_dict(checks: Sequence[Check]) -> dict:
    return {"checks": [{"name": c.name, "expected": c.expected, "computed": c.computed, "passed": c.passed}
                       for c in checks],
            "all_passed": all(c.passed for c in checks)}


def checks_csv(checks: Sequence[Check]) -> str:
    return to_csv(("name", "expected", "computed", "passed"),
                  [(c.name, c.expected, c.computed, str(c.passed).lower()) for c in checks])
