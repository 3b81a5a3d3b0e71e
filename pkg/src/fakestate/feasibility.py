"""
Feasibility of each fake-state strategy against the finite-size acceptance tests.

For the threshold-detector strategies Bob's observed gain and error are
affine in Eve's resend probability ``eta_f``, so the set of admissible
``eta_f`` for one source is the exact preimage of the acceptance windows.
A strategy is feasible when one ``eta_f`` is admissible for the signal and
decoy sources at once.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .attacks import (
    AttackStrategy,
    Variant,
    affine_response,
    check_realizable,
    observed,
)
from .finite_stats import (
    AcceptanceWindow,
    Interval,
    SessionStats,
    acceptance_window,
    intersect,
)
from .honest import expectation
from .model import SourceLabel, SourceSpec, SystemParams

UNIT = Interval(0.0, 1.0)


class Verdict(str, Enum):
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class SourceWindows:
    """Everything derived for one source under one strategy.

    ``eta_f_from_error`` is None for NAIVE_GLOBAL (the flip probability is
    free there and ``e_f_window`` is filled instead). All interval fields are
    None for the photon-number-resolving attack, which has no single ``eta_f``.
    """
    source_label: SourceLabel
    gain_window: AcceptanceWindow
    error_window: AcceptanceWindow
    eta_f_from_gain: Interval | None
    eta_f_from_error: Interval | None
    e_f_window: Interval | None
    combined_eta_f: Interval | None
    eta_f_unconstrained: bool = False


@dataclass(frozen=True)
class FeasibilityReport:
    strategy: AttackStrategy
    per_source: tuple[SourceWindows, ...]
    cross_source_eta_f: Interval | None
    cross_source_e_f: Interval | None
    verdict: Verdict
    vacuum_consistency: bool

    def source(self, label: SourceLabel | str) -> SourceWindows:
        label = SourceLabel(label)
        for w in self.per_source:
            if w.source_label is label:
                return w
        raise KeyError(label.value)


def _preimage(offset: float, slope: float, window: Interval) -> tuple[Interval, bool]:
    """Solve offset + slope * x in window for x in [0, 1].

    Returns the interval and whether x was left unconstrained (zero slope).
    """
    window = window.widen_ulp()
    if slope == 0:
        return (UNIT if offset in window else Interval.empty_set()), True
    lo = (window.lo - offset) / slope
    hi = (window.hi - offset) / slope
    if slope < 0:
        lo, hi = hi, lo
    return Interval.from_bounds(lo, hi).clamp(), False


def _windows(source: SourceSpec, sys: SystemParams, stats: SessionStats):
    honest = expectation(source, sys)
    return (
        acceptance_window(honest.gain, stats, source.label),
        acceptance_window(honest.error_gain, stats, source.label),
    )


def eta_f_interval_from_gain(
    strategy: AttackStrategy, source: SourceSpec, sys: SystemParams, stats: SessionStats
) -> Interval:
    """Resend probabilities that keep the source's gain inside its window.

    A vacuum source leaves ``eta_f`` unconstrained and yields [0, 1] (or the
    empty set if the strategy's vacuum response already misses the window).
    """
    gain_w, _ = _windows(source, sys, stats)
    r = affine_response(strategy, source, sys)
    return _preimage(r.gain_offset, r.gain_slope, gain_w.interval)[0]


def eta_f_interval_from_error(
    strategy: AttackStrategy, source: SourceSpec, sys: SystemParams, stats: SessionStats
) -> Interval:
    if strategy.variant not in (Variant.VACUUM_SPLIT, Variant.INTERCEPT_AT_DISTANCE):
        raise ValueError(f"{strategy.variant.value} has no fixed flip probability")
    _, err_w = _windows(source, sys, stats)
    r = affine_response(strategy, source, sys)
    return _preimage(r.error_offset, r.error_slope, err_w.interval)[0]


def e_f_interval(source: SourceSpec, sys: SystemParams, stats: SessionStats) -> Interval:
    """Flip probabilities compatible with the gain and error windows (naive strategy).

    With the gain pinned inside its window, e_f = error / gain ranges over the
    extremal quotients of the two windows.
    """
    gain_w, err_w = _windows(source, sys, stats)
    g = gain_w.interval.widen_ulp()
    e = err_w.interval.widen_ulp()
    if g.lo <= 0:
        raise ValueError(f"{source.label.value}: gain window touches zero, e_f is undetermined")
    return Interval.from_bounds(e.lo / g.hi, e.hi / g.lo).clamp()


def source_windows(
    strategy: AttackStrategy, source: SourceSpec, sys: SystemParams, stats: SessionStats
) -> SourceWindows:
    gain_w, err_w = _windows(source, sys, stats)
    if strategy.variant is Variant.PHOTON_NUMBER_RESOLVING:
        return SourceWindows(source.label, gain_w, err_w, None, None, None, None)

    r = affine_response(strategy, source, sys)
    from_gain, free = _preimage(r.gain_offset, r.gain_slope, gain_w.interval)
    if strategy.variant is Variant.NAIVE_GLOBAL:
        ef = e_f_interval(source, sys, stats) if source.mean_photons > 0 else UNIT
        return SourceWindows(source.label, gain_w, err_w, from_gain, None, ef, from_gain, free)

    from_err, free_err = _preimage(r.error_offset, r.error_slope, err_w.interval)
    return SourceWindows(
        source.label, gain_w, err_w, from_gain, from_err, None,
        intersect(from_gain, from_err), free and free_err,
    )


def _vacuum_consistent(strategy: AttackStrategy, sys: SystemParams, stats: SessionStats) -> bool:
    """Whether a vacuum decoy (present or hypothetical) would pass its tests."""
    vac = (
        sys.source(SourceLabel.VACUUM)
        if sys.has_source(SourceLabel.VACUUM)
        else SourceSpec(SourceLabel.VACUUM, 0.0)
    )
    gain_w, err_w = _windows(vac, sys, stats)
    obs = observed(strategy, vac, sys)
    return (
        obs.observed_gain in gain_w.interval.widen_ulp()
        and obs.observed_error in err_w.interval.widen_ulp()
    )


def _intersect_all(intervals: Iterable[Interval]) -> Interval:
    out = UNIT
    for i in intervals:
        out = intersect(out, i)
    return out


def analyze(strategy: AttackStrategy, sys: SystemParams, stats: SessionStats) -> FeasibilityReport:
    """Per-source windows, cross-source intersection and verdict for one strategy.

    Only the signal and decoy sources enter the verdict; a vacuum source is
    reported through ``vacuum_consistency``.
    """
    check_realizable(strategy, sys)
    active = [s for s in sys.sources if s.label is not SourceLabel.VACUUM]
    per_source = tuple(source_windows(strategy, s, sys, stats) for s in active)
    vac_ok = _vacuum_consistent(strategy, sys, stats)

    if strategy.variant is Variant.PHOTON_NUMBER_RESOLVING:
        ok = True
        for s, w in zip(active, per_source):
            obs = observed(strategy, s, sys)
            ok &= obs.observed_gain in w.gain_window.interval.widen_ulp()
            ok &= obs.observed_error in w.error_window.interval.widen_ulp()
        verdict = Verdict.FEASIBLE if ok else Verdict.INFEASIBLE
        return FeasibilityReport(strategy, per_source, None, None, verdict, vac_ok)

    cross_eta = _intersect_all(w.combined_eta_f for w in per_source)
    cross_ef = None
    feasible = not cross_eta.empty
    if strategy.variant is Variant.NAIVE_GLOBAL:
        cross_ef = _intersect_all(w.e_f_window for w in per_source)
        feasible = feasible and not cross_ef.empty
    verdict = Verdict.FEASIBLE if feasible else Verdict.INFEASIBLE
    return FeasibilityReport(strategy, per_source, cross_eta, cross_ef, verdict, vac_ok)


@dataclass(frozen=True)
class SweepRow:
    l_km: float
    source_label: SourceLabel
    eta_f_gain: Interval
    eta_f_err: Interval
    combined: Interval
    feasible: bool


def _sweep_point(sys: SystemParams, stats: SessionStats, l_km: float) -> list[SweepRow]:
    strategy = AttackStrategy(Variant.INTERCEPT_AT_DISTANCE, intercept_km=float(l_km))
    rep = analyze(strategy, sys, stats)
    feasible = rep.verdict is Verdict.FEASIBLE
    return [
        SweepRow(float(l_km), w.source_label, w.eta_f_from_gain, w.eta_f_from_error,
                 w.combined_eta_f, feasible)
        for w in rep.per_source
    ]


def sweep_intercept(
    sys: SystemParams, stats: SessionStats, l_grid: Sequence[float], workers: int = 1
) -> list[SweepRow]:
    """One row per (intercept distance, source), ordered by distance then source."""
    for l in l_grid:
        if not 0 <= l <= sys.channel.length_km:
            raise ValueError(f"grid point {l} outside [0, {sys.channel.length_km}]")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda l: _sweep_point(sys, stats, l), l_grid))
    else:
        chunks = [_sweep_point(sys, stats, l) for l in l_grid]
    return [row for chunk in chunks for row in chunk]


def make_grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive grid start, start+step, ..., stop (endpoint kept when it lands on the grid)."""
    if step <= 0:
        raise ValueError("grid step must be positive")
    if stop < start:
        raise ValueError("grid stop must be >= start")
    n = int(math.floor((stop - start) / step + 1e-9))
    grid = [round(start + i * step, 12) for i in range(n + 1)]
    return grid


def monotonicity_violations(rows: Sequence[SweepRow]) -> list[float]:
    """Distances where the verdict turns back to infeasible after having been feasible."""
    by_l: dict[float, bool] = {}
    for r in rows:
        by_l[r.l_km] = r.feasible
    seen = False
    bad = []
    for l in sorted(by_l):
        if by_l[l]:
            seen = True
        elif seen:
            bad.append(l)
    return bad


# --- threshold search over the intercept distance ---

def _combined_at(sys: SystemParams, stats: SessionStats, l_km: float) -> dict[SourceLabel, Interval]:
    strategy = AttackStrategy(Variant.INTERCEPT_AT_DISTANCE, intercept_km=l_km)
    return {
        s.label: source_windows(strategy, s, sys, stats).combined_eta_f
        for s in sys.sources
        if s.label is not SourceLabel.VACUUM
    }


def signal_window_exists(sys: SystemParams, stats: SessionStats, l_km: float) -> bool:
    return not _combined_at(sys, stats, l_km)[SourceLabel.SIGNAL].empty


def windows_overlap(sys: SystemParams, stats: SessionStats, l_km: float) -> bool:
    return not _intersect_all(_combined_at(sys, stats, l_km).values()).empty


def signal_within_decoy(sys: SystemParams, stats: SessionStats, l_km: float) -> bool:
    c = _combined_at(sys, stats, l_km)
    sig = c[SourceLabel.SIGNAL]
    dec = c.get(SourceLabel.DECOY)
    if dec is None or sig.empty:
        return False
    return sig.issubset(dec)


@dataclass(frozen=True)
class Threshold:
    """Smallest intercept distance at which a predicate holds.

    ``bracket`` = (last distance known to fail, first known to hold); its
    width is at most the requested resolution. ``km`` is the bracket midpoint,
    or None when the predicate never holds on [0, L].
    """
    name: str
    km: float | None
    bracket: tuple[float, float] | None


@dataclass(frozen=True)
class Thresholds:
    signal_existence: Threshold
    overlap: Threshold
    containment: Threshold

    @property
    def signal_existence_km(self) -> float | None:
        return self.signal_existence.km

    @property
    def overlap_km(self) -> float | None:
        return self.overlap.km

    @property
    def containment_km(self) -> float | None:
        return self.containment.km


def _first_crossing(pred, length: float, resolution: float, name: str) -> Threshold:
    step = max(resolution, length / 240.0) if length > 0 else resolution
    grid = list(np.arange(0.0, length, step)) + [length]
    prev = None
    for l in grid:
        if pred(float(l)):
            if prev is None:
                return Threshold(name, 0.0, (0.0, 0.0))
            lo, hi = prev, float(l)
            while hi - lo > resolution:
                mid = 0.5 * (lo + hi)
                if pred(mid):
                    hi = mid
                else:
                    lo = mid
            return Threshold(name, 0.5 * (lo + hi), (lo, hi))
        prev = float(l)
    return Threshold(name, None, None)


def find_thresholds(sys: SystemParams, stats: SessionStats, resolution_km: float = 0.5) -> Thresholds:
    """Locate where, moving Eve away from Alice, the attack first becomes possible.

    Three predicates are searched: the signal source admits some ``eta_f``;
    the signal and decoy windows overlap; the signal window lies inside the
    decoy window. Each is found by a coarse scan followed by bisection.
    """
    if not resolution_km > 0:
        raise ValueError("resolution_km must be positive")
    L = sys.channel.length_km
    return Thresholds(
        _first_crossing(lambda l: signal_window_exists(sys, stats, l), L, resolution_km, "signal_existence"),
        _first_crossing(lambda l: windows_overlap(sys, stats, l), L, resolution_km, "overlap"),
        _first_crossing(lambda l: signal_within_decoy(sys, stats, l), L, resolution_km, "containment"),
    )
