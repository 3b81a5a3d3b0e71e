"""
Pulse-level Monte Carlo of honest and attacked sessions.

Each pulse draws a source, a photon number n from the source's Poisson law
(thinned when Eve sits down the fiber), and one of three outcomes
{no click, correct click, error click} with per-n probabilities. Pulses are
i.i.d., so a block of pulses is sampled exactly by drawing the multinomial
photon-number histogram and then binomial click/error counts per n; this is
distributionally identical to looping over pulses and runs at any N.

Reproducibility: the pulse range is cut into fixed blocks of
``BLOCK_PULSES``; every (block, source) pair owns an RNG stream derived from
the master seed, so counts do not depend on how many workers process blocks.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .attacks import AttackStrategy, Variant, check_realizable, incoming_mean, pnr_schedule, vacuum_prep_prob
from .finite_stats import SessionStats, deviation_bound
from .honest import click_prob_given_n, error_click_prob_given_n, expected_gain
from .model import ParameterError, SourceLabel, SourceSpec, SystemParams, photon_cutoff, poisson_weights

BLOCK_PULSES = 1 << 24
_ALLOC_STREAM = 0xFFFF


@dataclass(frozen=True)
class TrialConfig:
    """Monte Carlo run settings.

    ``source_mix`` maps source labels to the fraction of pulses drawn from
    each; None splits pulses evenly over the system's sources.
    """
    pulses: int = 10**8
    seed: int = 0
    source_mix: Mapping[SourceLabel, float] | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        if self.pulses < 1:
            raise ParameterError(f"pulses must be >= 1, got {self.pulses}")
        if not 0 <= self.seed < 2**64:
            raise ParameterError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.source_mix is not None:
            mix = {SourceLabel(k): float(v) for k, v in dict(self.source_mix).items()}
            if any(v < 0 for v in mix.values()):
                raise ParameterError("source fractions must be non-negative")
            if abs(sum(mix.values()) - 1.0) > 1e-12:
                raise ParameterError(f"source fractions must sum to 1, got {sum(mix.values())!r}")
            object.__setattr__(self, "source_mix", mix)

    def mix_for(self, sys: SystemParams) -> np.ndarray:
        if self.source_mix is None:
            return np.full(len(sys.sources), 1.0 / len(sys.sources))
        unknown = set(self.source_mix) - {s.label for s in sys.sources}
        if unknown:
            raise ParameterError(f"mix names unknown sources: {sorted(u.value for u in unknown)}")
        return np.array([self.source_mix.get(s.label, 0.0) for s in sys.sources])


@dataclass(frozen=True)
class SourceCounts:
    label: SourceLabel
    sent: int
    detections: int
    errors: int

    @property
    def gain(self) -> float:
        return self.detections / self.sent if self.sent else 0.0

    @property
    def gain_se(self) -> float:
        g = self.gain
        return math.sqrt(g * (1 - g) / self.sent) if self.sent else 0.0

    @property
    def error_rate(self) -> float:
        return self.errors / self.sent if self.sent else 0.0

    @property
    def error_rate_se(self) -> float:
        e = self.error_rate
        return math.sqrt(e * (1 - e) / self.sent) if self.sent else 0.0

    @property
    def qber(self) -> float:
        return self.errors / self.detections if self.detections else 0.0

    @property
    def qber_se(self) -> float:
        q = self.qber
        return math.sqrt(q * (1 - q) / self.detections) if self.detections else 0.0


@dataclass(frozen=True)
class EmpiricalStats:
    per_source: tuple[SourceCounts, ...]

    def source(self, label: SourceLabel | str) -> SourceCounts:
        label = SourceLabel(label)
        for c in self.per_source:
            if c.label is label:
                return c
        raise KeyError(label.value)


@dataclass(frozen=True)
class _OutcomeTable:
    weights: np.ndarray  # photon-number pmf, tail folded into the last bin
    click: np.ndarray
    error: np.ndarray


def _table(mean: float, click: np.ndarray, error: np.ndarray) -> _OutcomeTable:
    w = poisson_weights(mean, len(click) - 1)
    w[-1] += max(0.0, 1.0 - w.sum())
    w /= w.sum()
    return _OutcomeTable(w, np.clip(click, 0.0, 1.0), np.clip(error, 0.0, 1.0))


def honest_table(source: SourceSpec, sys: SystemParams) -> _OutcomeTable:
    det = sys.detector
    n = np.arange(photon_cutoff(source.mean_photons) + 1)
    click = click_prob_given_n(n, sys.eta, det.dark_count)
    error = 0.5 * error_click_prob_given_n(n, sys.eta, det.dark_count, det.misalignment)
    return _table(source.mean_photons, click, error)


def attack_table(strategy: AttackStrategy, source: SourceSpec, sys: SystemParams) -> _OutcomeTable:
    det = sys.detector
    mean = incoming_mean(source, strategy, sys)
    if strategy.variant is Variant.PHOTON_NUMBER_RESOLVING:
        sched = pnr_schedule(mean, sys.eta, det.dark_count, det.misalignment)
        click = np.array([0.5 * a.resend_prob_n for a in sched])
        error = np.array([0.5 * a.resend_prob_n * a.flip_prob_n for a in sched])
        return _table(mean, click, error)

    size = photon_cutoff(mean) + 1
    flip = strategy.flip_prob if strategy.variant is Variant.NAIVE_GLOBAL else det.misalignment
    click = np.full(size, 0.5 * strategy.resend_prob)
    error = np.full(size, 0.5 * strategy.resend_prob * flip)
    if strategy.uses_vacuum_rule:
        click[0] = 0.5 * vacuum_prep_prob(det.dark_count)
        error[0] = 0.5 * click[0]
    else:
        click[0] = error[0] = 0.0
    return _table(mean, click, error)


def _sample_block(table: _OutcomeTable, pulses: int, rng: np.random.Generator) -> tuple[int, int]:
    if pulses == 0:
        return 0, 0
    per_n = rng.multinomial(pulses, table.weights)
    clicks = rng.binomial(per_n, table.click)
    with np.errstate(divide="ignore", invalid="ignore"):
        p_err = np.where(table.click > 0, table.error / table.click, 0.0)
    errors = rng.binomial(clicks, np.clip(p_err, 0.0, 1.0))
    return int(clicks.sum()), int(errors.sum())


def _run(tables: list[_OutcomeTable], sys: SystemParams, trial: TrialConfig) -> EmpiricalStats:
    mix = trial.mix_for(sys)
    n_blocks = -(-trial.pulses // BLOCK_PULSES)

    def block(b: int) -> np.ndarray:
        size = min(BLOCK_PULSES, trial.pulses - b * BLOCK_PULSES)
        alloc = np.random.default_rng([trial.seed, b, _ALLOC_STREAM]).multinomial(size, mix)
        out = np.zeros((len(tables), 3), dtype=np.int64)
        for i, (tab, k) in enumerate(zip(tables, alloc)):
            rng = np.random.default_rng([trial.seed, b, i])
            d, e = _sample_block(tab, int(k), rng)
            out[i] = (k, d, e)
        return out

    if trial.workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=trial.workers) as pool:
            parts = list(pool.map(block, range(n_blocks)))
    else:
        parts = [block(b) for b in range(n_blocks)]
    total = np.sum(parts, axis=0)
    return EmpiricalStats(tuple(
        SourceCounts(s.label, int(t[0]), int(t[1]), int(t[2])) for s, t in zip(sys.sources, total)
    ))


def simulate_honest(sys: SystemParams, trial: TrialConfig) -> EmpiricalStats:
    return _run([honest_table(s, sys) for s in sys.sources], sys, trial)


def simulate_attack(strategy: AttackStrategy, sys: SystemParams, trial: TrialConfig) -> EmpiricalStats:
    check_realizable(strategy, sys)
    return _run([attack_table(strategy, s, sys) for s in sys.sources], sys, trial)


@dataclass(frozen=True)
class FluctuationReport:
    source_label: SourceLabel
    expected_rate: float
    half_width: float
    rates: np.ndarray = field(repr=False)
    outside_fraction: float
    bound: float
    empirical_std: float
    predicted_std: float

    @property
    def trials(self) -> int:
        return len(self.rates)

    @property
    def std_ratio(self) -> float:
        return self.empirical_std / self.predicted_std if self.predicted_std > 0 else math.nan


def fluctuation_check(
    sys: SystemParams,
    stats: SessionStats,
    trials: int,
    scaled_n: int,
    seed: int = 0,
    source: SourceLabel | str = SourceLabel.SIGNAL,
) -> FluctuationReport:
    """Run ``trials`` honest single-source sessions of ``scaled_n`` pulses.

    Reports how often the empirical gain falls outside the acceptance
    window recomputed for ``scaled_n`` pulses, next to the bound
    q = exp(-confidence_exponent), and compares the spread of the gains
    with the binomial value sqrt(p (1 - p) / scaled_n).
    """
    if trials < 1 or scaled_n < 1:
        raise ParameterError("trials and scaled_n must be positive")
    spec = sys.source(source)
    p = expected_gain(spec, sys.eta, sys.detector.dark_count)
    scaled = SessionStats(pulse_count=scaled_n, confidence_exponent=stats.confidence_exponent)
    delta = deviation_bound(p, scaled)
    seeds = np.random.SeedSequence(seed).generate_state(trials, dtype=np.uint64)
    rates = np.empty(trials)
    for i, s in enumerate(seeds):
        trial = TrialConfig(pulses=scaled_n, seed=int(s), source_mix={spec.label: 1.0})
        rates[i] = simulate_honest(sys, trial).source(spec.label).gain
    outside = float(np.mean(np.abs(rates - p) > delta))
    emp_std = float(np.std(rates, ddof=1)) if trials > 1 else 0.0
    return FluctuationReport(
        source_label=spec.label,
        expected_rate=p,
        half_width=delta,
        rates=rates,
        outside_fraction=outside,
        bound=math.exp(-stats.confidence_exponent),
        empirical_std=emp_std,
        predicted_std=math.sqrt(p * (1 - p) / scaled_n),
    )
