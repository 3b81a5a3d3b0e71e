"""
Bob's observed statistics under the four fake-state strategies.

In every strategy Eve measures Alice's pulse, resends a fresh state with
probability ``eta_f`` and forces a click on Bob's side only when his basis
matches hers (probability 1/2). The strategies differ in what Eve can see
and where she stands:

NAIVE_GLOBAL
    Threshold detection at Alice's output; one (eta_f, e_f) pair for every
    non-vacuum pulse, nothing sent on vacuum.
PHOTON_NUMBER_RESOLVING
    Per-photon-number resend and flip probabilities that reproduce the
    honest channel exactly.
VACUUM_SPLIT
    Threshold detection; on vacuum Eve sends random bits with probability
    4 p_d - 2 p_d^2, on non-vacuum she resends with ``eta_f`` and flips with e_d.
INTERCEPT_AT_DISTANCE
    VACUUM_SPLIT performed ``l`` km down the fiber, where the photon
    statistics are Poisson with mean thinned by 10^(-alpha l / 10).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .honest import click_prob_given_n, error_click_prob_given_n
from .model import (
    ParameterError,
    SourceLabel,
    SourceSpec,
    SystemParams,
    partial_transmittance,
    photon_cutoff,
    poisson_weights,
)


class RealizabilityError(ValueError):
    """An attack would need a resend probability above 1."""


class Variant(str, Enum):
    NAIVE_GLOBAL = "naive"
    PHOTON_NUMBER_RESOLVING = "pnr"
    VACUUM_SPLIT = "vacuum-split"
    INTERCEPT_AT_DISTANCE = "intercept"


@dataclass(frozen=True)
class AttackStrategy:
    """Eve's scheme and its free parameters.

    ``flip_prob`` is only read by NAIVE_GLOBAL; the vacuum-split family flips
    with the detector misalignment e_d. ``intercept_km`` is only read by
    INTERCEPT_AT_DISTANCE.
    """
    variant: Variant
    resend_prob: float = 0.0
    flip_prob: float = 0.0
    intercept_km: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", Variant(self.variant))
        for name in ("resend_prob", "flip_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"{name} must be in [0, 1], got {v}")
        if not self.intercept_km >= 0:
            raise ParameterError(f"intercept_km must be >= 0, got {self.intercept_km}")

    @property
    def uses_vacuum_rule(self) -> bool:
        return self.variant is not Variant.NAIVE_GLOBAL

    def describe(self) -> str:
        if self.variant is Variant.INTERCEPT_AT_DISTANCE:
            return f"{self.variant.value}(l={self.intercept_km:g} km)"
        return self.variant.value


@dataclass(frozen=True)
class ObservedStats:
    source_label: SourceLabel
    observed_gain: float
    observed_error: float

    @property
    def qber(self) -> float:
        return self.observed_error / self.observed_gain if self.observed_gain > 0 else 0.0


@dataclass(frozen=True)
class PerPhotonAttack:
    n: int
    resend_prob_n: float
    flip_prob_n: float
    vacuum_prep_prob: float

    @property
    def realizable(self) -> bool:
        return 0.0 <= self.resend_prob_n <= 1.0


@dataclass(frozen=True)
class AffineResponse:
    """Observed gain and error as affine functions of ``eta_f``."""
    gain_offset: float
    gain_slope: float
    error_offset: float
    error_slope: float

    def gain(self, eta_f: float) -> float:
        return self.gain_offset + self.gain_slope * eta_f

    def error(self, eta_f: float) -> float:
        return self.error_offset + self.error_slope * eta_f


def vacuum_prep_prob(p_d: float) -> float:
    """Probability 4 p_d - 2 p_d^2 with which Eve answers an empty pulse."""
    return 4.0 * p_d - 2.0 * p_d * p_d


def dark_click_prob(p_d: float) -> float:
    # 1 - (1 - p_d)^2 without cancellation
    return -math.expm1(2.0 * math.log1p(-p_d))


def _nonvacuum(mean: float) -> float:
    return -math.expm1(-mean)


def incoming_mean(source: SourceSpec, strategy: AttackStrategy, sys: SystemParams) -> float:
    """Mean photon number at Eve's measurement point."""
    if strategy.variant is Variant.INTERCEPT_AT_DISTANCE:
        return partial_transmittance(sys.channel, strategy.intercept_km) * source.mean_photons
    return source.mean_photons


def _vacuum_split_response(mean: float, p_d: float, e_d: float) -> AffineResponse:
    vac = math.exp(-mean) * dark_click_prob(p_d)
    half_nonvac = 0.5 * _nonvacuum(mean)
    return AffineResponse(vac, half_nonvac, 0.5 * vac, e_d * half_nonvac)


def affine_response(strategy: AttackStrategy, source: SourceSpec, sys: SystemParams) -> AffineResponse:
    """Observed (gain, error) as affine maps of ``eta_f`` for the threshold strategies."""
    v = strategy.variant
    if v is Variant.PHOTON_NUMBER_RESOLVING:
        raise ValueError("photon-number-resolving attack has no single eta_f")
    if v is Variant.NAIVE_GLOBAL:
        half_nonvac = 0.5 * _nonvacuum(source.mean_photons)
        return AffineResponse(0.0, half_nonvac, 0.0, strategy.flip_prob * half_nonvac)
    mean = incoming_mean(source, strategy, sys)
    return _vacuum_split_response(mean, sys.detector.dark_count, sys.detector.misalignment)


def naive_observed(source: SourceSpec, eta_f: float, e_f: float) -> ObservedStats:
    gain = 0.5 * eta_f * _nonvacuum(source.mean_photons)
    return ObservedStats(source.label, gain, e_f * gain)


def vacuum_split_observed(source: SourceSpec, eta_f: float, p_d: float, e_d: float) -> ObservedStats:
    r = _vacuum_split_response(source.mean_photons, p_d, e_d)
    return ObservedStats(source.label, r.gain(eta_f), r.error(eta_f))


def intercept_observed(source: SourceSpec, eta_f: float, l_km: float, sys: SystemParams) -> ObservedStats:
    m = partial_transmittance(sys.channel, l_km) * source.mean_photons
    r = _vacuum_split_response(m, sys.detector.dark_count, sys.detector.misalignment)
    return ObservedStats(source.label, r.gain(eta_f), r.error(eta_f))


def pnr_attack_parameters(n: int, eta: float, p_d: float, e_d: float) -> PerPhotonAttack:
    """Per-photon-number resend/flip probabilities that mimic the honest channel.

    The result is returned even when ``resend_prob_n > 1``; check ``realizable``.
    """
    if n < 0:
        raise ParameterError(f"photon number must be >= 0, got {n}")
    prep = vacuum_prep_prob(p_d)
    if n == 0:
        # empty pulse: random bit, so half the induced clicks are errors
        return PerPhotonAttack(0, prep, 0.5, prep)
    resend = 2.0 * float(click_prob_given_n(n, eta, p_d))
    err = float(error_click_prob_given_n(n, eta, p_d, e_d))
    flip = err / resend if resend > 0 else 0.0
    return PerPhotonAttack(n, resend, flip, prep)


def pnr_schedule(mean: float, eta: float, p_d: float, e_d: float) -> list[PerPhotonAttack]:
    return [pnr_attack_parameters(n, eta, p_d, e_d) for n in range(photon_cutoff(mean) + 1)]


def pnr_observed(source: SourceSpec, eta: float, p_d: float, e_d: float) -> ObservedStats:
    schedule = pnr_schedule(source.mean_photons, eta, p_d, e_d)
    bad = [a.n for a in schedule if not a.realizable]
    if bad:
        raise RealizabilityError(f"resend probability exceeds 1 for photon numbers {bad}")
    w = poisson_weights(source.mean_photons, len(schedule) - 1)
    resend = np.array([a.resend_prob_n for a in schedule])
    flip = np.array([a.flip_prob_n for a in schedule])
    gain = 0.5 * resend
    return ObservedStats(source.label, float(w @ gain), float(w @ (flip * gain)))


def observed(strategy: AttackStrategy, source: SourceSpec, sys: SystemParams) -> ObservedStats:
    """Dispatch to the strategy-specific observed statistics."""
    det = sys.detector
    v = strategy.variant
    if v is Variant.NAIVE_GLOBAL:
        return naive_observed(source, strategy.resend_prob, strategy.flip_prob)
    if v is Variant.PHOTON_NUMBER_RESOLVING:
        return pnr_observed(source, sys.eta, det.dark_count, det.misalignment)
    if v is Variant.VACUUM_SPLIT:
        return vacuum_split_observed(source, strategy.resend_prob, det.dark_count, det.misalignment)
    return intercept_observed(source, strategy.resend_prob, strategy.intercept_km, sys)


def check_realizable(strategy: AttackStrategy, sys: SystemParams) -> None:
    """Raise ``RealizabilityError`` if the strategy needs unphysical parameters."""
    if strategy.variant is not Variant.PHOTON_NUMBER_RESOLVING:
        return
    det = sys.detector
    for s in sys.sources:
        for a in pnr_schedule(s.mean_photons, sys.eta, det.dark_count, det.misalignment):
            if not a.realizable:
                raise RealizabilityError(
                    f"{s.label.value}: resend probability {a.resend_prob_n:.4g} > 1 at n={a.n}"
                )

