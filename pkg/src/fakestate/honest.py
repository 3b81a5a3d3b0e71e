"""
Bob's expected detection and error probabilities without an eavesdropper.

Gains are raw per-pulse click probabilities (no basis sifting). The error
gain carries an overall factor 1/2; with that convention the ratio
``error_gain / gain`` is the QBER Alice and Bob would estimate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import SourceLabel, SourceSpec, SystemParams, poisson_weights


@dataclass(frozen=True)
class HonestExpectation:
    source_label: SourceLabel
    gain: float
    error_gain: float

    @property
    def qber(self) -> float:
        return self.error_gain / self.gain if self.gain > 0 else 0.0


def click_prob_given_n(n, eta: float, p_d: float):
    """Probability that at least one of two detectors fires for an n-photon pulse.

    ``n`` may be an integer or an integer array.
    """
    return 1.0 - (1.0 - p_d) ** 2 * (1.0 - eta) ** n


def error_click_prob_given_n(n, eta: float, p_d: float, e_d: float):
    """Error-click term for an n-photon pulse, before the overall 1/2."""
    return (
        1.0
        - (1.0 - p_d) ** 2 * (1.0 - eta) ** n
        - (1.0 - p_d) * ((1.0 - eta * e_d) ** n - (1.0 - eta + eta * e_d) ** n)
    )


def expected_gain(source: SourceSpec, eta: float, p_d: float) -> float:
    return -math.expm1(2.0 * math.log1p(-p_d) - eta * source.mean_photons)


def expected_error_gain(source: SourceSpec, eta: float, p_d: float, e_d: float) -> float:
    m = eta * source.mean_photons
    bracket = math.exp(-m * e_d) - math.exp(-m * (1.0 - e_d))
    # cancellation can leave -1e-17 where the exact value is 0
    return max(0.0, 0.5 * (expected_gain(source, eta, p_d) - (1.0 - p_d) * bracket))


def expected_gain_series(source: SourceSpec, eta: float, p_d: float) -> float:
    """Poisson-weighted sum of ``click_prob_given_n``; cross-check for the closed form."""
    w = poisson_weights(source.mean_photons)
    n = np.arange(len(w))
    return float(np.sum(w * click_prob_given_n(n, eta, p_d)))


def expected_error_gain_series(source: SourceSpec, eta: float, p_d: float, e_d: float) -> float:
    w = poisson_weights(source.mean_photons)
    n = np.arange(len(w))
    return float(0.5 * np.sum(w * error_click_prob_given_n(n, eta, p_d, e_d)))


def expectation(source: SourceSpec, sys: SystemParams) -> HonestExpectation:
    det = sys.detector
    eta = sys.eta
    return HonestExpectation(
        source_label=source.label,
        gain=expected_gain(source, eta, det.dark_count),
        error_gain=expected_error_gain(source, eta, det.dark_count, det.misalignment),
    )


def expectations(sys: SystemParams) -> list[HonestExpectation]:
    return [expectation(s, sys) for s in sys.sources]
