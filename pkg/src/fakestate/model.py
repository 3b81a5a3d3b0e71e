"""
Physical parameters and Poisson photon-number utilities.

Every other module in the package consumes the dataclasses defined here.
Units: attenuation in dB/km, lengths in km, all other quantities are
dimensionless probabilities or mean photon numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.special import pdtrc

# Poisson series truncation rule.
TAIL_MASS = 1e-15
N_CUT_MAX = 200


class ParameterError(ValueError):
    """A parameter lies outside its physical domain."""


class SourceLabel(str, Enum):
    SIGNAL = "signal"
    DECOY = "decoy"
    VACUUM = "vacuum"


@dataclass(frozen=True)
class ChannelParams:
    """Fiber between Alice and Bob.

    Attributes
    ----------
    alpha_db_per_km : float
        Attenuation coefficient (dB/km).
    length_km : float
        Alice-Bob fiber length (km).
    """
    alpha_db_per_km: float = 0.21
    length_km: float = 120.0

    def __post_init__(self) -> None:
        if not self.alpha_db_per_km >= 0:
            raise ParameterError(f"alpha_db_per_km must be >= 0, got {self.alpha_db_per_km}")
        if not self.length_km >= 0:
            raise ParameterError(f"length_km must be >= 0, got {self.length_km}")


@dataclass(frozen=True)
class DetectorParams:
    """Bob's two-detector receiver.

    Attributes
    ----------
    eta_bob : float
        Receiver optics times detector efficiency, in [0, 1].
    dark_count : float
        Dark-count probability per detector per gate, in [0, 1].
    misalignment : float
        Probability a photon reaches the wrong detector, in [0, 1/2].
    """
    eta_bob: float = 0.045
    dark_count: float = 8.5e-7
    misalignment: float = 0.033

    def __post_init__(self) -> None:
        for name in ("eta_bob", "dark_count"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"{name} must be in [0, 1], got {v}")
        if not 0.0 <= self.misalignment <= 0.5:
            raise ParameterError(f"misalignment must be in [0, 1/2], got {self.misalignment}")


@dataclass(frozen=True)
class SourceSpec:
    label: SourceLabel
    mean_photons: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "label", SourceLabel(self.label))
        if not self.mean_photons >= 0:
            raise ParameterError(f"mean_photons must be >= 0, got {self.mean_photons}")
        if self.label is SourceLabel.VACUUM and self.mean_photons != 0:
            raise ParameterError("vacuum source must have mean_photons = 0")


def _default_sources() -> tuple[SourceSpec, ...]:
    return (SourceSpec(SourceLabel.SIGNAL, 0.479), SourceSpec(SourceLabel.DECOY, 0.127))


@dataclass(frozen=True)
class SystemParams:
    """Complete link description. Defaults are the 120 km reference link."""
    channel: ChannelParams = field(default_factory=ChannelParams)
    detector: DetectorParams = field(default_factory=DetectorParams)
    sources: Sequence[SourceSpec] = field(default_factory=_default_sources)

    def __post_init__(self) -> None:
        sources = tuple(self.sources)
        object.__setattr__(self, "sources", sources)
        labels = [s.label for s in sources]
        if SourceLabel.SIGNAL not in labels:
            raise ParameterError("at least one signal source is required")
        if len(set(labels)) != len(labels):
            raise ParameterError(f"source labels must be unique, got {[l.value for l in labels]}")

    def source(self, label: SourceLabel | str) -> SourceSpec:
        label = SourceLabel(label)
        for s in self.sources:
            if s.label is label:
                return s
        raise KeyError(label.value)

    def has_source(self, label: SourceLabel | str) -> bool:
        return any(s.label is SourceLabel(label) for s in self.sources)

    @property
    def eta(self) -> float:
        return overall_transmittance(self.channel, self.detector)


def poisson_pmf(mean: float, n: int) -> float:
    """Probability that a Poisson source of the given mean emits n photons."""
    if mean < 0:
        raise ParameterError(f"Poisson mean must be >= 0, got {mean}")
    if n < 0:
        raise ParameterError(f"photon number must be >= 0, got {n}")
    if mean == 0:
        return 1.0 if n == 0 else 0.0
    return math.exp(n * math.log(mean) - mean - math.lgamma(n + 1))


def photon_cutoff(mean: float) -> int:
    """Largest photon number kept when summing a Poisson series.

    Returns the first n whose tail mass P(N > n) drops below ``TAIL_MASS``,
    capped at ``N_CUT_MAX``.
    """
    if mean < 0:
        raise ParameterError(f"Poisson mean must be >= 0, got {mean}")
    for n in range(N_CUT_MAX + 1):
        if pdtrc(n, mean) < TAIL_MASS:
            return n
    return N_CUT_MAX


def poisson_weights(mean: float, n_max: int | None = None) -> np.ndarray:
    """Vector of ``poisson_pmf(mean, n)`` for n = 0..n_max."""
    if n_max is None:
        n_max = photon_cutoff(mean)
    return np.array([poisson_pmf(mean, n) for n in range(n_max + 1)])


def overall_transmittance(channel: ChannelParams, detector: DetectorParams) -> float:
    """eta = eta_B * 10^(-alpha L / 10)."""
    return detector.eta_bob * 10.0 ** (-channel.alpha_db_per_km * channel.length_km / 10.0)


def partial_transmittance(channel: ChannelParams, l_km: float) -> float:
    """Fiber transmittance over the first ``l_km`` kilometres from Alice."""
    if not 0 <= l_km <= channel.length_km:
        raise ParameterError(f"l_km must be in [0, {channel.length_km}], got {l_km}")
    return 10.0 ** (-channel.alpha_db_per_km * l_km / 10.0)


def remaining_transmittance(channel: ChannelParams, detector: DetectorParams, l_km: float) -> float:
    """Transmittance from a point ``l_km`` from Alice through Bob's detector."""
    if not 0 <= l_km <= channel.length_km:
        raise ParameterError(f"l_km must be in [0, {channel.length_km}], got {l_km}")
    return detector.eta_bob * 10.0 ** (-channel.alpha_db_per_km * (channel.length_km - l_km) / 10.0)
