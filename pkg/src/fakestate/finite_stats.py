"""
Finite-sample acceptance windows and the closed-interval algebra used to
combine them.

Alice and Bob accept an observed rate p' when |p' - p| <= delta with
delta = sqrt(4 p ln(1/q) / N), the deviation at which the fluctuation
probability bound exp(-N delta^2 / 4p) equals q.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .model import ParameterError, SourceLabel


@dataclass(frozen=True)
class SessionStats:
    """Pulse budget and confidence level of a key session.

    Attributes
    ----------
    pulse_count : int
        Total pulses N emitted in the session.
    confidence_exponent : float
        ln(1/q), where q bounds the probability of a larger fluctuation.
    source_pulses : mapping, optional
        Per-source pulse-budget overrides. Sources absent from the mapping
        use ``pulse_count``.
    """
    pulse_count: int = 10**10
    confidence_exponent: float = 25.0
    source_pulses: Mapping[SourceLabel, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.pulse_count < 1:
            raise ParameterError(f"pulse_count must be >= 1, got {self.pulse_count}")
        if not self.confidence_exponent > 0:
            raise ParameterError(f"confidence_exponent must be > 0, got {self.confidence_exponent}")
        overrides = {SourceLabel(k): int(v) for k, v in dict(self.source_pulses).items()}
        for k, v in overrides.items():
            if v < 1:
                raise ParameterError(f"pulse budget for {k.value} must be >= 1, got {v}")
        object.__setattr__(self, "source_pulses", overrides)

    def pulses_for(self, label: SourceLabel | None) -> int:
        if label is None:
            return self.pulse_count
        return self.source_pulses.get(SourceLabel(label), self.pulse_count)


class Interval:
    """Closed real interval [lo, hi], or the empty set.

    Reading ``lo``/``hi`` of an empty interval raises ``ValueError``.
    """
    __slots__ = ("_lo", "_hi", "_empty")

    def __init__(self, lo: float = 0.0, hi: float = 0.0, empty: bool = False):
        if not empty:
            if math.isnan(lo) or math.isnan(hi):
                raise ValueError("interval endpoints must not be NaN")
            if lo > hi:
                raise ValueError(f"lo > hi ({lo} > {hi}); use Interval.empty_set()")
        self._lo = float(lo)
        self._hi = float(hi)
        self._empty = bool(empty)

    @classmethod
    def empty_set(cls) -> "Interval":
        return cls(empty=True)

    @classmethod
    def from_bounds(cls, lo: float, hi: float) -> "Interval":
        """[lo, hi], or empty when lo > hi."""
        return cls.empty_set() if lo > hi else cls(lo, hi)

    @property
    def empty(self) -> bool:
        return self._empty

    @property
    def lo(self) -> float:
        if self._empty:
            raise ValueError("empty interval has no lower bound")
        return self._lo

    @property
    def hi(self) -> float:
        if self._empty:
            raise ValueError("empty interval has no upper bound")
        return self._hi

    @property
    def width(self) -> float:
        return 0.0 if self._empty else self._hi - self._lo

    def __contains__(self, x: float) -> bool:
        return not self._empty and self._lo <= x <= self._hi

    def issubset(self, other: "Interval") -> bool:
        if self._empty:
            return True
        return not other.empty and other.lo <= self._lo and self._hi <= other.hi

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Interval):
            return NotImplemented
        if self._empty or other._empty:
            return self._empty == other._empty
        return self._lo == other._lo and self._hi == other._hi

    def __hash__(self) -> int:
        return hash((True,)) if self._empty else hash((self._lo, self._hi))

    def __repr__(self) -> str:
        return "Interval(empty)" if self._empty else f"Interval({self._lo!r}, {self._hi!r})"

    def clamp(self, lo: float = 0.0, hi: float = 1.0) -> "Interval":
        return intersect(self, Interval(lo, hi))

    def widen_ulp(self) -> "Interval":
        """Round both endpoints outward by one unit in the last place.

        Zero endpoints are exact (clamped or noiseless) and stay put.
        """
        if self._empty:
            return self
        lo = math.nextafter(self._lo, -math.inf) if self._lo != 0 else 0.0
        hi = math.nextafter(self._hi, math.inf) if self._hi != 0 else 0.0
        return Interval(lo, hi)

    def to_dict(self) -> dict:
        if self._empty:
            return {"empty": True, "lo": None, "hi": None}
        return {"empty": False, "lo": self._lo, "hi": self._hi}


def intersect(a: Interval, b: Interval) -> Interval:
    if a.empty or b.empty:
        return Interval.empty_set()
    return Interval.from_bounds(max(a.lo, b.lo), min(a.hi, b.hi))


@dataclass(frozen=True)
class AcceptanceWindow:
    center: float
    half_width: float
    interval: Interval


def deviation_bound(p: float, stats: SessionStats, label: SourceLabel | None = None) -> float:
    """Tolerated deviation delta = sqrt(4 p ln(1/q) / N) of an observed rate."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"probability must be in [0, 1], got {p}")
    n = stats.pulses_for(label)
    return math.sqrt(p) * math.sqrt(4.0 * stats.confidence_exponent / n)


def acceptance_window(p: float, stats: SessionStats, label: SourceLabel | None = None) -> AcceptanceWindow:
    delta = deviation_bound(p, stats, label)
    window = Interval(max(p - delta, 0.0), min(p + delta, 1.0))
    return AcceptanceWindow(center=p, half_width=delta, interval=window)
