"""Feasibility of fake-state (detector-control) attacks on decoy-state QKD."""
from .attacks import AttackStrategy, ObservedStats, RealizabilityError, Variant, observed
from .feasibility import FeasibilityReport, Verdict, analyze, find_thresholds, sweep_intercept
from .finite_stats import AcceptanceWindow, Interval, SessionStats, acceptance_window, deviation_bound, intersect
from .honest import HonestExpectation, expectation, expected_error_gain, expected_gain
from .model import (
    ChannelParams,
    DetectorParams,
    ParameterError,
    SourceLabel,
    SourceSpec,
    SystemParams,
    overall_transmittance,
    partial_transmittance,
    poisson_pmf,
)
from .montecarlo import TrialConfig, fluctuation_check, simulate_attack, simulate_honest

__version__ = "0.1.0"
