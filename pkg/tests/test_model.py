import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from fakestate.model import (
    ChannelParams,
    DetectorParams,
    ParameterError,
    SourceLabel,
    SourceSpec,
    SystemParams,
    overall_transmittance,
    partial_transmittance,
    photon_cutoff,
    poisson_pmf,
    poisson_weights,
    remaining_transmittance,
)


def test_pmf_vacuum_source():
    assert poisson_pmf(0, 0) == 1.0
    assert poisson_pmf(0, 3) == 0.0


@pytest.mark.parametrize("mean,n,expected", [
    # frozen from oracle.pmf
    (0.479, 0, 0.61940248469279924990),
    (0.127, 1, 0.11185317641983893144),
])
def test_pmf_values(mean, n, expected):
    assert poisson_pmf(mean, n) == pytest.approx(expected, rel=1e-14)
    assert float(oracle.pmf(mean, n)) == pytest.approx(expected, rel=1e-15)


def test_pmf_rejects_negative_mean():
    with pytest.raises(ParameterError):
        poisson_pmf(-0.1, 0)


@pytest.mark.parametrize("mean", [0.0, 0.01, 0.127, 0.479, 1.0, 2.0, 5.0, 12.0, 20.0])
def test_truncated_mass(mean):
    n_cut = photon_cutoff(mean)
    assert sum(poisson_pmf(mean, n) for n in range(n_cut + 1)) >= 1 - 1e-12


def test_thinned_poisson_identity():
    rng = np.random.default_rng(7)
    for mean, x in zip(rng.uniform(0, 2, 100), rng.uniform(0, 1, 100)):
        w = poisson_weights(mean)
        n = np.arange(len(w))
        assert abs(np.sum(w * (1 - x) ** n) - math.exp(-mean * x)) <= 1e-12


def test_overall_transmittance_reference_link():
    eta = overall_transmittance(ChannelParams(0.21, 120), DetectorParams(eta_bob=0.045))
    assert f"{eta:.3e}" == "1.359e-04"
    assert eta == pytest.approx(float(oracle.transmittance("0.21", 120, "0.045")), rel=1e-14)


def test_transmittance_zero_length():
    assert overall_transmittance(ChannelParams(0.5, 0), DetectorParams(eta_bob=0.045)) == 0.045


def test_transmittance_10km_unit_detector():
    eta = overall_transmittance(ChannelParams(0.21, 10), DetectorParams(eta_bob=1.0))
    assert eta == pytest.approx(0.61659500186148217735, rel=1e-14)


def test_partial_transmittance():
    ch = ChannelParams(0.21, 120)
    assert partial_transmittance(ch, 120) == pytest.approx(3.0199517204020160751e-3, rel=1e-14)
    assert partial_transmittance(ch, 0) == 1.0
    with pytest.raises(ParameterError):
        partial_transmittance(ch, 120.5)


# 10^x amplifies the rounding of the exponent by ln(10) x (~6 at 120 km), so
# the product of two rounded powers is held to 8 ulps rather than 2.
COMPOSITION_ULPS = 8


@pytest.mark.parametrize("l", np.linspace(0, 120, 241))
def test_composition_law(l):
    ch, det = ChannelParams(0.21, 120), DetectorParams()
    composed = partial_transmittance(ch, l) * partial_transmittance(ch, 120 - l) * det.eta_bob
    eta = overall_transmittance(ch, det)
    assert abs(composed - eta) <= COMPOSITION_ULPS * math.ulp(eta)
    assert partial_transmittance(ch, l) * remaining_transmittance(ch, det, l) == pytest.approx(eta, rel=2e-15)


@given(st.floats(0, 1), st.floats(0, 200))
@settings(max_examples=200)
def test_transmittance_in_unit_interval(eta_b, length):
    eta = overall_transmittance(ChannelParams(0.21, length), DetectorParams(eta_bob=eta_b))
    assert 0 <= eta <= eta_b


def test_type_invariants():
    with pytest.raises(ParameterError):
        ChannelParams(-0.1, 10)
    with pytest.raises(ParameterError):
        DetectorParams(misalignment=0.6)
    with pytest.raises(ParameterError):
        DetectorParams(dark_count=1.5)
    with pytest.raises(ParameterError):
        SourceSpec(SourceLabel.VACUUM, 0.1)
    with pytest.raises(ParameterError):
        SystemParams(sources=[SourceSpec("decoy", 0.1)])
    with pytest.raises(ParameterError):
        SystemParams(sources=[SourceSpec("signal", 0.5), SourceSpec("signal", 0.4)])


def test_system_lookup(ref_sys):
    assert ref_sys.source("decoy").mean_photons == 0.127
    assert not ref_sys.has_source(SourceLabel.VACUUM)
    with pytest.raises(KeyError):
        ref_sys.source("vacuum")
