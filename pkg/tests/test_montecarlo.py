import numpy as np
import pytest

import lclt_lab.exactengine as ee
import lclt_lab.montecarlo as mc
from conftest import free_chain, nn_chain
from lclt_lab.errors import DegenerateDistributionError, DomainError

SPEC = mc.ChainSpec(seed=11, burn_in=200, samples=2000, thinning=2, chains=4)


def test_chain_spec_validation():
    with pytest.raises(DomainError):
        mc.ChainSpec(seed=0, burn_in=10, samples=99)
    with pytest.raises(DomainError):
        mc.ChainSpec(seed=0, burn_in=10, samples=100, chains=1)
    with pytest.raises(DomainError):
        mc.ChainSpec(seed=0, burn_in=-1, samples=100)
    with pytest.raises(DomainError):
        mc.ChainSpec(seed=0, burn_in=0, samples=100, thinning=0)


def test_samples_deterministic():
    model = nn_chain(radius=2, strength=0.1, spin=(0, 1), boundary=1)
    a = mc.total_spin_samples(model, SPEC)
    b = mc.total_spin_samples(model, SPEC)
    assert a.shape == (SPEC.chains, SPEC.samples)
    assert np.array_equal(a, b)
    c = mc.total_spin_samples(model, mc.ChainSpec(seed=12, burn_in=200, samples=2000, thinning=2, chains=4))
    assert not np.array_equal(a, c)


def test_free_sites_occupancy_binomial():
    """Three uncoupled binary sites: the total is Binomial(3, 1/2)."""
    model = free_chain(radius=1, spin=(0, 1))
    occ = mc.state_occupancy(model, mc.ChainSpec(seed=3, burn_in=50, samples=4000, chains=4))
    assert set(occ) == {0, 1, 2, 3}
    for total, want in ((0, 0.125), (1, 0.375), (2, 0.375), (3, 0.125)):
        assert occ[total] == pytest.approx(want, abs=0.02)


def test_statistics_match_exact():
    model = nn_chain(radius=2, strength=0.2, spin=(-1, 1), boundary=1)
    exact = ee.statistics(model)
    est = mc.sample_statistics(model, SPEC)
    for key, truth in (("mean", exact.mean_S), ("variance", exact.variance_S)):
        e = est[key]
        assert e.std_error > 0
        assert abs(e.value - truth) <= 4.0 * e.std_error
        assert 1.0 < e.n_effective <= SPEC.chains * SPEC.samples


def test_pmf_gap_tracks_exact():
    model = nn_chain(radius=2, strength=0.1, spin=(0, 1), boundary=None)
    truth = ee.lclt_gap(model)
    big = mc.ChainSpec(seed=7, burn_in=300, samples=6000, thinning=2, chains=4)
    est = mc.sample_pmf_gap(model, big)["gap"]
    assert abs(est.value - truth) <= max(4.0 * est.std_error, 0.02)


def test_decimated_region_sampling():
    model = nn_chain(radius=2, strength=0.1, spin=(0, 1), boundary=1, r0=2)
    est = mc.sample_statistics(model, SPEC, region="decimated")
    exact = ee.statistics(model, region="decimated")
    assert abs(est["mean"].value - exact.mean_S) <= 4.0 * est["mean"].std_error


def test_pinned_chain_is_degenerate():
    model = nn_chain(radius=1, strength=30.0, spin=(0, 1), boundary=1)
    with pytest.raises(DegenerateDistributionError):
        mc.sample_pmf_gap(model, mc.ChainSpec(seed=5, burn_in=400, samples=500, chains=2))


def test_estimate_from_series_shrinks():
    rng = np.random.default_rng(0)
    series = rng.normal(size=(4, 4000))
    est = mc._estimate_from_series(series, 4, 4000)
    assert est.value == pytest.approx(0.0, abs=0.05)
    assert est.std_error == pytest.approx(1.0 / np.sqrt(series.size), rel=0.5)
