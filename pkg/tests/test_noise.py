"""Tests for stochastic error sampling: determinism, statistics, serialization."""

import numpy as np
import pytest

from msctk import (
    ErrorChain,
    ErrorHistory,
    ErrorRates,
    build_lattice,
    sample_chain,
    sample_history,
)


@pytest.fixture(scope="module")
def lat():
    return build_lattice(2, 2)


# ---------------------------------------------------------------- validation


@pytest.mark.parametrize("bad", [-0.1, 1.0, 1.5])
def test_rates_rejects_out_of_range(bad):
    with pytest.raises(ValueError, match="must lie in"):
        ErrorRates(p_qp=bad)
    with pytest.raises(ValueError, match="must lie in"):
        ErrorRates(p_b=bad)
    with pytest.raises(ValueError, match="must lie in"):
        ErrorRates(p_m=bad)


def test_history_rejects_zero_rounds(lat):
    with pytest.raises(ValueError, match="rounds"):
        sample_history(lat, ErrorRates(p_qp=0.1), rounds=0, rng_seed=1)


# --------------------------------------------------------------- determinism


def test_chain_sampling_is_deterministic(lat):
    rates = ErrorRates(p_qp=0.3, p_b=0.2)
    a = sample_chain(lat, rates, rng_seed=42)
    b = sample_chain(lat, rates, rng_seed=42)
    assert np.array_equal(a.qp_sites, b.qp_sites)
    assert np.array_equal(a.bilinear_edges, b.bilinear_edges)
    c = sample_chain(lat, rates, rng_seed=43)
    assert not (
        np.array_equal(a.qp_sites, c.qp_sites)
        and np.array_equal(a.bilinear_edges, c.bilinear_edges)
    )


def test_history_rounds_are_independent_streams(lat):
    rates = ErrorRates(p_qp=0.4, p_b=0.3, p_m=0.2)
    h = sample_history(lat, rates, rounds=4, rng_seed=7)
    assert h.rounds == 4
    assert h.measurement_faults.shape == (4, lat.n_plaquettes)
    # First round of a multi-round history equals the single-round draw.
    single = sample_chain(lat, rates, rng_seed=7)
    assert np.array_equal(h.chains[0].qp_sites, single.qp_sites)
    assert np.array_equal(h.chains[0].bilinear_edges, single.bilinear_edges)
    # Distinct rounds should not be identical copies.
    assert any(
        not np.array_equal(h.chains[0].qp_sites, h.chains[t].qp_sites)
        for t in range(1, 4)
    )


# ---------------------------------------------------------------- statistics


def test_event_counts_match_binomial_within_three_sigma(lat):
    p = 0.15
    n_draws = 400
    total_sites = n_draws * lat.n_sites
    total_edges = n_draws * lat.n_edges
    hits_sites = 0
    hits_edges = 0
    for seed in range(n_draws):
        ch = sample_chain(lat, ErrorRates(p_qp=p, p_b=p), rng_seed=seed)
        hits_sites += int(ch.qp_sites.sum())
        hits_edges += int(ch.bilinear_edges.sum())
    for hits, total in ((hits_sites, total_sites), (hits_edges, total_edges)):
        sigma = np.sqrt(total * p * (1 - p))
        assert abs(hits - total * p) < 3 * sigma


def test_site_occupation_is_uniform_chi_square(lat):
    # Every site should be flagged with the same probability; a chi-square
    # statistic over per-site counts stays near its dof for uniform sampling.
    p = 0.25
    n_draws = 600
    counts = np.zeros(lat.n_sites)
    for seed in range(n_draws):
        counts += sample_chain(lat, ErrorRates(p_qp=p), rng_seed=1000 + seed).qp_sites
    expected = n_draws * p
    chi2 = float(((counts - expected) ** 2 / (expected * (1 - p))).sum())
    dof = lat.n_sites
    # chi2 ~ dof +- sqrt(2*dof); allow a generous 5-sigma band.
    assert abs(chi2 - dof) < 5 * np.sqrt(2 * dof)


def test_measurement_fault_rate(lat):
    p_m = 0.2
    rounds = 50
    h = sample_history(lat, ErrorRates(p_m=p_m), rounds=rounds, rng_seed=3)
    total = rounds * lat.n_plaquettes
    hits = int(h.measurement_faults.sum())
    sigma = np.sqrt(total * p_m * (1 - p_m))
    assert abs(hits - total * p_m) < 4 * sigma


# -------------------------------------------------------------- serialization


def test_chain_json_roundtrip(lat):
    ch = sample_chain(lat, ErrorRates(p_qp=0.3, p_b=0.25), rng_seed=11)
    back = ErrorChain.from_json(ch.to_json())
    assert np.array_equal(back.qp_sites, ch.qp_sites)
    assert np.array_equal(back.bilinear_edges, ch.bilinear_edges)
    assert back.to_json() == ch.to_json()


def test_history_json_roundtrip(lat):
    h = sample_history(lat, ErrorRates(p_qp=0.2, p_b=0.1, p_m=0.15), rounds=3, rng_seed=5)
    back = ErrorHistory.from_json(h.to_json())
    assert back.rounds == h.rounds
    assert np.array_equal(back.measurement_faults, h.measurement_faults)
    for a, b in zip(back.chains, h.chains):
        assert np.array_equal(a.qp_sites, b.qp_sites)
        assert np.array_equal(a.bilinear_edges, b.bilinear_edges)
    assert back.to_json() == h.to_json()


# ----------------------------------------------------------------- semantics


def test_support_vector_xors_edge_endpoints(lat):
    qp = np.zeros(lat.n_sites, dtype=np.uint8)
    be = np.zeros(lat.n_edges, dtype=np.uint8)
    qp[5] = 1
    be[0] = 1
    ch = ErrorChain(qp, be)
    v = ch.support_vector(lat)
    expect = qp.copy()
    a, b = lat.edges[0]
    expect[a] ^= 1
    expect[b] ^= 1
    assert np.array_equal(v, expect)
    assert ch.n_events == 2


def test_single_site_syndrome_flags_one_plaquette_per_color(lat):
    qp = np.zeros(lat.n_sites, dtype=np.uint8)
    qp[0] = 1
    ch = ErrorChain(qp, np.zeros(lat.n_edges, dtype=np.uint8))
    syn = ch.syndrome(lat)
    flagged = np.flatnonzero(syn)
    assert len(flagged) == 3
    assert sorted(lat.colors[flagged]) == [0, 1, 2]
