import time

import numpy as np
import pytest

from msctk.algebra import (
    StabilizerBasis,
    commutes,
    edge_bilinear,
    from_sites,
    from_vector,
    ground_space_degeneracy,
    plaquette_operator,
    same_error_class,
    stabilizer_rank,
    syndrome_of_vector,
)
from msctk.lattice import build_lattice
from msctk.noise import ErrorChain


def _chain(lat, sites=(), edges=()):
    qp = np.zeros(lat.n_sites, dtype=np.uint8)
    qp[list(sites)] = 1
    be = np.zeros(lat.n_edges, dtype=np.uint8)
    be[list(edges)] = 1
    return ErrorChain(qp_sites=qp, bilinear_edges=be)


def test_single_factor_algebra():
    a = from_sites([0])
    b = from_sites([1])
    # distinct factors anticommute, identical factors square to one
    assert not commutes(a, b)
    assert (a * a).support == ()
    assert (a * a).phase == 0


def test_product_ordering_phase():
    # gamma_1 * gamma_0 = - gamma_0 * gamma_1: one transposition = phase 2 (i.e. -1)
    ab = from_sites([0]) * from_sites([1])
    ba = from_sites([1]) * from_sites([0])
    assert ab.support == ba.support == (0, 1)
    assert (ba.phase - ab.phase) % 4 == 2


def test_operator_square_phase():
    # (gamma_0 gamma_1)^2 = -1 ; with the bilinear's i prefactor it squares to +1
    pair = from_sites([0, 1])
    sq = pair * pair
    assert sq.support == ()
    assert sq.phase == 2
    ipair = from_sites([0, 1], phase=1)
    isq = ipair * ipair
    assert isq.support == () and isq.phase == 0


@pytest.mark.parametrize("size", [(2, 2), (3, 3)])
def test_acceptance_style_invariants_fast(size):
    # plaquette commutation, syndrome shapes, degeneracy: exact and < 1 s
    start = time.monotonic()
    lat = build_lattice(*size)
    ops = [plaquette_operator(lat, p) for p in range(lat.n_plaquettes)]
    for a in range(len(ops)):
        sq = ops[a] * ops[a]
        assert sq.support == () and sq.phase == 0
        for b in range(a + 1, len(ops)):
            assert commutes(ops[a], ops[b])
    for site in range(lat.n_sites):
        syn = np.nonzero(_chain(lat, sites=[site]).syndrome(lat))[0]
        assert syn.size == 3
        assert sorted(lat.colors[syn].tolist()) == [0, 1, 2]
    for e in range(lat.n_edges):
        syn = np.nonzero(_chain(lat, edges=[e]).syndrome(lat))[0]
        assert syn.size == 2
        assert sorted(syn.tolist()) == sorted(lat.dual_adjacency[e].tolist())
        assert lat.colors[syn[0]] == lat.colors[syn[1]]
    assert ground_space_degeneracy(lat) == 4
    assert time.monotonic() - start < 1.0


@pytest.mark.parametrize("size", [(2, 2), (3, 3)])
def test_color_product_constraint(size):
    # product of all plaquettes of one color covers every site exactly once,
    # so the three per-color products have identical (full) support
    lat = build_lattice(*size)
    for c in range(3):
        total = np.zeros(lat.n_sites, dtype=np.uint8)
        for p in lat.plaquettes_of_color(c):
            total ^= lat.support_matrix[p]
        assert (total == 1).all()


def test_rank_and_degeneracy():
    lat = build_lattice(2, 2)
    assert stabilizer_rank(lat) == 10  # P - 2 from the two color relations
    assert ground_space_degeneracy(lat) == 4


def test_edge_bilinear_is_plaquette_factor():
    lat = build_lattice(2, 2)
    op = edge_bilinear(lat, 0)
    assert len(op.support) == 2
    assert op.phase == 1


def test_syndrome_linearity():
    lat = build_lattice(2, 3)
    rng = np.random.default_rng(3)
    v1 = (rng.random(lat.n_sites) < 0.4).astype(np.uint8)
    v2 = (rng.random(lat.n_sites) < 0.4).astype(np.uint8)
    s12 = syndrome_of_vector(lat, v1 ^ v2)
    assert ((syndrome_of_vector(lat, v1) ^ syndrome_of_vector(lat, v2)) == s12).all()


def test_same_error_class():
    lat = build_lattice(2, 2)
    v = np.zeros(lat.n_sites, dtype=np.uint8)
    v[0] = 1
    # adding a stabilizer support never changes the class
    w = v ^ lat.support_matrix[5]
    assert same_error_class(lat, from_vector(v), from_vector(w))
    # a single extra site flip does (it changes the syndrome)
    u = v.copy()
    u[1] ^= 1
    assert not same_error_class(lat, from_vector(v), from_vector(u))


def test_stabilizer_basis_canonical_is_class_invariant():
    lat = build_lattice(2, 2)
    basis = StabilizerBasis(lat)
    rng = np.random.default_rng(5)
    v = (rng.random(lat.n_sites) < 0.3).astype(np.uint8)
    canon = basis.canonical(v)
    for p in range(lat.n_plaquettes):
        assert (basis.canonical(v ^ lat.support_matrix[p]) == canon).all()
    assert basis.contains(v ^ canon)


def test_operator_roundtrip_vector():
    lat = build_lattice(2, 2)
    op = from_sites([3, 7, 11])
    vec = op.support_vector(lat.n_sites)
    assert vec.sum() == 3
    back = from_vector(vec)
    assert back.support == op.support
