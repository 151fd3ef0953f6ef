import numpy as np
import pytest

from msctk.lattice import (
    CodeLattice,
    LatticeSizeError,
    build_lattice,
    cells_for_linear_size,
)


@pytest.fixture(scope="module", params=[(2, 2), (2, 3), (3, 3), (4, 2)])
def lat(request):
    return build_lattice(*request.param)


def test_counts(lat):
    cells = lat.l1 * lat.l2
    assert lat.n_sites == 6 * cells
    assert lat.n_plaquettes == 3 * cells
    assert lat.n_edges == 9 * cells


def test_color_balance(lat):
    counts = np.bincount(lat.colors, minlength=3)
    assert list(counts) == [lat.n_plaquettes // 3] * 3
    for c in range(3):
        assert lat.edges_of_color(c).size == lat.n_edges // 3


def test_plaquettes_are_hexagons_of_distinct_sites(lat):
    for p in range(lat.n_plaquettes):
        hexagon = lat.plaquettes[p]
        assert len(set(hexagon.tolist())) == 6
        assert all(0 <= s < lat.n_sites for s in hexagon)


def test_every_site_in_three_plaquettes_one_per_color(lat):
    # site_plaquettes rows are sorted by color: row k = the color-k plaquette
    for site in range(lat.n_sites):
        trio = lat.site_plaquettes[site]
        assert sorted(lat.colors[trio].tolist()) == [0, 1, 2]
    counts = np.bincount(lat.plaquettes.ravel(), minlength=lat.n_sites)
    assert (counts == 3).all()


def test_edges_join_adjacent_sites_and_dual_pairs_share_color(lat):
    # the flipped (dual-adjacent) plaquettes share a color and contain
    # exactly one endpoint each: that is what makes the bond anticommute
    for e in range(lat.n_edges):
        s1, s2 = (int(s) for s in lat.edges[e])
        assert s1 != s2
        p1, p2 = lat.dual_adjacency[e]
        assert p1 != p2
        assert lat.colors[p1] == lat.colors[p2] == lat.edge_color(e)
        for p in (p1, p2):
            hexagon = set(lat.plaquettes[p].tolist())
            assert len({s1, s2} & hexagon) == 1


def test_edge_borders_contain_both_endpoints(lat):
    # the two faces flanking the bond contain both endpoints (so they commute)
    for e in range(lat.n_edges):
        s1, s2 = (int(s) for s in lat.edges[e])
        b1, b2 = lat.edge_borders[e]
        assert b1 != b2
        for b in (b1, b2):
            hexagon = set(lat.plaquettes[b].tolist())
            assert {s1, s2} <= hexagon


def test_star_edges_cover_all_same_color_edges(lat):
    for c in range(3):
        seen = []
        for p in lat.plaquettes_of_color(c):
            star = lat.star_edges(int(p))
            assert star.size == 6
            assert (lat.colors[lat.dual_adjacency[star]] == c).all()
            seen.extend(star.tolist())
        # every same-color edge borders exactly two same-color plaquettes
        counts = np.bincount(seen, minlength=lat.n_edges)
        expected = np.zeros(lat.n_edges, dtype=int)
        expected[lat.edges_of_color(c)] = 2
        assert (counts == expected).all()


def test_support_matrix_matches_plaquettes(lat):
    for p in range(lat.n_plaquettes):
        row = np.zeros(lat.n_sites, dtype=np.uint8)
        row[lat.plaquettes[p]] = 1
        assert (lat.support_matrix[p] == row).all()


def test_minimum_size_rejected():
    with pytest.raises(LatticeSizeError, match="minimum"):
        build_lattice(1, 2)
    with pytest.raises(LatticeSizeError, match="minimum"):
        build_lattice(2, 1)
    with pytest.raises(LatticeSizeError):
        build_lattice(0, 0)


def test_cells_for_linear_size():
    assert cells_for_linear_size(6) == (2, 6)
    assert cells_for_linear_size(9) == (3, 9)
    assert cells_for_linear_size(12) == (4, 12)
    with pytest.raises(ValueError):
        cells_for_linear_size(7)
    with pytest.raises(ValueError):
        cells_for_linear_size(3)


def test_lattice_is_deterministic():
    a = build_lattice(3, 2)
    b = build_lattice(3, 2)
    assert (a.plaquettes == b.plaquettes).all()
    assert (a.edges == b.edges).all()
    assert (a.colors == b.colors).all()
    assert isinstance(a, CodeLattice)
