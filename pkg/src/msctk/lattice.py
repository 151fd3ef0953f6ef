"""Honeycomb-torus lattice hosting one Majorana mode per site.

The torus is built from l1 x l2 unit cells of three hexagonal plaquettes
(colors A, B, C), so N = 6*l1*l2 sites, P = 3*l1*l2 plaquettes and
9*l1*l2 nearest-neighbor edges.

Internally the lattice is handled through its dual triangular lattice:
plaquettes are dual vertices (x, y) with color (x + 2y) mod 3, sites are
the dual triangles, and edges are the dual bonds. The torus identifies
(x, y) ~ (x + 3*l1, y) ~ (x + l2, y + l2); both wrap vectors preserve the
three-coloring for every l1, l2, which is what makes the cell construction
work at all sizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

COLOR_NAMES = ("A", "B", "C")

# In-cell slot t sits at dual coordinate x = 3*i + j + t, y = j and has color t.
_UP, _DOWN = 0, 1


class LatticeSizeError(ValueError):
    pass


@dataclass(frozen=True)
class CodeLattice:
    """Static geometry of the code on an (l1, l2) torus."""

    l1: int
    l2: int
    n_sites: int
    n_plaquettes: int
    plaquettes: np.ndarray        # (P, 6) site indices, cyclic order around the hexagon
    colors: np.ndarray            # (P,) in {0, 1, 2} = A, B, C
    edges: np.ndarray             # (E, 2) adjacent site pairs
    dual_adjacency: np.ndarray    # (E, 2) the two same-color plaquettes flipped by each edge's bilinear
    edge_borders: np.ndarray      # (E, 2) the two plaquettes bordering each edge
    site_plaquettes: np.ndarray   # (N, 3) the three plaquettes containing each site, sorted by color
    plaquette_xy: np.ndarray      # (P, 2) dual-lattice coordinates, for labels and plots
    support_matrix: np.ndarray = field(repr=False)  # (P, N) uint8 incidence

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    def edge_color(self, e: int) -> int:
        """Color of the plaquette pair flipped by edge e's bilinear."""
        return int(self.colors[self.dual_adjacency[e, 0]])

    def edges_of_color(self, color: int) -> np.ndarray:
        """Indices of edges whose bilinear flips plaquettes of the given color."""
        return np.nonzero(self.colors[self.dual_adjacency[:, 0]] == color)[0]

    def plaquettes_of_color(self, color: int) -> np.ndarray:
        return np.nonzero(self.colors == color)[0]

    def star_edges(self, p: int) -> np.ndarray:
        """The 6 edges whose bilinear flips plaquette p."""
        return np.nonzero((self.dual_adjacency == p).any(axis=1))[0]


def build_lattice(l1: int, l2: int) -> CodeLattice:
    """Construct the (l1, l2) torus. Requires l1, l2 >= 2.

    Below that size plaquettes would wrap onto themselves and the
    "two plaquettes share 0 or 2 sites" property breaks down.
    """
    if not (isinstance(l1, (int, np.integer)) and isinstance(l2, (int, np.integer))):
        raise TypeError("l1 and l2 must be integers")
    if l1 < 2 or l2 < 2:
        raise LatticeSizeError(
            f"minimum torus size is l1, l2 >= 2 (got l1={l1}, l2={l2})"
        )

    P = 3 * l1 * l2
    N = 2 * P
    E = 3 * P

    def canon(x: int, y: int) -> tuple[int, int, int]:
        j = y % l2
        x2 = x - (y - j)          # undo k copies of the (l2, l2) wrap
        u = (x2 - j) % (3 * l1)
        return u // 3, j, u % 3

    def pidx(x: int, y: int) -> int:
        i, j, t = canon(x, y)
        return (j * l1 + i) * 3 + t

    def coords(idx: int) -> tuple[int, int]:
        t = idx % 3
        cell = idx // 3
        i, j = cell % l1, cell // l1
        return 3 * i + j + t, j

    def sidx(x: int, y: int, orient: int) -> int:
        return pidx(x, y) * 2 + orient

    site_plaquettes = np.zeros((N, 3), dtype=np.int64)
    for idx in range(P):
        x, y = coords(idx)
        up = [pidx(x, y), pidx(x + 1, y), pidx(x, y + 1)]
        dn = [pidx(x + 1, y), pidx(x, y + 1), pidx(x + 1, y + 1)]
        site_plaquettes[sidx(x, y, _UP)] = up
        site_plaquettes[sidx(x, y, _DOWN)] = dn

    colors = (np.arange(P) % 3).astype(np.int64)
    # sort each site's plaquette triple by color so column c has color c
    order = np.argsort(colors[site_plaquettes], axis=1)
    site_plaquettes = np.take_along_axis(site_plaquettes, order, axis=1)

    # hexagon boundaries in cyclic order (E, SE, S, SW, NW, N around the dual vertex)
    plaquettes = np.zeros((P, 6), dtype=np.int64)
    plaquette_xy = np.zeros((P, 2), dtype=np.int64)
    for idx in range(P):
        x, y = coords(idx)
        plaquette_xy[idx] = (x, y)
        plaquettes[idx] = [
            sidx(x, y, _UP),
            sidx(x, y - 1, _DOWN),
            sidx(x, y - 1, _UP),
            sidx(x - 1, y - 1, _DOWN),
            sidx(x - 1, y, _UP),
            sidx(x - 1, y, _DOWN),
        ]

    edges = np.zeros((E, 2), dtype=np.int64)
    dual_adjacency = np.zeros((E, 2), dtype=np.int64)
    edge_borders = np.zeros((E, 2), dtype=np.int64)
    for idx in range(P):
        x, y = coords(idx)
        e0, e1, e2 = 3 * idx, 3 * idx + 1, 3 * idx + 2
        # bond (x,y)-(x+1,y)
        edges[e0] = (sidx(x, y, _UP), sidx(x, y - 1, _DOWN))
        edge_borders[e0] = (pidx(x, y), pidx(x + 1, y))
        dual_adjacency[e0] = (pidx(x, y + 1), pidx(x + 1, y - 1))
        # bond (x,y)-(x,y+1)
        edges[e1] = (sidx(x, y, _UP), sidx(x - 1, y, _DOWN))
        edge_borders[e1] = (pidx(x, y), pidx(x, y + 1))
        dual_adjacency[e1] = (pidx(x + 1, y), pidx(x - 1, y + 1))
        # bond (x,y)-(x+1,y-1)
        edges[e2] = (sidx(x, y - 1, _UP), sidx(x, y - 1, _DOWN))
        edge_borders[e2] = (pidx(x, y), pidx(x + 1, y - 1))
        dual_adjacency[e2] = (pidx(x, y - 1), pidx(x + 1, y))

    support = np.zeros((P, N), dtype=np.uint8)
    for p in range(P):
        support[p, plaquettes[p]] ^= 1

    return CodeLattice(
        l1=int(l1),
        l2=int(l2),
        n_sites=N,
        n_plaquettes=P,
        plaquettes=plaquettes,
        colors=colors,
        edges=edges,
        dual_adjacency=dual_adjacency,
        edge_borders=edge_borders,
        site_plaquettes=site_plaquettes,
        plaquette_xy=plaquette_xy,
        support_matrix=support,
    )


def cells_for_linear_size(L: int) -> tuple[int, int]:
    """Cell counts (l1, l2) whose dual triangular lattice is an L x L rhombus.

    Needs L divisible by 3 (three-coloring of the dual lattice).
    """
    if L % 3 != 0 or L < 6:
        raise LatticeSizeError(f"dual linear size must be a multiple of 3 and >= 6 (got {L})")
    return L // 3, L
