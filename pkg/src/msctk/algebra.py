"""Majorana monomial algebra and the code's stabilizer structure.

A monomial is stored as a phase exponent k (for a prefactor i**k) together
with a sorted tuple of site indices; gamma_i * gamma_i = 1 and distinct
gammas anticommute. Products are normal-ordered by counting transpositions.

For the stat-mech layer only the support mod 2 matters: plaquette operators
act on configurations through the (P, N) support matrix over GF(2), two
errors are equivalent iff their supports differ by a product of plaquette
operators, and the syndrome of an error is the parity of its overlap with
each plaquette.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gf2
from .lattice import CodeLattice


@dataclass(frozen=True)
class MajoranaOperator:
    """i**phase * gamma_{s_1} ... gamma_{s_m} with s_1 < ... < s_m."""

    support: tuple[int, ...]
    phase: int = 0  # exponent of i, mod 4

    def __post_init__(self):
        if list(self.support) != sorted(set(self.support)):
            raise ValueError("support must be strictly increasing site indices")
        object.__setattr__(self, "phase", self.phase % 4)

    @property
    def weight(self) -> int:
        return len(self.support)

    def __mul__(self, other: "MajoranaOperator") -> "MajoranaOperator":
        if not isinstance(other, MajoranaOperator):
            return NotImplemented
        # merge the two sorted supports, counting the transpositions needed
        # to move each factor of `other` past the remaining factors of `self`
        a, b = self.support, other.support
        out: list[int] = []
        swaps = 0
        i = j = 0
        while i < len(a) and j < len(b):
            if a[i] < b[j]:
                out.append(a[i])
                i += 1
            elif a[i] > b[j]:
                swaps += len(a) - i
                out.append(b[j])
                j += 1
            else:
                swaps += len(a) - i - 1  # move past the factors to the right of the match
                i += 1
                j += 1
        out.extend(a[i:])
        out.extend(b[j:])
        phase = (self.phase + other.phase + 2 * swaps) % 4
        return MajoranaOperator(tuple(out), phase)

    def support_vector(self, n_sites: int) -> np.ndarray:
        v = np.zeros(n_sites, dtype=np.uint8)
        v[list(self.support)] = 1
        return v


def from_sites(sites, phase: int = 0) -> MajoranaOperator:
    return MajoranaOperator(tuple(sorted(int(s) for s in sites)), phase)


def from_vector(v: np.ndarray, phase: int = 0) -> MajoranaOperator:
    return MajoranaOperator(tuple(int(s) for s in np.flatnonzero(v)), phase)


def commutes(a: MajoranaOperator, b: MajoranaOperator) -> bool:
    """True iff the two monomials commute: |a||b| - |a & b| must be even."""
    shared = len(set(a.support) & set(b.support))
    return (a.weight * b.weight - shared) % 2 == 0


def plaquette_operator(lattice: CodeLattice, p: int) -> MajoranaOperator:
    """The weight-6 conserved plaquette operator O_p (phase chosen so O_p**2 = 1).

    For six anticommuting gammas (g_1...g_6)**2 = -1, so an i is absorbed
    into the prefactor to make the operator an involution.
    """
    return from_sites(lattice.plaquettes[p], phase=1)


def edge_bilinear(lattice: CodeLattice, e: int) -> MajoranaOperator:
    """The Hermitian bond bilinear i * gamma_a * gamma_b on edge e."""
    return from_sites(lattice.edges[e], phase=1)


def syndrome_of(lattice: CodeLattice, error: MajoranaOperator) -> np.ndarray:
    """Plaquettes anticommuting with the error, as a (P,) uint8 vector.

    A weight-m error flips plaquette p iff m*6 - |overlap| is odd, i.e. iff
    it shares an odd number of sites with p's hexagon.
    """
    v = error.support_vector(lattice.n_sites)
    return (lattice.support_matrix @ v.astype(np.int64)) % 2 == 1


def syndrome_of_vector(lattice: CodeLattice, v: np.ndarray) -> np.ndarray:
    return ((lattice.support_matrix @ v.astype(np.int64)) % 2).astype(np.uint8)


def stabilizer_rank(lattice: CodeLattice) -> int:
    """GF(2) rank of the plaquette support matrix (= P - 2 on the torus)."""
    return gf2.rank(lattice.support_matrix)


def ground_space_degeneracy(lattice: CodeLattice) -> int:
    """2**(number of independent relations among plaquette operators).

    Each color class multiplies to the same global parity, giving two
    relations and a fourfold-degenerate common eigenspace (two qubits).
    """
    return 2 ** (lattice.n_plaquettes - stabilizer_rank(lattice))


class StabilizerBasis:
    """Cached row-reduced basis of the plaquette support row space."""

    def __init__(self, lattice: CodeLattice):
        self.lattice = lattice
        self.rows, self.pivots = gf2.rref(lattice.support_matrix)

    def contains(self, v: np.ndarray) -> bool:
        return gf2.in_span(self.rows, self.pivots, v)

    def canonical(self, v: np.ndarray) -> np.ndarray:
        """Canonical representative of v's coset (v reduced by the row space)."""
        return gf2.reduce_mod(self.rows, self.pivots, v)


def same_error_class(
    lattice: CodeLattice,
    e1: MajoranaOperator,
    e2: MajoranaOperator,
    basis: StabilizerBasis | None = None,
) -> bool:
    """True iff e1 and e2 differ (in support) by a product of plaquette operators."""
    if basis is None:
        basis = StabilizerBasis(lattice)
    diff = e1.support_vector(lattice.n_sites) ^ e2.support_vector(lattice.n_sites)
    return basis.contains(diff)
