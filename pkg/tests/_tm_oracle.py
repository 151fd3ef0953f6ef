"""Independent transfer-matrix oracle for the pure-model critical points.

Built from first principles on the triangular lattice — no imports from
the package under test.  Row-to-row transfer matrices on periodic strips
of width W give the two leading eigenvalues; the inverse correlation
length xi_W(beta) then locates the critical coupling through
phenomenological renormalization: beta* solves
xi_W(beta)/W = xi_W'(beta)/W'.

Two models:
  * pair couplings on every nearest-neighbor bond of the triangular
    lattice (expected beta_c = ln(3)/4, i.e. T_c = 4/ln 3);
  * three-spin couplings on every elementary triangle, up and down
    (expected beta_c = ln(1+sqrt(2))/2, i.e. T_c = 2/ln(1+sqrt 2)).

Rows are horizontal lines of W spins with periodic boundary conditions;
row r+1 is offset so that site i of row r+1 sits above the bond (i, i+1)
of row r.  Between consecutive rows a (lower) and b (upper) the strip
gains, per column i: the lower-row bond (a_i, a_{i+1}), the two inter-row
bonds (a_i, b_i) and (a_{i+1}, b_i) — equivalently the up-triangle
(a_i, a_{i+1}, b_i) and the down-triangle (a_{i+1}, b_i, b_{i+1}).
"""

from __future__ import annotations

import numpy as np


def _spins(w: int) -> np.ndarray:
    """(2^w, w) array of +-1 rows, index bit i = spin i."""
    states = np.arange(2**w)
    return 1 - 2 * ((states[:, None] >> np.arange(w)) & 1).astype(np.float64)


def transfer_matrix_pair(w: int, beta: float) -> np.ndarray:
    """Triangular-lattice nearest-neighbor Ising transfer matrix, width w."""
    s = _spins(w)
    nxt = np.roll(np.arange(w), -1)
    intra = (s * s[:, nxt]).sum(axis=1)                 # lower-row bonds
    vert = s @ s.T                                      # (a_i, b_i) bonds
    diag = s[:, nxt] @ s.T                              # (a_{i+1}, b_i) bonds
    return np.exp(beta * (intra[:, None] + vert + diag))


def transfer_matrix_triplet(w: int, beta: float) -> np.ndarray:
    """Three-spin (all elementary triangles) transfer matrix, width w."""
    s = _spins(w)
    nxt = np.roll(np.arange(w), -1)
    up = (s * s[:, nxt]) @ s.T                          # (a_i, a_{i+1}, b_i)
    down = s[:, nxt] @ (s * s[:, nxt]).T                # (a_{i+1}, b_i, b_{i+1})
    return np.exp(beta * (up + down))


def inverse_correlation_length(tm: np.ndarray) -> float:
    """ln(lambda_1 / |lambda_2|) from the full spectrum."""
    ev = np.linalg.eigvals(tm)
    mags = np.sort(np.abs(ev))[::-1]
    return float(np.log(mags[0] / mags[1]))


def _xi_over_w(kind: str, w: int, beta: float) -> float:
    tm = (
        transfer_matrix_pair(w, beta)
        if kind == "pair"
        else transfer_matrix_triplet(w, beta)
    )
    return 1.0 / (w * inverse_correlation_length(tm))


def prg_crossing(kind: str, w1: int, w2: int, lo: float, hi: float,
                 tol: float = 1e-10) -> float:
    """beta* where xi_{w1}/w1 = xi_{w2}/w2 (bisection on the difference)."""

    def diff(beta: float) -> float:
        return _xi_over_w(kind, w1, beta) - _xi_over_w(kind, w2, beta)

    f_lo, f_hi = diff(lo), diff(hi)
    if f_lo * f_hi > 0:
        raise ValueError(f"no PRG crossing for {kind} in [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if diff(lo) * diff(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def pair_critical_beta() -> float:
    """PRG estimate on widths (6, 8) for the pair-coupling model."""
    return prg_crossing("pair", 6, 8, 0.2, 0.35)


def triplet_critical_beta() -> float:
    """PRG estimate on widths (6, 9) for the triplet-coupling model.

    Widths are multiples of 3 so the four ordered sublattice states fit
    the periodic strip.
    """
    return prg_crossing("triplet", 6, 9, 0.38, 0.5)
