"""Small dense GF(2) linear-algebra helpers used by the stabilizer algebra.

Matrices are numpy uint8 arrays with entries in {0, 1}. Everything here is
plain Gaussian elimination; the systems involved are tiny (a few hundred
columns at most).
"""

from __future__ import annotations

import numpy as np


def rref(a: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2).

    Returns (R, pivots) where R contains only the nonzero rows and
    pivots[i] is the pivot column of row i.
    """
    a = (np.asarray(a, dtype=np.uint8) % 2).copy()
    nrows, ncols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        rows = np.nonzero(a[r:, c])[0]
        if rows.size == 0:
            continue
        piv = r + rows[0]
        if piv != r:
            a[[r, piv]] = a[[piv, r]]
        hit = np.nonzero(a[:, c])[0]
        hit = hit[hit != r]
        a[hit] ^= a[r]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return a[:r], pivots


def rank(a: np.ndarray) -> int:
    return rref(a)[0].shape[0]


def row_space(a: np.ndarray) -> np.ndarray:
    """Basis of the row space in RREF form."""
    return rref(a)[0]


def null_space(a: np.ndarray) -> np.ndarray:
    """Basis (rows) of {v : a @ v = 0 mod 2}."""
    a = np.asarray(a, dtype=np.uint8)
    ncols = a.shape[1]
    red, pivots = rref(a)
    free = [c for c in range(ncols) if c not in pivots]
    basis = np.zeros((len(free), ncols), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for ri, c in enumerate(pivots):
            if red[ri, f]:
                basis[i, c] = 1
    return basis


def reduce_mod(basis_rref: np.ndarray, pivots: list[int], v: np.ndarray) -> np.ndarray:
    """Canonical coset representative of v modulo the span of basis_rref."""
    v = (np.asarray(v, dtype=np.uint8) % 2).copy()
    for row, pc in zip(basis_rref, pivots):
        if v[pc]:
            v ^= row
    return v


def in_span(basis_rref: np.ndarray, pivots: list[int], v: np.ndarray) -> bool:
    return not reduce_mod(basis_rref, pivots, v).any()


def solve(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """One solution x of a @ x = b mod 2, or None if inconsistent."""
    a = np.asarray(a, dtype=np.uint8) % 2
    b = np.asarray(b, dtype=np.uint8) % 2
    aug = np.hstack([a, b[:, None]])
    red, pivots = rref(aug)
    ncols = a.shape[1]
    if ncols in pivots:
        return None
    x = np.zeros(ncols, dtype=np.uint8)
    for ri, c in enumerate(pivots):
        if red[ri, -1]:
            x[c] = 1
    return x
