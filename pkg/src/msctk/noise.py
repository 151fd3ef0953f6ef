"""Stochastic error configurations on the lattice.

Two independent single-round processes: each site hosts a single-Majorana
(quasiparticle) event with probability p_qp, and each edge hosts a bond
bilinear event with probability p_b. Repeated-measurement histories add
i.i.d. measurement faults per plaquette per round with probability p_m.

Chains and histories serialize to compact JSON (sorted lists of set
indices rather than dense masks) so replay files stay small.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import algebra, rng as rngmod
from .lattice import CodeLattice


@dataclass(frozen=True)
class ErrorRates:
    """Per-round event probabilities: site (p_qp), edge (p_b), measurement (p_m)."""

    p_qp: float = 0.0
    p_b: float = 0.0
    p_m: float = 0.0

    def __post_init__(self):
        for name in ("p_qp", "p_b", "p_m"):
            v = getattr(self, name)
            if not (0.0 <= v < 1.0):
                raise ValueError(f"{name} must lie in [0, 1), got {v}")


@dataclass(frozen=True)
class ErrorChain:
    """One round of errors: flagged sites and flagged edges."""

    qp_sites: np.ndarray        # (N,) uint8
    bilinear_edges: np.ndarray  # (E,) uint8

    @property
    def n_events(self) -> int:
        return int(self.qp_sites.sum() + self.bilinear_edges.sum())

    def support_vector(self, lattice: CodeLattice) -> np.ndarray:
        """XOR of all selected single-site and edge-pair supports, length N."""
        v = self.qp_sites.astype(np.uint8).copy()
        for e in np.flatnonzero(self.bilinear_edges):
            v[lattice.edges[e]] ^= 1
        return v

    def operator(self, lattice: CodeLattice) -> algebra.MajoranaOperator:
        return algebra.from_vector(self.support_vector(lattice))

    def syndrome(self, lattice: CodeLattice) -> np.ndarray:
        return algebra.syndrome_of_vector(lattice, self.support_vector(lattice))

    def to_json(self) -> str:
        return json.dumps(
            {
                "qp_sites": [int(i) for i in np.flatnonzero(self.qp_sites)],
                "bilinear_edges": [int(i) for i in np.flatnonzero(self.bilinear_edges)],
                "n_sites": int(self.qp_sites.size),
                "n_edges": int(self.bilinear_edges.size),
            }
        )

    @staticmethod
    def from_json(text: str) -> "ErrorChain":
        d = json.loads(text)
        qp = np.zeros(d["n_sites"], dtype=np.uint8)
        qp[d["qp_sites"]] = 1
        be = np.zeros(d["n_edges"], dtype=np.uint8)
        be[d["bilinear_edges"]] = 1
        return ErrorChain(qp, be)


@dataclass(frozen=True)
class ErrorHistory:
    """T rounds of chains plus a (T, P) matrix of measurement faults."""

    chains: tuple[ErrorChain, ...]
    measurement_faults: np.ndarray  # (T, P) uint8

    @property
    def rounds(self) -> int:
        return len(self.chains)

    def to_json(self) -> str:
        return json.dumps(
            {
                "rounds": self.rounds,
                "chains": [json.loads(c.to_json()) for c in self.chains],
                "measurement_faults": [
                    [int(p) for p in np.flatnonzero(row)] for row in self.measurement_faults
                ],
                "n_plaquettes": int(self.measurement_faults.shape[1]),
            }
        )

    @staticmethod
    def from_json(text: str) -> "ErrorHistory":
        d = json.loads(text)
        chains = tuple(ErrorChain.from_json(json.dumps(c)) for c in d["chains"])
        mf = np.zeros((d["rounds"], d["n_plaquettes"]), dtype=np.uint8)
        for t, row in enumerate(d["measurement_faults"]):
            mf[t, row] = 1
        return ErrorHistory(chains, mf)


def _sample_chain_with(gen: np.random.Generator, lattice: CodeLattice, rates: ErrorRates) -> ErrorChain:
    qp = (gen.random(lattice.n_sites) < rates.p_qp).astype(np.uint8)
    be = (gen.random(lattice.n_edges) < rates.p_b).astype(np.uint8)
    return ErrorChain(qp, be)


def sample_chain(lattice: CodeLattice, rates: ErrorRates, rng_seed: int) -> ErrorChain:
    """One i.i.d. error round; deterministic for a fixed seed."""
    gen = rngmod.noise_stream(rng_seed, 0)
    return _sample_chain_with(gen, lattice, rates)


def sample_history(
    lattice: CodeLattice, rates: ErrorRates, rounds: int, rng_seed: int
) -> ErrorHistory:
    """`rounds` independent chains plus per-round measurement faults."""
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    chains = []
    faults = np.zeros((rounds, lattice.n_plaquettes), dtype=np.uint8)
    for t in range(rounds):
        gen = rngmod.noise_stream(rng_seed, t)
        chains.append(_sample_chain_with(gen, lattice, rates))
        faults[t] = (gen.random(lattice.n_plaquettes) < rates.p_m).astype(np.uint8)
    return ErrorHistory(tuple(chains), faults)
