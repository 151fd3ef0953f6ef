"""Disordered Ising models derived from the code and its error channel.

Four families, all with Hamiltonian H = -sum_t coupling_t * tau_t * prod(spins in term t):

* three-spin model (``build_qp_model``): one spin per plaquette, one
  three-spin term per Majorana site joining the three plaquettes that
  contain it; tau = -1 marks a site error.
* per-color two-spin models (``build_bilinear_models``): each color's
  plaquettes form a triangular sublattice with coordination 6; one bond
  term per edge whose bilinear flips that color; tau = -1 marks a bond error.
* combined model (``build_combined_model``): both term sets on the full
  plaquette set, with couplings fixed so a single inverse temperature
  beta = 1 satisfies the Nishimori matching condition for each term type.
* space-time gauge models (``build_gauge_model``): one stabilizer spin per
  (plaquette, round) and one time-like spin per (site-or-edge, round);
  error terms couple stabilizer spins at round t to time-like spins at
  rounds t-1 and t, measurement terms multiply the time-like spins around
  a plaquette; time is periodic.

Disorder enters either as an explicit tau assignment per term or as
probabilities sampled i.i.d. per term (seeded, deterministic).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .lattice import CodeLattice
from .noise import ErrorChain, ErrorHistory

# term roles, used to pick the right disorder probability per term
ROLE_SITE = "site"    # three-spin (or gauge five-spin) error term
ROLE_EDGE = "edge"    # two-spin (or gauge four-spin) bond error term
ROLE_MEAS = "meas"    # measurement-fault term (gauge models)


def nishimori_beta(p: float) -> float:
    """Inverse temperature matched to disorder strength p (unit coupling).

    beta(p) = (1/2) * ln((1-p)/p); beta(1/2) = 0.
    """
    if not (0.0 < p < 1.0):
        raise ValueError(f"probability must lie strictly inside (0, 1), got {p}")
    return 0.5 * math.log((1.0 - p) / p)


@dataclass(frozen=True)
class DisorderSpec:
    """Quenched disorder: explicit tau per term, or per-role probabilities + seed.

    ``site_prob`` applies to error terms on sites, ``edge_prob`` to bond
    terms, ``meas_prob`` to measurement terms. When probabilities are used,
    taus are drawn i.i.d. per term in term order from a stream keyed by
    ``seed``, so a spec resolves to the same realization every time.
    """

    tau: tuple[int, ...] | None = None
    site_prob: float | None = None
    edge_prob: float | None = None
    meas_prob: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.tau is not None:
            t = tuple(int(x) for x in self.tau)
            if any(x not in (-1, 1) for x in t):
                raise ValueError("explicit tau entries must be +1 or -1")
            object.__setattr__(self, "tau", t)
        for name in ("site_prob", "edge_prob", "meas_prob"):
            v = getattr(self, name)
            if v is not None and not (0.0 <= v < 1.0):
                raise ValueError(f"{name} must lie in [0, 1), got {v}")
        if self.tau is None:
            probs = [self.site_prob, self.edge_prob, self.meas_prob]
            if all(v is None for v in probs):
                raise ValueError("DisorderSpec needs either explicit tau or probabilities")
            if self.seed is None:
                raise ValueError("probability-based DisorderSpec needs a seed")

    def prob_for_role(self, role: str) -> float:
        v = {ROLE_SITE: self.site_prob, ROLE_EDGE: self.edge_prob, ROLE_MEAS: self.meas_prob}[role]
        return 0.0 if v is None else float(v)

    def resolve(self, roles: list[str]) -> np.ndarray:
        """One tau = +/-1 per term, honoring explicit values or sampling."""
        n = len(roles)
        if self.tau is not None:
            if len(self.tau) != n:
                raise ValueError(
                    f"explicit tau length {len(self.tau)} does not match term count {n}"
                )
            return np.array(self.tau, dtype=np.int8)
        gen = rngmod.disorder_stream(self.seed)
        probs = np.array([self.prob_for_role(r) for r in roles])
        return np.where(gen.random(n) < probs, -1, 1).astype(np.int8)


@dataclass
class SpinModel:
    """Immutable classical spin model: H = -sum_t coupling_t * tau_t * prod_i s_i.

    ``metadata`` records the model kind, lattice shape, color / rounds where
    applicable, and a role+coordinates label per spin.
    """

    kind: str
    num_spins: int
    term_spins: tuple[tuple[int, ...], ...]
    couplings: np.ndarray  # (n_terms,) float64
    tau: np.ndarray        # (n_terms,) int8, +/-1
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.couplings = np.asarray(self.couplings, dtype=np.float64)
        self.tau = np.asarray(self.tau, dtype=np.int8)
        if len(self.term_spins) != self.couplings.size or self.couplings.size != self.tau.size:
            raise ValueError("terms, couplings and tau must have equal length")
        for t, spins in enumerate(self.term_spins):
            if len(set(spins)) != len(spins) or any(not 0 <= s < self.num_spins for s in spins):
                raise ValueError(f"term {t} has repeated or out-of-range spin indices")
        flat = []
        offsets = [0]
        for spins in self.term_spins:
            flat.extend(spins)
            offsets.append(len(flat))
        self._flat_sites = np.array(flat, dtype=np.int64)
        self._offsets = np.array(offsets, dtype=np.int64)
        # spin -> terms (CSR), for local updates
        counts = np.zeros(self.num_spins, dtype=np.int64)
        for spins in self.term_spins:
            for s in spins:
                counts[s] += 1
        sptr = np.zeros(self.num_spins + 1, dtype=np.int64)
        np.cumsum(counts, out=sptr[1:])
        sterms = np.zeros(sptr[-1], dtype=np.int64)
        cursor = sptr[:-1].copy()
        for t, spins in enumerate(self.term_spins):
            for s in spins:
                sterms[cursor[s]] = t
                cursor[s] += 1
        self._spin_term_ptr = sptr
        self._spin_terms = sterms

    @property
    def n_terms(self) -> int:
        return self.tau.size

    def term_products(self, spins: np.ndarray) -> np.ndarray:
        """prod of spins over each term, as a (n_terms,) int8 array."""
        if spins.shape != (self.num_spins,):
            raise ValueError(f"spin vector must have length {self.num_spins}")
        vals = spins[self._flat_sites]
        return np.multiply.reduceat(vals.astype(np.int64), self._offsets[:-1]).astype(np.int8)

    def flat_arrays(self):
        """(flat_sites, term_offsets, spin_term_ptr, spin_terms) for kernel use."""
        return self._flat_sites, self._offsets, self._spin_term_ptr, self._spin_terms

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": self.kind,
                "num_spins": self.num_spins,
                "terms": [
                    {"spins": list(s), "coupling": float(c), "tau": int(t)}
                    for s, c, t in zip(self.term_spins, self.couplings, self.tau)
                ],
                "metadata": self.metadata,
            }
        )

    @staticmethod
    def from_json(text: str) -> "SpinModel":
        d = json.loads(text)
        terms = d["terms"]
        return SpinModel(
            kind=d["kind"],
            num_spins=d["num_spins"],
            term_spins=tuple(tuple(t["spins"]) for t in terms),
            couplings=np.array([t["coupling"] for t in terms], dtype=np.float64),
            tau=np.array([t["tau"] for t in terms], dtype=np.int8),
            metadata=d["metadata"],
        )


def energy(model: SpinModel, spins: np.ndarray) -> float:
    """H(spins) = -sum_t coupling_t * tau_t * prod of the term's spins."""
    prods = model.term_products(spins)
    return float(-(model.couplings * model.tau * prods).sum())


def delta_energy(model: SpinModel, spins: np.ndarray, flip: int) -> float:
    """Energy change from flipping one spin (2x the local field it feels)."""
    if not 0 <= flip < model.num_spins:
        raise ValueError(f"flip index {flip} out of range")
    lo, hi = model._spin_term_ptr[flip], model._spin_term_ptr[flip + 1]
    de = 0.0
    for t in model._spin_terms[lo:hi]:
        prod = 1
        for s in model.term_spins[t]:
            prod *= spins[s]
        de += 2.0 * model.couplings[t] * model.tau[t] * prod
    return float(de)


def _spin_labels_plaquettes(lattice: CodeLattice, plaqs: np.ndarray) -> list[dict]:
    return [
        {
            "role": "plaquette",
            "plaquette": int(p),
            "x": int(lattice.plaquette_xy[p, 0]),
            "y": int(lattice.plaquette_xy[p, 1]),
        }
        for p in plaqs
    ]


def build_qp_model(lattice: CodeLattice, disorder: DisorderSpec) -> SpinModel:
    """Three-spin random-bond model for single-site errors.

    One spin per plaquette; term l joins the three plaquettes containing
    site l (its syndrome triple) and carries tau = -1 iff site l errs.
    """
    roles = [ROLE_SITE] * lattice.n_sites
    tau = disorder.resolve(roles)
    terms = tuple(tuple(int(p) for p in lattice.site_plaquettes[l]) for l in range(lattice.n_sites))
    return SpinModel(
        kind="qp",
        num_spins=lattice.n_plaquettes,
        term_spins=terms,
        couplings=np.ones(lattice.n_sites),
        tau=tau,
        metadata={
            "lattice": [lattice.l1, lattice.l2],
            "spin_labels": _spin_labels_plaquettes(lattice, np.arange(lattice.n_plaquettes)),
            "term_roles": roles,
        },
    )


def build_bilinear_models(lattice: CodeLattice, disorder: DisorderSpec) -> tuple[SpinModel, SpinModel, SpinModel]:
    """Three decoupled two-spin random-bond models, one per plaquette color.

    Each color's plaquettes form a triangular sublattice (coordination 6);
    bond terms follow the edges whose bilinears flip that color.  With an
    explicit-tau spec, tau is given per edge in global edge order and is
    split across the three models.
    """
    models = []
    explicit = disorder.tau is not None
    if explicit and len(disorder.tau) != lattice.n_edges:
        raise ValueError(
            f"explicit tau length {len(disorder.tau)} does not match edge count {lattice.n_edges}"
        )
    for color in range(3):
        plaqs = lattice.plaquettes_of_color(color)
        local = {int(p): i for i, p in enumerate(plaqs)}
        edges = lattice.edges_of_color(color)
        terms = tuple(
            tuple(sorted(local[int(p)] for p in lattice.dual_adjacency[e])) for e in edges
        )
        roles = [ROLE_EDGE] * edges.size
        if explicit:
            tau = np.array([disorder.tau[e] for e in edges], dtype=np.int8)
        else:
            sub = DisorderSpec(
                edge_prob=disorder.edge_prob,
                seed=(None if disorder.seed is None else disorder.seed + color),
            )
            tau = sub.resolve(roles)
        models.append(
            SpinModel(
                kind="bilinear",
                num_spins=plaqs.size,
                term_spins=terms,
                couplings=np.ones(edges.size),
                tau=tau,
                metadata={
                    "lattice": [lattice.l1, lattice.l2],
                    "color": color,
                    "edges": [int(e) for e in edges],
                    "spin_labels": _spin_labels_plaquettes(lattice, plaqs),
                    "term_roles": roles,
                },
            )
        )
    return tuple(models)


def build_combined_model(lattice: CodeLattice, disorder: DisorderSpec) -> SpinModel:
    """Simultaneous site and bond disorder on the full plaquette set.

    Term list = N three-spin site terms (site order) followed by 3N/2
    two-spin bond terms (edge order).  Couplings are pre-multiplied by the
    matching condition of each disorder strength, so sampling this model at
    beta = 1 sits at the matched point of both term types simultaneously;
    this stays finite at strength 1/2 (where the coupling vanishes), while
    strength 0 is rejected (coupling would diverge).
    """
    if disorder.tau is not None:
        raise ValueError("combined model derives couplings from probabilities; pass site_prob/edge_prob")
    p, q = disorder.site_prob, disorder.edge_prob
    if p is None or q is None:
        raise ValueError("combined model needs both site_prob and edge_prob")
    if not (0.0 < p < 1.0) or not (0.0 < q < 1.0):
        raise ValueError(f"site/edge probabilities must lie in (0, 1); got {p}, {q}")
    j_eff = nishimori_beta(p)
    k_eff = nishimori_beta(q)
    roles = [ROLE_SITE] * lattice.n_sites + [ROLE_EDGE] * lattice.n_edges
    tau = disorder.resolve(roles)
    terms = [tuple(int(x) for x in lattice.site_plaquettes[l]) for l in range(lattice.n_sites)]
    terms += [tuple(sorted(int(x) for x in lattice.dual_adjacency[e])) for e in range(lattice.n_edges)]
    couplings = np.concatenate(
        [np.full(lattice.n_sites, j_eff), np.full(lattice.n_edges, k_eff)]
    )
    return SpinModel(
        kind="combined",
        num_spins=lattice.n_plaquettes,
        term_spins=tuple(terms),
        couplings=couplings,
        tau=tau,
        metadata={
            "lattice": [lattice.l1, lattice.l2],
            "site_prob": p,
            "edge_prob": q,
            "beta_matched": 1.0,
            "spin_labels": _spin_labels_plaquettes(lattice, np.arange(lattice.n_plaquettes)),
            "term_roles": roles,
        },
    )


def build_gauge_model(
    kind: str,
    lattice: CodeLattice,
    rounds: int,
    disorder: DisorderSpec,
    color: int = 0,
    site_coupling: float = 1.0,
    meas_coupling: float = 1.0,
) -> SpinModel:
    """Space-time model for repeated faulty stabilizer measurement.

    Spins: one stabilizer spin per (plaquette, round), then one time-like
    spin per (site, round) for ``kind='qp'`` or per (same-color edge, round)
    for ``kind='bilinear'``.  Error terms tie the round-t stabilizer spins
    of an event's syndrome to its time-like spins at rounds t-1 and t;
    measurement terms multiply the six time-like spins meeting a plaquette
    at round t.  Time is periodic mod ``rounds``.

    Term order: all error terms by (round, event index), then all
    measurement terms by (round, plaquette index).
    """
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    if kind not in ("qp", "bilinear"):
        raise ValueError(f"unknown gauge model kind {kind!r}")
    T = rounds
    P = lattice.n_plaquettes

    if kind == "qp":
        stab_plaqs = np.arange(P)
        n_stab = P * T
        events = np.arange(lattice.n_sites)  # time-like index set
        ev_stabs = [tuple(int(p) for p in lattice.site_plaquettes[l]) for l in events]
        meas_plaqs = np.arange(P)
        meas_events = [tuple(int(s) for s in lattice.plaquettes[p]) for p in meas_plaqs]
        role_ev = ROLE_SITE
    else:
        if not 0 <= color <= 2:
            raise ValueError(f"color must be 0, 1 or 2, got {color}")
        stab_plaqs = lattice.plaquettes_of_color(color)
        local = {int(p): i for i, p in enumerate(stab_plaqs)}
        n_stab = stab_plaqs.size * T
        events = lattice.edges_of_color(color)
        edge_local = {int(e): i for i, e in enumerate(events)}
        ev_stabs = [tuple(sorted(local[int(p)] for p in lattice.dual_adjacency[e])) for e in events]
        meas_plaqs = stab_plaqs
        meas_events = [
            tuple(sorted(edge_local[int(e)] for e in lattice.star_edges(p))) for p in meas_plaqs
        ]
        role_ev = ROLE_EDGE

    n_ev = len(events)
    n_stab_per_round = n_stab // T

    def s_stab(local_p: int, t: int) -> int:
        return (t % T) * n_stab_per_round + local_p

    def s_time(local_e: int, t: int) -> int:
        return n_stab + (t % T) * n_ev + local_e

    num_spins = n_stab + n_ev * T
    terms: list[tuple[int, ...]] = []
    roles: list[str] = []
    for t in range(T):
        for i in range(n_ev):
            stab_part = [s_stab(p, t) for p in ev_stabs[i]]
            # at T = 1 the two time-like factors coincide and cancel
            spins = stab_part if T == 1 else stab_part + [s_time(i, t - 1), s_time(i, t)]
            terms.append(tuple(sorted(spins)))
            roles.append(role_ev)
    for t in range(T):
        for m in range(len(meas_plaqs)):
            spins = [s_time(int(e), t) for e in meas_events[m]]
            terms.append(tuple(sorted(spins)))
            roles.append(ROLE_MEAS)

    tau = disorder.resolve(roles)
    couplings = np.concatenate(
        [np.full(n_ev * T, site_coupling), np.full(len(meas_plaqs) * T, meas_coupling)]
    )

    labels = (
        [{"role": "stabilizer", "plaquette": int(stab_plaqs[i % n_stab_per_round]),
          "round": i // n_stab_per_round} for i in range(n_stab)]
        + [{"role": "timelike", ("site" if kind == "qp" else "edge"): int(events[i % n_ev]),
            "round": i // n_ev} for i in range(n_ev * T)]
    )

    return SpinModel(
        kind=f"gauge-{kind}",
        num_spins=num_spins,
        term_spins=tuple(terms),
        couplings=couplings,
        tau=tau,
        metadata={
            "lattice": [lattice.l1, lattice.l2],
            "rounds": T,
            "color": (color if kind == "bilinear" else None),
            "n_stabilizer_spins": n_stab,
            "n_timelike_spins": n_ev * T,
            "spin_labels": labels,
            "term_roles": roles,
        },
    )


def gauge_symmetry_generator(model: SpinModel, plaquette: int, t: int) -> np.ndarray:
    """Spin-flip mask leaving every term of a qp-kind gauge model invariant.

    Flips the six time-like spins of the plaquette's hexagon at round t
    together with the plaquette's stabilizer spins at rounds t and t+1.
    """
    if model.kind != "gauge-qp":
        raise ValueError("generators are only defined for the qp-kind gauge model")
    T = model.metadata["rounds"]
    n_stab = model.metadata["n_stabilizer_spins"]
    P = n_stab // T
    mask = np.zeros(model.num_spins, dtype=np.uint8)
    mask[(t % T) * P + plaquette] ^= 1
    mask[((t + 1) % T) * P + plaquette] ^= 1
    # the (plaquette, t) measurement term lists exactly the six time-like
    # spins of the hexagon at round t
    n_ev_terms = model.n_terms - P * T
    meas_index = n_ev_terms + (t % T) * P + plaquette
    for s in model.term_spins[meas_index]:
        mask[s] ^= 1
    return mask


def temporal_tube_loop(model: SpinModel, plaquette: int) -> dict:
    """Wilson tube through time for one plaquette of a gauge model.

    The loop multiplies the plaquette's measurement term at every round:
    each time-like spin around the plaquette appears exactly once per
    round, and the quenched measurement signs enter via ``sign_terms``.
    Any symmetry generator overlaps the tube in an even number of spins,
    so the tube is invariant under the local symmetry; its average
    discriminates the ordered (near 1) from the disordered (near 0) phase.
    """
    if not model.kind.startswith("gauge-"):
        raise ValueError("temporal tubes are defined for gauge models only")
    T = model.metadata["rounds"]
    # one error term per time-like spin, so the measurement terms start there
    n_ev_terms = model.metadata["n_timelike_spins"]
    n_meas = (model.n_terms - n_ev_terms) // T
    if not 0 <= plaquette < n_meas:
        raise ValueError(f"plaquette index must be in [0, {n_meas}), got {plaquette}")
    spins: list[int] = []
    sign_terms: list[int] = []
    for t in range(T):
        idx = n_ev_terms + t * n_meas + plaquette
        sign_terms.append(idx)
        spins.extend(model.term_spins[idx])
    return {"spins": spins, "sign_terms": sign_terms}


def qp_disorder_from_chain(chain: ErrorChain) -> DisorderSpec:
    """Explicit tau for build_qp_model: -1 exactly on the chain's flagged sites."""
    return DisorderSpec(tau=tuple(int(t) for t in 1 - 2 * chain.qp_sites.astype(np.int64)))


def bilinear_disorder_from_chain(chain: ErrorChain) -> DisorderSpec:
    """Explicit tau per global edge for build_bilinear_models."""
    return DisorderSpec(tau=tuple(int(t) for t in 1 - 2 * chain.bilinear_edges.astype(np.int64)))


def gauge_disorder_from_history(
    lattice: CodeLattice, history: ErrorHistory, kind: str = "qp", color: int = 0
) -> DisorderSpec:
    """Explicit tau for build_gauge_model, matching its term order."""
    taus: list[int] = []
    T = history.rounds
    for t in range(T):
        ch = history.chains[t]
        if kind == "qp":
            taus.extend(int(x) for x in 1 - 2 * ch.qp_sites.astype(np.int64))
        else:
            edges = lattice.edges_of_color(color)
            taus.extend(int(1 - 2 * ch.bilinear_edges[e]) for e in edges)
    for t in range(T):
        if kind == "qp":
            taus.extend(int(x) for x in 1 - 2 * history.measurement_faults[t].astype(np.int64))
        else:
            plaqs = lattice.plaquettes_of_color(color)
            taus.extend(int(1 - 2 * history.measurement_faults[t, p]) for p in plaqs)
    return DisorderSpec(tau=tuple(taus))
