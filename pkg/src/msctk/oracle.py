"""Brute-force exact computations on small instances.

Everything here enumerates: partition functions and observables over all
2^V spin configurations (V capped so the suite stays fast), error-class
probabilities over all errors with a given syndrome, and the
correspondence between error likelihoods and Boltzmann weights that the
whole package rests on.

Key identity being verified: with the inverse temperature matched to the
error rate (beta = nishimori_beta(p)), the Boltzmann weight of a spin
configuration equals, up to one global constant, the probability of the
error obtained by deforming the reference error with the term flips that
configuration selects.  Summing over configurations, ratios of partition
functions equal ratios of deformation-class probabilities exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gf2
from .algebra import StabilizerBasis
from .lattice import CodeLattice
from .models import (
    DisorderSpec,
    SpinModel,
    build_bilinear_models,
    build_qp_model,
    nishimori_beta,
)
from .noise import ErrorChain

ENUMERATION_BOUND = 28
_BLOCK_BITS = 18  # configurations enumerated in blocks of 2^18


def _term_masks(model: SpinModel) -> np.ndarray:
    masks = np.zeros(model.n_terms, dtype=np.uint64)
    for t, spins in enumerate(model.term_spins):
        m = 0
        for s in spins:
            m |= 1 << int(s)
        masks[t] = m
    return masks


def _config_signs(configs: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """(n_configs, n_terms) +/-1 products; bit=1 in a config means spin -1."""
    par = np.bitwise_count(configs[:, None] & masks[None, :]).astype(np.int64) & 1
    return (1 - 2 * par).astype(np.float64)


def all_term_signs(model: SpinModel) -> np.ndarray:
    """Sign matrix over all 2^V configurations (V small)."""
    if model.num_spins > 24:
        raise ValueError("sign-matrix enumeration capped at 24 spins")
    configs = np.arange(1 << model.num_spins, dtype=np.uint64)
    return _config_signs(configs, _term_masks(model))


@dataclass
class ExactResult:
    """Exact thermal observables of one model at one inverse temperature."""

    beta: float
    n_spins: int
    log_z: float
    e_mean: float
    m2_mean: float
    m4_mean: float
    q2_mean: float
    q4_mean: float | None
    u_q: float | None
    log_weights: np.ndarray | None = None  # (2^V,), stored for V <= 20

    def probability(self, config: int) -> float:
        if self.log_weights is None:
            raise ValueError("per-configuration access only stored for V <= 20")
        return float(np.exp(self.log_weights[config] - self.log_z))

    def probabilities(self) -> np.ndarray:
        if self.log_weights is None:
            raise ValueError("per-configuration access only stored for V <= 20")
        return np.exp(self.log_weights - self.log_z)


def _walsh_hadamard(v: np.ndarray) -> np.ndarray:
    """In-place fast Walsh-Hadamard transform (unnormalized)."""
    n = v.size
    h = 1
    while h < n:
        v = v.reshape(-1, 2 * h)
        a = v[:, :h].copy()
        b = v[:, h:]
        v[:, :h] = a + b
        v[:, h:] = a - b
        v = v.reshape(-1)
        h *= 2
    return v


def exact_partition(model: SpinModel, beta: float) -> ExactResult:
    """Exact sums over all 2^V configurations (V <= 28), in log space.

    Overlap moments <q^2>, <q^4> refer to two independent replicas at the
    same beta and are computed exactly through the XOR autocorrelation of
    the Boltzmann distribution (fast Walsh-Hadamard transform) for V <= 24.
    """
    v_spins = model.num_spins
    if v_spins > ENUMERATION_BOUND:
        raise ValueError(
            f"exact enumeration capped at {ENUMERATION_BOUND} spins, got {v_spins}"
        )
    beta = float(beta)
    masks = _term_masks(model)
    coupling_tau = model.couplings * model.tau
    n_configs = 1 << v_spins
    block = 1 << min(_BLOCK_BITS, v_spins)

    # streaming logsumexp with shifted accumulators
    shift = None
    s0 = 0.0     # sum exp(-beta E - shift)
    s_e = 0.0    # sum E * w
    s_m2 = 0.0
    s_m4 = 0.0
    gram = np.zeros((v_spins, v_spins))
    keep_weights = v_spins <= 20
    log_w_all = np.empty(n_configs) if keep_weights else None

    for start in range(0, n_configs, block):
        idx = np.arange(start, min(start + block, n_configs), dtype=np.uint64)
        signs = _config_signs(idx, masks)
        energies = -(signs @ coupling_tau)
        log_w = -beta * energies
        if keep_weights:
            log_w_all[start : start + idx.size] = log_w
        bmax = float(log_w.max())
        if shift is None:
            shift = bmax
        elif bmax > shift:
            scale = np.exp(shift - bmax)
            s0 *= scale
            s_e *= scale
            s_m2 *= scale
            s_m4 *= scale
            gram *= scale
            shift = bmax
        w = np.exp(log_w - shift)
        s0 += float(w.sum())
        s_e += float(w @ energies)
        pop = np.bitwise_count(idx).astype(np.int64)
        m = (v_spins - 2 * pop) / v_spins
        s_m2 += float(w @ m**2)
        s_m4 += float(w @ m**4)
        bits = ((idx[:, None] >> np.arange(v_spins, dtype=np.uint64)[None, :]) & 1).astype(
            np.float64
        )
        spins = 1.0 - 2.0 * bits
        gram += (spins * w[:, None]).T @ spins

    log_z = float(np.log(s0) + shift)
    e_mean = s_e / s0
    m2_mean = s_m2 / s0
    m4_mean = s_m4 / s0
    corr = gram / s0
    q2_mean = float((corr**2).sum() / v_spins**2)

    q4_mean = None
    u_q = None
    if v_spins <= 24:
        probs = (
            np.exp(log_w_all - shift) / s0
            if keep_weights
            else _probs_recomputed(model, beta, shift, s0)
        )
        # q(c1, c2) depends only on d = c1 XOR c2; the XOR autocorrelation of
        # the probability vector is WHT(p)^2 transformed back
        ft = _walsh_hadamard(probs.copy())
        auto = _walsh_hadamard(ft**2) / probs.size
        d = np.arange(n_configs, dtype=np.uint64)
        qd = (v_spins - 2 * np.bitwise_count(d).astype(np.int64)) / v_spins
        q2_wht = float(auto @ qd**2)
        q4_mean = float(auto @ qd**4)
        # prefer the WHT value (identical up to roundoff); keep Gram as cross-check
        if abs(q2_wht - q2_mean) > 1e-9:
            raise AssertionError(
                f"internal inconsistency in overlap moments: {q2_wht} vs {q2_mean}"
            )
        q2_mean = q2_wht
        u_q = float(1.0 - q4_mean / (3.0 * q2_mean**2)) if q2_mean > 0 else 0.0

    return ExactResult(
        beta=beta,
        n_spins=v_spins,
        log_z=log_z,
        e_mean=e_mean,
        m2_mean=m2_mean,
        m4_mean=m4_mean,
        q2_mean=q2_mean,
        q4_mean=q4_mean,
        u_q=u_q,
        log_weights=log_w_all,
    )


def _probs_recomputed(model, beta, shift, s0):
    masks = _term_masks(model)
    coupling_tau = model.couplings * model.tau
    n_configs = 1 << model.num_spins
    out = np.empty(n_configs)
    block = 1 << _BLOCK_BITS
    for start in range(0, n_configs, block):
        idx = np.arange(start, min(start + block, n_configs), dtype=np.uint64)
        signs = _config_signs(idx, masks)
        out[start : start + idx.size] = np.exp(beta * (signs @ coupling_tau) - shift)
    return out / s0


# ---------------------------------------------------------------------------
# error-class enumeration


def _qp_setup(lattice: CodeLattice):
    """(syndrome matrix over site space, site-support map, location count)."""
    a = lattice.support_matrix.astype(np.uint8)
    support = np.eye(lattice.n_sites, dtype=np.uint8)
    return a, support, lattice.n_sites


def _bilinear_setup(lattice: CodeLattice, color: int):
    """Same, over the chosen color's edge space."""
    edges = lattice.edges_of_color(color)
    m = edges.size
    a = np.zeros((lattice.n_plaquettes, m), dtype=np.uint8)
    support = np.zeros((m, lattice.n_sites), dtype=np.uint8)
    for j, e in enumerate(edges):
        a[lattice.dual_adjacency[e], j] = 1
        support[j, lattice.edges[e]] ^= 1
    return a, support, m


def _as_location_vector(lattice, error, error_type, color):
    if isinstance(error, ErrorChain):
        vec = error.qp_sites if error_type == "qp" else error.bilinear_edges
    else:
        vec = np.asarray(error, dtype=np.uint8)
    if error_type == "qp":
        if vec.shape != (lattice.n_sites,):
            raise ValueError(f"qp error vector must have length {lattice.n_sites}")
        return vec.astype(np.uint8)
    if error_type == "bilinear":
        if vec.shape != (lattice.n_edges,):
            raise ValueError(f"bilinear error vector must have length {lattice.n_edges}")
        edges = lattice.edges_of_color(color)
        off_color = vec.copy()
        off_color[edges] = 0
        if off_color.any():
            raise ValueError("bilinear error flags edges outside the requested color")
        return vec[edges].astype(np.uint8)
    raise ValueError(f"unknown error type {error_type!r}")


@dataclass
class ClassEnumeration:
    """Probability mass of each error class sharing one syndrome."""

    error_type: str
    color: int | None
    n_locations: int
    probabilities: dict[bytes, float]
    representatives: dict[bytes, np.ndarray]
    total: float

    @property
    def n_classes(self) -> int:
        return len(self.probabilities)


def enumerate_class_probabilities(
    lattice: CodeLattice,
    error,
    p: float,
    error_type: str = "qp",
    color: int = 0,
) -> ClassEnumeration:
    """Enumerate every error with the reference syndrome, grouped by class.

    Classes are cosets under multiplication by plaquette operators (equal
    site support modulo the stabilizer row space).  Each error contributes
    p^w (1-p)^(M-w) with w its number of flagged locations out of M.
    """
    if not (0.0 < p < 1.0):
        raise ValueError(f"rate must lie in (0, 1), got {p}")
    if error_type == "qp":
        a, support, m_loc = _qp_setup(lattice)
    else:
        a, support, m_loc = _bilinear_setup(lattice, color)
    e_loc = _as_location_vector(lattice, error, error_type, color)

    kernel = gf2.null_space(a)
    k = kernel.shape[0]
    if k > 22:
        raise ValueError(f"kernel dimension {k} exceeds the enumeration bound (22)")

    stab = StabilizerBasis(lattice)
    n_vecs = 1 << k
    bits = ((np.arange(n_vecs, dtype=np.uint64)[:, None] >> np.arange(k, dtype=np.uint64)) & 1).astype(
        np.uint8
    )
    probs: dict[bytes, float] = {}
    reps: dict[bytes, np.ndarray] = {}
    log_p, log_1p = np.log(p), np.log(1.0 - p)
    block = 1 << 14
    for start in range(0, n_vecs, block):
        chunk = bits[start : start + block]
        vecs = (chunk @ kernel) % 2
        vecs ^= e_loc[None, :]
        weights = vecs.sum(axis=1).astype(np.int64)
        pr = np.exp(weights * log_p + (m_loc - weights) * log_1p)
        supports = (vecs.astype(np.int64) @ support.astype(np.int64)) % 2
        for row in range(vecs.shape[0]):
            label = stab.canonical(supports[row].astype(np.uint8)).tobytes()
            if label in probs:
                probs[label] += float(pr[row])
            else:
                probs[label] = float(pr[row])
                reps[label] = vecs[row].copy()
    return ClassEnumeration(
        error_type=error_type,
        color=(color if error_type == "bilinear" else None),
        n_locations=m_loc,
        probabilities=probs,
        representatives=reps,
        total=float(sum(probs.values())),
    )


# ---------------------------------------------------------------------------
# mapping consistency


@dataclass
class MappingReport:
    """Outcome of the Boltzmann-weight <-> error-probability verification."""

    ok: bool
    proportionality_ok: bool
    max_proportionality_dev: float
    failing_config: int | None
    class_ratio_ok: bool
    max_class_ratio_dev: float
    n_deformation_classes: int
    error_type: str
    color: int | None
    p: float
    beta: float

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "proportionality_ok": self.proportionality_ok,
            "max_proportionality_dev": self.max_proportionality_dev,
            "failing_config": self.failing_config,
            "class_ratio_ok": self.class_ratio_ok,
            "max_class_ratio_dev": self.max_class_ratio_dev,
            "n_deformation_classes": self.n_deformation_classes,
            "error_type": self.error_type,
            "color": self.color,
            "p": self.p,
            "beta": self.beta,
        }


def _model_for_error(lattice, e_loc, error_type, color):
    tau = tuple(int(t) for t in 1 - 2 * e_loc.astype(np.int64))
    if error_type == "qp":
        return build_qp_model(lattice, DisorderSpec(tau=tau))
    full = np.ones(lattice.n_edges, dtype=np.int64)
    full[lattice.edges_of_color(color)] = np.array(tau)
    return build_bilinear_models(lattice, DisorderSpec(tau=tuple(int(t) for t in full)))[color]


def mapping_consistency_check(
    lattice: CodeLattice,
    error,
    p: float,
    error_type: str = "qp",
    color: int = 0,
    tol: float = 1e-12,
    _tau_corruption: int | None = None,
) -> MappingReport:
    """Verify the exact error-model <-> spin-model correspondence.

    Part 1: for every spin configuration s, exp(-beta H(s)) equals one
    global constant times the probability of the deformed error e(s)
    (reference error XOR the terms s leaves negative).  Part 2: partition
    functions of models built from different deformation classes have the
    same ratios as the classes' total probabilities.  Both at tolerance
    ``tol`` on log quantities.

    ``_tau_corruption`` flips one tau entry after building the model; it
    exists so fault-injection tests can watch the check fail.
    """
    beta = nishimori_beta(p)
    e_loc = _as_location_vector(lattice, error, error_type, color)
    model = _model_for_error(lattice, e_loc, error_type, color)
    if _tau_corruption is not None:
        tau = model.tau.copy()
        tau[_tau_corruption % model.n_terms] *= -1
        model = SpinModel(
            kind=model.kind,
            num_spins=model.num_spins,
            term_spins=model.term_spins,
            couplings=model.couplings,
            tau=tau,
            metadata=model.metadata,
        )
    m_loc = e_loc.size
    if model.num_spins > 20:
        raise ValueError("mapping check enumerates spins; capped at 20")

    signs = all_term_signs(model)                      # (2^V, n_terms)
    coupling_tau = model.couplings * model.tau
    log_weights = beta * (signs @ coupling_tau)        # -beta H
    # deformed error, from the *reference* error's tau: location flagged
    # iff tau_ref * prod(s) = -1 (must match the model's tau for the
    # proportionality to hold — that is the point of the check)
    tau_ref = (1 - 2 * e_loc.astype(np.int64)).astype(np.float64)
    tau_signs = signs * tau_ref[None, :]
    weights_w = (tau_signs < 0).sum(axis=1)
    log_p, log_1p = np.log(p), np.log(1.0 - p)
    log_prob = weights_w * log_p + (m_loc - weights_w) * log_1p
    log_ratio = log_weights - log_prob
    devs = np.abs(log_ratio - log_ratio[0])
    max_prop_dev = float(devs.max())
    prop_ok = max_prop_dev <= tol
    failing = None if prop_ok else int(devs.argmax())

    # deformation-class ratios: classes are cosets of the span of
    # single-spin deformations inside the kernel of the syndrome map
    if error_type == "qp":
        a, _, _ = _qp_setup(lattice)
    else:
        a, _, _ = _bilinear_setup(lattice, color)
    incidence = np.zeros((model.num_spins, m_loc), dtype=np.uint8)
    for t, spins in enumerate(model.term_spins):
        for s in spins:
            incidence[s, t] ^= 1
    deform_rows, deform_pivots = gf2.rref(incidence)
    kernel = gf2.null_space(a)

    labels: dict[bytes, np.ndarray] = {}
    n_vecs = 1 << kernel.shape[0]
    bits = (
        (np.arange(n_vecs, dtype=np.uint64)[:, None] >> np.arange(kernel.shape[0], dtype=np.uint64))
        & 1
    ).astype(np.uint8)
    combos = (bits @ kernel) % 2
    for row in combos:
        lab = gf2.reduce_mod(deform_rows, deform_pivots, row).tobytes()
        if lab not in labels:
            labels[lab] = row

    d_dim = deform_rows.shape[0]
    d_bits = (
        (np.arange(1 << d_dim, dtype=np.uint64)[:, None] >> np.arange(d_dim, dtype=np.uint64)) & 1
    ).astype(np.uint8)
    deform_all = (d_bits @ deform_rows) % 2

    log_zs = []
    log_ps = []
    for rep in labels.values():
        e_rep = e_loc ^ rep
        mdl = _model_for_error(lattice, e_rep, error_type, color)
        log_zs.append(exact_partition(mdl, beta).log_z)
        members = deform_all ^ e_rep[None, :]
        w = members.sum(axis=1).astype(np.int64)
        log_terms = w * log_p + (m_loc - w) * log_1p
        mx = log_terms.max()
        log_ps.append(float(mx + np.log(np.exp(log_terms - mx).sum())))
    log_zs = np.array(log_zs)
    log_ps = np.array(log_ps)
    ratio_devs = np.abs((log_zs - log_zs[0]) - (log_ps - log_ps[0]))
    max_ratio_dev = float(ratio_devs.max())
    ratio_ok = max_ratio_dev <= tol

    return MappingReport(
        ok=prop_ok and ratio_ok,
        proportionality_ok=prop_ok,
        max_proportionality_dev=max_prop_dev,
        failing_config=failing,
        class_ratio_ok=ratio_ok,
        max_class_ratio_dev=max_ratio_dev,
        n_deformation_classes=len(labels),
        error_type=error_type,
        color=(color if error_type == "bilinear" else None),
        p=p,
        beta=beta,
    )


# ---------------------------------------------------------------------------
# exact disorder-averaged bond identity


def exact_nishimori_bond_average(
    lattice: CodeLattice, p: float, error_type: str = "qp", color: int = 0
) -> float:
    """Exact disorder average of the per-term bond estimator tau * prod(s).

    At the matched temperature this equals 1 - 2p for both model families.
    The bilinear average enumerates all edge disorders directly; the
    three-spin average collapses the 2^N disorders to deformation-coset
    representatives, which is exact because gauge-equivalent disorders
    share all gauge-invariant observables.
    """
    beta = nishimori_beta(p)
    if error_type == "bilinear":
        model = build_bilinear_models(
            lattice, DisorderSpec(tau=tuple([1] * lattice.n_edges))
        )[color]
        signs = all_term_signs(model)                  # (2^V, M)
        m_loc = model.n_terms
        if m_loc > 22:
            raise ValueError("bilinear bond enumeration capped at 22 edges per color")
        d = np.arange(1 << m_loc, dtype=np.uint64)
        tau_all = 1.0 - 2.0 * (
            ((d[:, None] >> np.arange(m_loc, dtype=np.uint64)) & 1).astype(np.float64)
        )
        w = (tau_all < 0).sum(axis=1)
        disorder_prob = np.exp(w * np.log(p) + (m_loc - w) * np.log(1 - p))
        boltz = np.exp(beta * (tau_all @ signs.T))     # (2^M, 2^V)
        z = boltz.sum(axis=1)
        bond_num = ((tau_all @ signs.T) * boltz).sum(axis=1) / m_loc
        return float((disorder_prob * bond_num / z).sum())

    if error_type != "qp":
        raise ValueError(f"unknown error type {error_type!r}")
    model = build_qp_model(lattice, DisorderSpec(tau=tuple([1] * lattice.n_sites)))
    n_loc = lattice.n_sites
    if model.num_spins > 14 or n_loc > 26:
        raise ValueError("three-spin bond enumeration is sized for the (2,2) lattice")
    signs = all_term_signs(model)                      # (2^V, N)
    # deformation space = stabilizer row space; canonical coset reps vanish
    # on the pivot coordinates
    rows, pivots = gf2.rref(lattice.support_matrix)
    d_dim = rows.shape[0]
    free = np.array([c for c in range(n_loc) if c not in set(pivots)], dtype=np.int64)
    k = free.size
    n_reps = 1 << k
    prefac_log = n_loc * np.log(1 - p) - beta * n_loc + (d_dim - model.num_spins) * np.log(2.0)
    total = 0.0
    norm = 0.0
    block = 1 << 12
    for start in range(0, n_reps, block):
        idx = np.arange(start, min(start + block, n_reps), dtype=np.uint64)
        chunk_bits = ((idx[:, None] >> np.arange(k, dtype=np.uint64)) & 1).astype(np.float64)
        e_reps = np.zeros((idx.size, n_loc))
        e_reps[:, free] = chunk_bits
        tau_reps = 1.0 - 2.0 * e_reps
        site_terms = tau_reps @ signs.T                # (B, 2^V): sum_l tau_l sigma_l
        boltz = np.exp(beta * site_terms + prefac_log)
        z = boltz.sum(axis=1)
        num = (site_terms / n_loc * boltz).sum(axis=1)
        total += float(num.sum())
        norm += float(z.sum())
    if abs(norm - 1.0) > 1e-9:
        raise AssertionError(f"coset-collapsed disorder measure sums to {norm}, not 1")
    return total
