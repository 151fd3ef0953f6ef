"""Compiled inner loops for the Monte Carlo sampler.

All randomness is passed in as pre-drawn uniform arrays, so the kernels are
pure functions and results are independent of threading or call batching.
States and term signs are int8 (+/-1); `coupling_tau[t]` is the product
coupling_t * tau_t, so the energy is -sum(coupling_tau * term_sign).
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def sweep(state, term_sign, coupling_tau, spin_ptr, spin_terms, beta, uniforms, energy):
    """One typewriter Metropolis sweep; returns the updated energy.

    Proposal i flips spin i; dE = 2 * sum of coupling_tau * term_sign over
    the terms containing i; accepted when dE < 0, with probability 1/2 when
    dE == 0, and when u < exp(-beta*dE) otherwise.  Ties must be broken
    stochastically: any symmetric acceptance satisfies detailed balance at
    dE == 0, but accepting ties deterministically turns the fixed scan
    order into a reducible chain on landscapes with degenerate local moves
    (some states are then never visited at sweep boundaries).
    `state`, `term_sign` are updated in place.
    """
    n = state.size
    for i in range(n):
        de = 0.0
        for k in range(spin_ptr[i], spin_ptr[i + 1]):
            de += coupling_tau[spin_terms[k]] * term_sign[spin_terms[k]]
        de *= 2.0
        if de == 0.0:
            accept = uniforms[i] < 0.5
        else:
            accept = de < 0.0 or uniforms[i] < np.exp(-beta * de)
        if accept:
            state[i] = -state[i]
            for k in range(spin_ptr[i], spin_ptr[i + 1]):
                t = spin_terms[k]
                term_sign[t] = -term_sign[t]
            energy += de
    return energy


@njit(cache=True)
def pt_block(
    states,        # (n_beta, n_rep, V) int8, updated in place
    term_signs,    # (n_beta, n_rep, n_terms) int8, updated in place
    energies,      # (n_beta, n_rep) float64, updated in place
    coupling_tau,  # (n_terms,) float64
    spin_ptr,      # (V+1,) int64
    spin_terms,    # (nnz,) int64
    betas,         # (n_beta,) float64, ascending
    u_sweeps,      # (S, n_beta, n_rep, V) float64
    u_swaps,       # (S, n_rep, n_beta-1) float64
    parities,      # (S,) int64; pairing offset per step
    accepts,       # (n_beta-1,) int64, updated in place
    proposals,     # (n_beta-1,) int64, updated in place
):
    """S sweeps of every replica, with one replica-exchange pass per sweep.

    Exchange pass `s` proposes adjacent ladder pairs starting at
    `parities[s]` (alternating even/odd pairings); a swap of the states at
    beta_k and beta_{k+1} is accepted with probability
    min(1, exp((beta_{k+1}-beta_k) * (E_{k+1}-E_k))), independently for
    each replica line.
    """
    n_beta, n_rep, n_spins = states.shape
    n_terms = term_signs.shape[2]
    n_steps = u_sweeps.shape[0]
    for s in range(n_steps):
        for ib in range(n_beta):
            for rep in range(n_rep):
                energies[ib, rep] = sweep(
                    states[ib, rep],
                    term_signs[ib, rep],
                    coupling_tau,
                    spin_ptr,
                    spin_terms,
                    betas[ib],
                    u_sweeps[s, ib, rep],
                    energies[ib, rep],
                )
        par = parities[s]
        for rep in range(n_rep):
            for k in range(par, n_beta - 1, 2):
                d_beta = betas[k + 1] - betas[k]
                d_energy = energies[k + 1, rep] - energies[k, rep]
                proposals[k] += 1
                arg = d_beta * d_energy
                if arg >= 0.0 or u_swaps[s, rep, k] < np.exp(arg):
                    accepts[k] += 1
                    for v in range(n_spins):
                        tmp = states[k, rep, v]
                        states[k, rep, v] = states[k + 1, rep, v]
                        states[k + 1, rep, v] = tmp
                    for t in range(n_terms):
                        tmp8 = term_signs[k, rep, t]
                        term_signs[k, rep, t] = term_signs[k + 1, rep, t]
                        term_signs[k + 1, rep, t] = tmp8
                    tmpe = energies[k, rep]
                    energies[k, rep] = energies[k + 1, rep]
                    energies[k + 1, rep] = tmpe
