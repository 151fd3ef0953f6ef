"""Parallel-tempering Metropolis sampler with disorder averaging.

A single disorder sample carries two independent replicas at every rung of
an ascending beta ladder. Each sweep updates all replicas (typewriter scan)
and then proposes replica exchanges on alternating adjacent pairs. The
two replicas at equal beta give the spin overlap q, whose Binder ratio
U_q = 1 - <q^4> / (3 <q^2>^2) drives crossing analyses.

Reproducibility contract: every stochastic ingredient is drawn from a
Philox stream keyed by (master seed, purpose, sample key), so results are
bit-identical across runs, worker counts, and checkpoint/resume splits.
Equilibration is judged per sample by agreement (within 2 combined sigma)
of the last two logarithmic time bins of the coldest replica's energy
series; failing samples are excluded and counted, and the ensemble is
flagged when more than 5% of samples fail.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import rng as rngmod
from .models import ROLE_EDGE, ROLE_MEAS, ROLE_SITE, SpinModel

CHECKPOINT_VERSION = 1

_BOND_KEYS = {ROLE_SITE: "bond_site", ROLE_EDGE: "bond_edge", ROLE_MEAS: "bond_meas"}


@dataclass(frozen=True)
class McConfig:
    """Sampler schedule: ladder, lengths, replica count, seeding, checkpoints."""

    betas: tuple[float, ...]
    sweeps: int
    thermalization: int
    measure_interval: int = 8
    replicas_per_beta: int = 2
    n_disorder: int = 1
    master_seed: int = 0
    checkpoint_interval: int = 0  # sweeps between checkpoint writes; 0 = never
    init: str = "random"  # "random", or "plus" for an all-up ordered start

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if len(self.betas) < 1 or any(
            b2 <= b1 for b1, b2 in zip(self.betas, self.betas[1:])
        ):
            raise ValueError("beta ladder must be non-empty and strictly ascending")
        if self.init not in ("random", "plus"):
            raise ValueError(f"init must be 'random' or 'plus', got {self.init!r}")
        if not 0 <= self.thermalization < self.sweeps:
            raise ValueError("need 0 <= thermalization < sweeps")
        if self.measure_interval < 1:
            raise ValueError("measure_interval must be >= 1")
        if self.sweeps % self.measure_interval or self.thermalization % self.measure_interval:
            raise ValueError("sweeps and thermalization must be multiples of measure_interval")
        if self.replicas_per_beta != 2:
            raise ValueError("overlap observables require exactly 2 replicas per beta")
        if self.n_disorder < 1:
            raise ValueError("n_disorder must be >= 1")
        if self.checkpoint_interval and self.checkpoint_interval % self.measure_interval:
            raise ValueError("checkpoint_interval must be a multiple of measure_interval")

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(asdict(self), sort_keys=True).encode()
        ).hexdigest()[:16]


class Observables:
    """Running per-beta accumulators for one disorder sample."""

    SCALARS = ("e", "abs_m", "m2", "m4", "q", "q2", "q4",
               "bond_site", "bond_edge", "bond_meas")

    def __init__(self, n_beta: int, n_loops: int = 0):
        self.n_beta = n_beta
        self.n_loops = n_loops
        self.count = 0
        self.sums = {k: np.zeros(n_beta) for k in self.SCALARS}
        self.wilson_sums = np.zeros((n_loops, n_beta))
        self.energy_series: list[list[float]] = [[] for _ in range(n_beta)]

    def add(self, per_beta: dict[str, np.ndarray], wilson: np.ndarray | None = None):
        self.count += 1
        for k in self.SCALARS:
            self.sums[k] += per_beta[k]
        if wilson is not None:
            self.wilson_sums += wilson
        for ib in range(self.n_beta):
            self.energy_series[ib].append(float(per_beta["e"][ib]))

    def means(self) -> dict[str, np.ndarray]:
        if self.count == 0:
            raise RuntimeError("no measurements accumulated")
        out = {k: self.sums[k] / self.count for k in self.SCALARS}
        out["wilson"] = self.wilson_sums / self.count
        return out

    def state_dict(self) -> dict:
        return {
            "count": self.count,
            "sums": {k: v.tolist() for k, v in self.sums.items()},
            "wilson_sums": self.wilson_sums.tolist(),
            "energy_series": self.energy_series,
        }

    @classmethod
    def from_state(cls, d: dict, n_beta: int, n_loops: int) -> "Observables":
        obs = cls(n_beta, n_loops)
        obs.count = d["count"]
        obs.sums = {k: np.array(v) for k, v in d["sums"].items()}
        obs.wilson_sums = np.array(d["wilson_sums"]).reshape(n_loops, n_beta)
        obs.energy_series = [list(s) for s in d["energy_series"]]
        return obs


@dataclass
class SampleRun:
    """Per-beta measurement means for one disorder sample."""

    sample_key: tuple[int, ...]
    betas: tuple[float, ...]
    n_measurements: int
    means: dict[str, np.ndarray]        # keys as Observables.SCALARS plus "wilson"
    equilibrated: bool
    accept_rate: np.ndarray             # (n_beta-1,) replica-exchange acceptance

    def to_json(self) -> str:
        return json.dumps(
            {
                "sample_key": list(self.sample_key),
                "betas": list(self.betas),
                "n_measurements": self.n_measurements,
                "means": {k: np.asarray(v).tolist() for k, v in self.means.items()},
                "equilibrated": bool(self.equilibrated),
                "accept_rate": np.asarray(self.accept_rate).tolist(),
            }
        )

    @staticmethod
    def from_json(text: str) -> "SampleRun":
        d = json.loads(text)
        return SampleRun(
            sample_key=tuple(d["sample_key"]),
            betas=tuple(d["betas"]),
            n_measurements=d["n_measurements"],
            means={k: np.array(v) for k, v in d["means"].items()},
            equilibrated=d["equilibrated"],
            accept_rate=np.array(d["accept_rate"]),
        )


def metropolis_sweep(
    model: SpinModel, state: np.ndarray, beta: float, rng: np.random.Generator
) -> np.ndarray:
    """One in-place typewriter sweep of single-spin Metropolis updates."""
    from . import _kernels

    if state.shape != (model.num_spins,):
        raise ValueError(f"state must have length {model.num_spins}")
    _, _, sptr, sterms = model.flat_arrays()
    coupling_tau = model.couplings * model.tau
    term_sign = model.term_products(state).astype(np.int8)
    _kernels.sweep(
        state, term_sign, coupling_tau, sptr, sterms,
        float(beta), rng.random(model.num_spins), 0.0,
    )
    return state


def parallel_tempering_step(
    model: SpinModel,
    states: np.ndarray,
    betas: Sequence[float],
    rng: np.random.Generator,
    parity: int = 0,
) -> np.ndarray:
    """One replica-exchange pass over adjacent ladder pairs (even/odd by parity).

    ``states`` is (n_beta, V) for one replica line and is permuted in place.
    Returns the boolean acceptance mask over proposed pairs.
    """
    from .models import energy as model_energy

    n_beta = states.shape[0]
    if n_beta < 2:
        raise ValueError("parallel tempering needs at least two betas")
    betas = np.asarray(betas, dtype=float)
    energies = np.array([model_energy(model, states[k]) for k in range(n_beta)])
    accepted = np.zeros(n_beta - 1, dtype=bool)
    for k in range(parity % 2, n_beta - 1, 2):
        arg = (betas[k + 1] - betas[k]) * (energies[k + 1] - energies[k])
        if arg >= 0.0 or rng.random() < math.exp(arg):
            states[[k, k + 1]] = states[[k + 1, k]]
            energies[[k, k + 1]] = energies[[k + 1, k]]
            accepted[k] = True
    return accepted


def _normalize_loops(model: SpinModel, wilson_loops) -> tuple[list[list[int]], np.ndarray]:
    """Validate loop specs; return spin index lists and quenched sign factors.

    A loop is either a sequence of spin indices (value = product of those
    spins) or a dict {"spins": [...], "sign_terms": [...]} whose value is
    additionally multiplied by the product of the model's tau over the
    listed terms, so frustrated disorder flips the loop's reference sign.
    """
    spins_list: list[list[int]] = []
    signs: list[float] = []
    for lp in wilson_loops or []:
        if isinstance(lp, dict):
            extra = set(lp) - {"spins", "sign_terms"}
            if extra:
                raise ValueError(f"unknown Wilson loop keys {sorted(extra)}")
            spins = [int(i) for i in lp["spins"]]
            terms = [int(t) for t in lp.get("sign_terms", [])]
            if any(not 0 <= t < model.n_terms for t in terms):
                raise ValueError("Wilson loop sign_terms index out of range")
            sign = float(np.prod(model.tau[terms])) if terms else 1.0
        else:
            spins = [int(i) for i in lp]
            sign = 1.0
        if not spins or any(not 0 <= i < model.num_spins for i in spins):
            raise ValueError("invalid Wilson loop spin indices")
        spins_list.append(spins)
        signs.append(sign)
    return spins_list, np.array(signs, dtype=np.float64)


def wilson_loop(model: SpinModel, state: np.ndarray, loop) -> float:
    """Signed product of the loop's spins in the given state."""
    spins_list, signs = _normalize_loops(model, [loop])
    return float(signs[0] * np.prod(state[spins_list[0]]))


def measure(model: SpinModel, state_a: np.ndarray, state_b: np.ndarray) -> dict[str, float]:
    """Single-measurement estimators from two equal-beta replicas."""
    if state_a.shape != state_b.shape or state_a.shape != (model.num_spins,):
        raise ValueError("replica states must both have the model's spin count")
    from .models import energy as model_energy

    m_a = float(state_a.mean())
    m_b = float(state_b.mean())
    q = float((state_a.astype(np.int64) * state_b).mean())
    out = {
        "e": 0.5 * (model_energy(model, state_a) + model_energy(model, state_b)),
        "abs_m": 0.5 * (abs(m_a) + abs(m_b)),
        "m2": 0.5 * (m_a**2 + m_b**2),
        "m4": 0.5 * (m_a**4 + m_b**4),
        "q": q,
        "q2": q**2,
        "q4": q**4,
    }
    prods_a = model.term_products(state_a).astype(np.float64)
    prods_b = model.term_products(state_b).astype(np.float64)
    tau = model.tau.astype(np.float64)
    roles = np.array(model.metadata.get("term_roles", [ROLE_SITE] * model.n_terms))
    for role, key in _BOND_KEYS.items():
        idx = np.nonzero(roles == role)[0]
        if idx.size:
            out[key] = 0.5 * float(
                (tau[idx] * prods_a[idx]).mean() + (tau[idx] * prods_b[idx]).mean()
            )
        else:
            out[key] = 0.0
    return out


def _blocked_se(x: np.ndarray, n_blocks: int = 8) -> float:
    """Standard error of the mean from block means (autocorrelation-safe)."""
    n = x.size
    if n < 2:
        return 0.0
    n_blocks = min(n_blocks, n)
    m = n // n_blocks
    means = x[: m * n_blocks].reshape(n_blocks, m).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_blocks))


def log_bin_equilibrated(series: Sequence[float], z: float = 2.0) -> bool:
    """Agreement of the last two logarithmic time bins within z combined sigma.

    The bins are the windows [n/4, n/2) and [n/2, n) of the measurement
    series; short series (< 16 points) are accepted by default.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 16:
        return True
    first = x[n // 4 : n // 2]
    second = x[n // 2 :]
    se = math.sqrt(_blocked_se(first) ** 2 + _blocked_se(second) ** 2)
    return bool(abs(first.mean() - second.mean()) <= z * se or se == 0.0)


def _rng_state_to_json(state: dict) -> dict:
    def conv(v):
        if isinstance(v, np.ndarray):
            return {"__ndarray__": v.tolist(), "dtype": str(v.dtype)}
        if isinstance(v, (np.integer,)):
            return int(v)
        if isinstance(v, dict):
            return {k: conv(x) for k, x in v.items()}
        return v

    return conv(state)


def _rng_state_from_json(state: dict) -> dict:
    def conv(v):
        if isinstance(v, dict) and "__ndarray__" in v:
            return np.array(v["__ndarray__"], dtype=v["dtype"])
        if isinstance(v, dict):
            return {k: conv(x) for k, x in v.items()}
        return v

    return conv(state)


def _atomic_write(path: str, text: str):
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        f.write(text)
    os.replace(tmp, path)


def run_single_model(
    model: SpinModel,
    config: McConfig,
    sample_key: tuple[int, ...] = (0,),
    wilson_loops: Sequence | None = None,
    checkpoint_path: str | None = None,
    resume: bool = False,
) -> SampleRun:
    """Equilibrate and measure one disorder realization across the ladder.

    Deterministic for fixed (model, config, sample_key); a run interrupted
    at a checkpoint and resumed produces bit-identical results to an
    uninterrupted run.
    """
    from . import _kernels

    betas = np.array(config.betas)
    n_beta = betas.size
    n_rep = config.replicas_per_beta
    n_spins = model.num_spins
    loops, loop_signs = _normalize_loops(model, wilson_loops)

    _, _, sptr, sterms = model.flat_arrays()
    coupling_tau = (model.couplings * model.tau).astype(np.float64)
    tau = model.tau.astype(np.float64)
    roles = np.array(model.metadata.get("term_roles", [ROLE_SITE] * model.n_terms))
    role_idx = {role: np.nonzero(roles == role)[0] for role in _BOND_KEYS}

    model_digest = hashlib.sha256(model.to_json().encode()).hexdigest()[:16]

    block = config.measure_interval
    n_blocks = config.sweeps // block
    therm_blocks = config.thermalization // block

    sweep_gen = rngmod.mc_sweep_stream(config.master_seed, *sample_key)
    accepts = np.zeros(max(n_beta - 1, 1), dtype=np.int64)
    proposals = np.zeros(max(n_beta - 1, 1), dtype=np.int64)
    obs = Observables(n_beta, len(loops))
    start_block = 0

    if resume:
        if not (checkpoint_path and os.path.exists(checkpoint_path)):
            raise FileNotFoundError(f"no checkpoint to resume at {checkpoint_path}")
        with open(checkpoint_path) as f:
            ck = json.load(f)
        if ck.get("version") != CHECKPOINT_VERSION:
            raise ValueError(
                f"checkpoint version {ck.get('version')} != supported {CHECKPOINT_VERSION}"
            )
        if ck["model_digest"] != model_digest or ck["config_digest"] != config.digest():
            raise ValueError("checkpoint does not match this model/config")
        if tuple(ck["sample_key"]) != tuple(sample_key):
            raise ValueError("checkpoint belongs to a different sample")
        states = np.array(ck["states"], dtype=np.int8).reshape(n_beta, n_rep, n_spins)
        term_signs = np.array(ck["term_signs"], dtype=np.int8).reshape(
            n_beta, n_rep, model.n_terms
        )
        sweep_gen.bit_generator.state = _rng_state_from_json(ck["rng_state"])
        accepts = np.array(ck["accepts"], dtype=np.int64)
        proposals = np.array(ck["proposals"], dtype=np.int64)
        obs = Observables.from_state(ck["observables"], n_beta, len(loops))
        start_block = ck["blocks_done"]
    else:
        if config.init == "plus":
            states = np.ones((n_beta, n_rep, n_spins), dtype=np.int8)
        else:
            init_gen = rngmod.mc_init_stream(config.master_seed, *sample_key, 0)
            states = np.where(
                init_gen.random((n_beta, n_rep, n_spins)) < 0.5, -1, 1
            ).astype(np.int8)
        term_signs = np.stack(
            [
                np.stack([model.term_products(states[ib, r]) for r in range(n_rep)])
                for ib in range(n_beta)
            ]
        ).astype(np.int8)

    def save_checkpoint(blocks_done: int):
        payload = {
            "version": CHECKPOINT_VERSION,
            "model_digest": model_digest,
            "config_digest": config.digest(),
            "sample_key": list(sample_key),
            "blocks_done": blocks_done,
            "states": states.ravel().tolist(),
            "term_signs": term_signs.ravel().tolist(),
            "rng_state": _rng_state_to_json(sweep_gen.bit_generator.state),
            "accepts": accepts.tolist(),
            "proposals": proposals.tolist(),
            "observables": obs.state_dict(),
        }
        _atomic_write(checkpoint_path, json.dumps(payload))

    for b in range(start_block, n_blocks):
        # exact energies from the maintained signs, so drift cannot accumulate
        energies = -(term_signs.astype(np.float64) @ coupling_tau)
        u_sweeps = sweep_gen.random((block, n_beta, n_rep, n_spins))
        u_swaps = sweep_gen.random((block, n_rep, max(n_beta - 1, 1)))
        parities = (b * block + np.arange(block)) % 2
        _kernels.pt_block(
            states, term_signs, energies, coupling_tau, sptr, sterms,
            betas, u_sweeps, u_swaps, parities, accepts, proposals,
        )
        if b >= therm_blocks:
            per_beta = _measure_all(
                model, states, term_signs, energies, tau, role_idx, n_rep
            )
            wl = None
            if loops:
                wl = np.zeros((len(loops), n_beta))
                for j, lp in enumerate(loops):
                    sub = states[:, :, lp].astype(np.int64)
                    wl[j] = loop_signs[j] * np.prod(sub, axis=2).mean(axis=1)
            obs.add(per_beta, wl)
        if (
            checkpoint_path
            and config.checkpoint_interval
            and ((b + 1) * block) % config.checkpoint_interval == 0
            and b + 1 < n_blocks
        ):
            save_checkpoint(b + 1)

    coldest = obs.energy_series[-1]
    equilibrated = log_bin_equilibrated(coldest)
    return SampleRun(
        sample_key=tuple(sample_key),
        betas=config.betas,
        n_measurements=obs.count,
        means=obs.means(),
        equilibrated=equilibrated,
        accept_rate=accepts / np.maximum(proposals, 1),
    )


def _measure_all(model, states, term_signs, energies, tau, role_idx, n_rep):
    """Vectorized per-beta estimators from current states/signs."""
    n_beta = states.shape[0]
    m = states.mean(axis=2)                      # (n_beta, n_rep)
    q = (states[:, 0] * states[:, 1]).mean(axis=1).astype(np.float64)
    out = {
        "e": energies.mean(axis=1),
        "abs_m": np.abs(m).mean(axis=1),
        "m2": (m**2).mean(axis=1),
        "m4": (m**4).mean(axis=1),
        "q": q,
        "q2": q**2,
        "q4": q**4,
    }
    signs = term_signs.astype(np.float64)        # (n_beta, n_rep, n_terms)
    for role, key in _BOND_KEYS.items():
        idx = role_idx[role]
        if idx.size:
            out[key] = (signs[:, :, idx] * tau[idx]).mean(axis=(1, 2))
        else:
            out[key] = np.zeros(n_beta)
    return out


@dataclass
class EnsembleResult:
    """Disorder-averaged observables with bootstrap errors."""

    betas: tuple[float, ...]
    n_requested: int
    n_used: int
    n_excluded: int
    flagged: bool
    observables: dict[str, list[float]] = field(default_factory=dict)
    wilson: dict = field(default_factory=dict)
    accept_rate: list[float] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "betas": list(self.betas),
                "n_requested": self.n_requested,
                "n_used": self.n_used,
                "n_excluded": self.n_excluded,
                "flagged": self.flagged,
                "observables": self.observables,
                "wilson": self.wilson,
                "accept_rate": self.accept_rate,
                "config": self.config,
            }
        )

    @staticmethod
    def from_json(text: str) -> "EnsembleResult":
        d = json.loads(text)
        return EnsembleResult(
            betas=tuple(d["betas"]),
            n_requested=d["n_requested"],
            n_used=d["n_used"],
            n_excluded=d["n_excluded"],
            flagged=d["flagged"],
            observables=d["observables"],
            wilson=d["wilson"],
            accept_rate=d["accept_rate"],
            config=d["config"],
        )


def binder_ratio(q2: np.ndarray, q4: np.ndarray) -> np.ndarray:
    """U_q = 1 - <q^4> / (3 <q^2>^2), elementwise over the ladder."""
    q2 = np.asarray(q2, dtype=float)
    q4 = np.asarray(q4, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = 1.0 - q4 / (3.0 * q2**2)
    return np.where(q2 > 0, u, 0.0)


def run_disorder_ensemble(
    build_sample: Callable[[int], SpinModel | Sequence[SpinModel]],
    config: McConfig,
    wilson_loops: Sequence | None = None,
    n_bootstrap: int = 1000,
    cache_dir: str | None = None,
) -> EnsembleResult:
    """Average MC observables over quenched disorder with bootstrap errors.

    ``build_sample(i)`` returns the model (or several independent models,
    e.g. the three color sectors) for disorder sample i. Samples failing
    the equilibration check are excluded and counted; the result is flagged
    when exclusions exceed 5%. Bootstrap resampling (over disorder samples,
    keeping each sample's sub-models together) supplies the error bars.

    With ``cache_dir`` each finished sample is persisted there, and a run
    that was interrupted — even mid-sample, via ``checkpoint_interval`` —
    picks up where it left off with bit-identical results.
    """
    n_beta = len(config.betas)
    rows: list[dict[str, np.ndarray]] = []
    groups: list[int] = []
    n_excluded = 0
    n_rows_total = 0
    accept_sum = np.zeros(max(n_beta - 1, 1))
    loops = list(wilson_loops or [])
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)

    for i in range(config.n_disorder):
        built = build_sample(i)
        models = list(built) if isinstance(built, (list, tuple)) else [built]
        for sub, mdl in enumerate(models):
            run = None
            sample_path = (
                os.path.join(cache_dir, f"sample_{i}_{sub}.json") if cache_dir else None
            )
            if sample_path and os.path.exists(sample_path):
                with open(sample_path) as f:
                    run = SampleRun.from_json(f.read())
            if run is None:
                ck_path = (
                    os.path.join(cache_dir, f"checkpoint_{i}_{sub}.json")
                    if cache_dir and config.checkpoint_interval
                    else None
                )
                run = run_single_model(
                    mdl,
                    config,
                    sample_key=(i, sub),
                    wilson_loops=loops,
                    checkpoint_path=ck_path,
                    resume=bool(ck_path and os.path.exists(ck_path)),
                )
                if sample_path:
                    _atomic_write(sample_path, run.to_json())
                if ck_path and os.path.exists(ck_path):
                    os.remove(ck_path)
            n_rows_total += 1
            if not run.equilibrated:
                n_excluded += 1
                continue
            rows.append(run.means)
            groups.append(i)
            accept_sum += run.accept_rate

    if not rows:
        raise RuntimeError("all disorder samples failed the equilibration check")

    stacked = {
        k: np.stack([r[k] for r in rows]) for k in Observables.SCALARS
    }  # (n_rows, n_beta)
    wilson_stack = np.stack([r["wilson"] for r in rows]) if loops else None

    means = {k: stacked[k].mean(axis=0) for k in Observables.SCALARS}
    u_q = binder_ratio(means["q2"], means["q4"])

    groups_arr = np.array(groups)
    unique_groups = np.unique(groups_arr)
    boot_gen = rngmod.bootstrap_stream(config.master_seed)
    boot = {k: np.zeros((n_bootstrap, n_beta)) for k in Observables.SCALARS}
    boot_u = np.zeros((n_bootstrap, n_beta))
    boot_w = (
        np.zeros((n_bootstrap, len(loops), n_beta)) if loops else None
    )
    group_rows = {g: np.nonzero(groups_arr == g)[0] for g in unique_groups}
    for bidx in range(n_bootstrap):
        pick = boot_gen.choice(unique_groups, size=unique_groups.size, replace=True)
        idx = np.concatenate([group_rows[g] for g in pick])
        for k in Observables.SCALARS:
            boot[k][bidx] = stacked[k][idx].mean(axis=0)
        boot_u[bidx] = binder_ratio(boot["q2"][bidx], boot["q4"][bidx])
        if loops:
            boot_w[bidx] = wilson_stack[idx].mean(axis=0)

    observables: dict[str, list[float]] = {}
    for k in Observables.SCALARS:
        observables[k] = means[k].tolist()
        observables[k + "_err"] = boot[k].std(axis=0, ddof=1).tolist()
    observables["u_q"] = u_q.tolist()
    observables["u_q_err"] = boot_u.std(axis=0, ddof=1).tolist()

    wilson = {}
    if loops:
        wilson = {
            "loops": [
                {k: [int(v) for v in lp[k]] for k in sorted(lp)}
                if isinstance(lp, dict)
                else [int(i) for i in lp]
                for lp in loops
            ],
            "mean": wilson_stack.mean(axis=0).tolist(),
            "err": boot_w.std(axis=0, ddof=1).tolist(),
        }

    n_rows_used = len(rows)
    return EnsembleResult(
        betas=config.betas,
        n_requested=config.n_disorder,
        n_used=n_rows_used,
        n_excluded=n_excluded,
        flagged=n_excluded > 0.05 * n_rows_total,
        observables=observables,
        wilson=wilson,
        accept_rate=(accept_sum / max(n_rows_used, 1)).tolist(),
        config={**asdict(config)},
    )
