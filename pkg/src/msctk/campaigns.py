"""Frozen definitions of the repository's long-running measurement campaigns.

Every knob that enters an on-disk cache key is fixed here as a module
constant: disorder grids, lattice sizes, Monte Carlo schedules, seeds.
That makes the campaigns a single source of truth shared by the command
line driver and by the test suite — whoever asks for a campaign against
an already-populated cache gets a fast, bit-identical read; against an
empty cache the same call recomputes everything from scratch.

Run all campaigns (or a subset) from the command line:

    python3 -m msctk.campaigns --cache tests/data/campaigns
    python3 -m msctk.campaigns --cache tests/data/campaigns --only tubes

Wall-clock runtimes are recorded per campaign in ``runtime.json`` under
the cache root, so downstream consumers can check compute budgets
without re-running anything.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import time

import numpy as np

from .lattice import build_lattice
from .mc import EnsembleResult, McConfig, run_disorder_ensemble
from .models import DisorderSpec, build_gauge_model, nishimori_beta, temporal_tube_loop
from .threshold import (
    PhaseBoundary,
    ScanResult,
    default_beta_ladder,
    estimate_crossing,
    nishimori_scan,
    phase_boundary,
)

# ----------------------------------------------------------- threshold scans

#: Lattice sizes (plaquettes per row) used by every size-crossing analysis.
SCAN_SIZES = (6, 9, 12)

#: Site-fault rates bracketing the plaquette-spin threshold.
QP_GRID = (0.085, 0.097, 0.109, 0.121, 0.133)

#: Edge-fault rates bracketing the per-color bilinear threshold.
BILINEAR_GRID = (0.1405, 0.1525, 0.1645, 0.1765, 0.1885)

#: Fixed rate of the *other* channel in the combined-model scans. At one
#: half, the fixed channel's matched coupling vanishes, so each combined
#: scan must reproduce the corresponding single-channel threshold.
COMBINED_OTHER_RATE = 0.5

THRESHOLD_MC = McConfig(
    betas=(1.0,),
    sweeps=4096,
    thermalization=2048,
    measure_interval=8,
    n_disorder=640,
    master_seed=20260801,
)

COMBINED_MC = McConfig(
    betas=(1.0,),
    sweeps=4096,
    thermalization=2048,
    measure_interval=8,
    n_disorder=384,
    master_seed=20260802,
)


def threshold_scan(family: str, cache_root: str) -> ScanResult:
    """Matched-temperature scan for one model family, served from cache."""
    if family == "qp":
        return nishimori_scan(
            "qp", QP_GRID, SCAN_SIZES, THRESHOLD_MC,
            cache_dir=os.path.join(cache_root, "scan_qp"),
        )
    if family == "bilinear":
        return nishimori_scan(
            "bilinear", BILINEAR_GRID, SCAN_SIZES, THRESHOLD_MC,
            cache_dir=os.path.join(cache_root, "scan_bilinear"),
        )
    if family == "combined-site":
        return nishimori_scan(
            "combined-site", QP_GRID, SCAN_SIZES, COMBINED_MC,
            other_rate=COMBINED_OTHER_RATE,
            cache_dir=os.path.join(cache_root, "scan_combined_site"),
        )
    if family == "combined-edge":
        return nishimori_scan(
            "combined-edge", BILINEAR_GRID, SCAN_SIZES, COMBINED_MC,
            other_rate=COMBINED_OTHER_RATE,
            cache_dir=os.path.join(cache_root, "scan_combined_edge"),
        )
    raise ValueError(f"unknown scan family {family!r}")


# -------------------------------------------------------- pure-model anchors

#: Inverse-temperature grids bracketing the two clean critical points
#: (three-spin model near 0.4407, per-color pair model near 0.2747).
#: The triplet grid starts close below the transition on purpose: deep in
#: the high-temperature phase the overlap Binder ratio of this model is
#: negative and noisy, and curves from different sizes can brush there,
#: which would feed spurious crossings into the size analysis.
TRIPLET_BETA_GRID = (
    0.430, 0.435, 0.440, 0.445, 0.450, 0.455, 0.460, 0.465, 0.470,
)
PAIR_BETA_GRID = (
    0.240, 0.247, 0.254, 0.261, 0.268, 0.275, 0.282, 0.289, 0.296, 0.303, 0.310,
)

ANCHOR_MC = McConfig(
    betas=(1.0,),
    sweeps=8192,
    thermalization=2048,
    measure_interval=8,
    n_disorder=64,
    master_seed=20260803,
)

#: Fixed size exponent of the leading crossing drift removed by
#: anchor_estimate. Pairwise Binder crossings at sizes ell and ell' sit at
#: beta_c + c / ell_gm**2 (ell_gm the geometric mean): both clean
#: universality classes here have an effectively quadratic leading
#: correction, and the measured drift sequence at sizes {6, 9, 12}
#: follows it (deviation times ell_gm**2 is constant to ~10%).
ANCHOR_DRIFT_EXPONENT = 2.0


def pure_anchor_boundary(family: str, cache_root: str) -> PhaseBoundary:
    """Clean-model critical temperature from Binder-ratio size crossings.

    Runs the disorder-free limit (all couplings unfrustrated) of the given
    family over an explicit temperature ladder; independent replicas of the
    same pure model supply the statistical errors.
    """
    grid = TRIPLET_BETA_GRID if family == "qp" else PAIR_BETA_GRID
    return phase_boundary(
        family, [0.0], grid, SCAN_SIZES, ANCHOR_MC,
        cache_dir=os.path.join(cache_root, "anchors"),
    )


def anchor_estimate(boundary: PhaseBoundary) -> tuple[float, float, dict]:
    """Clean critical temperature with the leading crossing drift removed.

    At the small sizes used here the pairwise crossings have not converged:
    they sit a measurable c / ell**2 above the true coupling (drift toward
    the target, monotone in size, several sigma in magnitude). A two-
    parameter weighted fit beta_cross(pair) = beta_c + c * ell_gm**(-w)
    with the exponent w frozen (ANCHOR_DRIFT_EXPONENT, never fitted)
    removes that drift; only the amplitude c is estimated from the data.

    Returns (t_c, t_c_err, details) where details records the per-pair
    crossings and the fit residuals.
    """
    pt = boundary.points[0]
    xs, ys, sigmas, pairs = [], [], [], []
    for pr in pt.pairs:
        if pr["beta_c"] is None or pr["sigma"] is None:
            continue
        li, lj = pr["sizes"]
        xs.append((li * lj) ** (-ANCHOR_DRIFT_EXPONENT / 2.0))
        ys.append(pr["beta_c"])
        sigmas.append(max(pr["sigma"], 1e-9))
        pairs.append(pr)
    if len(xs) < 2:
        raise ValueError("anchor fit needs at least two size-pair crossings")
    x = np.array(xs)
    y = np.array(ys)
    w = 1.0 / np.array(sigmas) ** 2
    design = np.column_stack([np.ones_like(x), x])
    cov = np.linalg.inv(design.T @ (design * w[:, None]))
    beta_c, amp = cov @ (design.T @ (w * y))
    resid = y - (beta_c + amp * x)
    dof = max(len(xs) - 2, 1)
    chi2 = float((w * resid**2).sum())
    scale = max(1.0, np.sqrt(chi2 / dof))
    beta_err = float(np.sqrt(cov[0, 0])) * scale
    details = {
        "beta_c": float(beta_c),
        "beta_c_err": beta_err,
        "drift_amplitude": float(amp),
        "chi2": chi2,
        "pairs": pairs,
    }
    return 1.0 / float(beta_c), beta_err / float(beta_c) ** 2, details


# ------------------------------------------------------ temporal-tube probes

TUBE_CELLS = ((4, 4), (6, 6))
TUBE_ROUNDS = 8
#: (site rate, measurement rate) pairs probed deep in each phase.
TUBE_RATES = ((0.01, 0.01), (0.4, 0.4))
TUBE_BETAS, TUBE_TARGET_RUNG = default_beta_ladder(1.0, lo=0.25, hi=1.0)

TUBE_MC = McConfig(
    betas=TUBE_BETAS,
    sweeps=2048,
    thermalization=512,
    measure_interval=8,
    n_disorder=32,
    master_seed=20260804,
    init="plus",
)


def _tube_sample_seed(tag: str, i: int) -> int:
    h = hashlib.sha256(f"tubes|{tag}|{i}".encode()).digest()
    return int.from_bytes(h[:8], "big") >> 1


def tube_ensemble(
    cells: tuple[int, int], rates: tuple[float, float], cache_root: str
) -> EnsembleResult:
    """Gauge-model ensemble measuring every temporal tube at matched couplings.

    The sampling temperature ladder tops out at the rung where the baked-in
    couplings are the matched ones (``TUBE_TARGET_RUNG``); tube expectations
    at that rung separate the ordered (low-rate) phase, where they stay near
    one, from the disordered (high-rate) phase, where they vanish.
    """
    l1, l2 = cells
    p, m = rates
    path = os.path.join(
        cache_root, "tubes", f"tubes_qp_T{TUBE_ROUNDS}_{l1}x{l2}_p{p!r}_m{m!r}.json"
    )
    if os.path.exists(path):
        with open(path) as f:
            return EnsembleResult.from_json(f.read())

    lattice = build_lattice(l1, l2)
    site_coupling = nishimori_beta(p)
    meas_coupling = nishimori_beta(m)
    tag = f"qp|{TUBE_ROUNDS}|{l1}x{l2}|{p!r}|{m!r}|{TUBE_MC.digest()}"

    def build(i):
        return build_gauge_model(
            "qp",
            lattice,
            TUBE_ROUNDS,
            DisorderSpec(site_prob=p, meas_prob=m, seed=_tube_sample_seed(tag, i)),
            site_coupling=site_coupling,
            meas_coupling=meas_coupling,
        )

    model0 = build(0)
    n_meas = (model0.n_terms - model0.metadata["n_timelike_spins"]) // TUBE_ROUNDS
    loops = [temporal_tube_loop(model0, pl) for pl in range(n_meas)]
    ens = run_disorder_ensemble(build, TUBE_MC, wilson_loops=loops)

    os.makedirs(os.path.dirname(path), exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        f.write(ens.to_json())
    os.replace(tmp, path)
    return ens


def tube_summary(ens: EnsembleResult) -> tuple[float, float]:
    """Mean over tubes at the matched rung, with a correlation-safe error.

    Tubes on one lattice share disorder, so their estimates are positively
    correlated; the mean of the per-tube errors bounds the error of their
    average from above, which is the conservative figure reported here.
    """
    w = np.array(ens.wilson["mean"])[:, TUBE_TARGET_RUNG]
    we = np.array(ens.wilson["err"])[:, TUBE_TARGET_RUNG]
    return float(w.mean()), float(we.mean())


# ------------------------------------------------------------------- driver

def _run_scan_campaign(family: str, cache_root: str) -> dict:
    scan = threshold_scan(family, cache_root)
    est = estimate_crossing(scan)
    return {
        "crossed": est.crossed,
        "p_c": est.p_c,
        "uncertainty": est.uncertainty,
        "excluded": {
            f"p={pt.p} L={pt.size}": pt.excluded for pt in scan.points if pt.excluded
        },
    }


def _run_anchor_campaign(cache_root: str) -> dict:
    out = {}
    for family, target in (("qp", 0.44068679350977147), ("bilinear", 0.27465307216702745)):
        bnd = pure_anchor_boundary(family, cache_root)
        pt = bnd.points[0]
        t_c, t_c_err, details = anchor_estimate(bnd)
        out[family] = {
            "t_c": t_c,
            "t_c_err": t_c_err,
            "raw_crossing_t_c": pt.t_c,
            "target_t_c": 1.0 / target,
            "rel_dev": abs(t_c - 1.0 / target) * target,
            "drift_amplitude": details["drift_amplitude"],
        }
    return out


def _run_tube_campaign(cache_root: str) -> dict:
    out = {}
    for cells in TUBE_CELLS:
        for rates in TUBE_RATES:
            ens = tube_ensemble(cells, rates, cache_root)
            mean, err = tube_summary(ens)
            out[f"{cells[0]}x{cells[1]} rates={rates}"] = {
                "tube_mean": mean,
                "tube_err": err,
                "excluded": ens.n_excluded,
            }
    return out


CAMPAIGNS = {
    "anchors": _run_anchor_campaign,
    "qp": lambda root: _run_scan_campaign("qp", root),
    "bilinear": lambda root: _run_scan_campaign("bilinear", root),
    "combined-site": lambda root: _run_scan_campaign("combined-site", root),
    "combined-edge": lambda root: _run_scan_campaign("combined-edge", root),
    "tubes": _run_tube_campaign,
}


def record_runtime(cache_root: str, name: str, seconds: float, summary: dict) -> None:
    """Merge one campaign's wall time and headline numbers into runtime.json."""
    path = os.path.join(cache_root, "runtime.json")
    data = {}
    if os.path.exists(path):
        with open(path) as f:
            data = json.load(f)
    data[name] = {"seconds": seconds, "summary": summary}
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        json.dump(data, f, indent=1, sort_keys=True)
        f.write("\n")
    os.replace(tmp, path)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="python3 -m msctk.campaigns",
        description="run the frozen measurement campaigns against a cache directory",
    )
    parser.add_argument("--cache", required=True, help="cache root directory")
    parser.add_argument(
        "--only",
        action="append",
        choices=sorted(CAMPAIGNS),
        help="run just these campaigns (repeatable; default: all)",
    )
    args = parser.parse_args(argv)
    os.makedirs(args.cache, exist_ok=True)
    names = args.only or list(CAMPAIGNS)
    for name in names:
        t0 = time.time()
        summary = CAMPAIGNS[name](args.cache)
        dt = time.time() - t0
        record_runtime(args.cache, name, dt, summary)
        print(f"{name}: {dt:.1f}s {json.dumps(summary, sort_keys=True)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
