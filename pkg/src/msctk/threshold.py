"""Threshold location along the matched disorder-temperature line.

A scan fixes, for each disorder strength p, the inverse temperature to
nishimori_beta(p) (for the combined family the couplings absorb that
factor and the matched point is beta = 1), runs the disorder-averaged
Monte Carlo at several lattice sizes, and reads off the error threshold
from where the Binder ratio U_q becomes size-independent: pairwise
crossings of U_q(p, L) curves, combined with inverse-variance weights.

Every grid point is cached on disk under a key derived from the full
configuration, so repeated scans do no new sampling and reproduce results
bit-for-bit; per-point seeds derive from the same key, making results
independent of scheduling order.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import shutil
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .lattice import build_lattice, cells_for_linear_size
from .mc import EnsembleResult, McConfig, run_disorder_ensemble
from .models import (
    DisorderSpec,
    build_bilinear_models,
    build_combined_model,
    build_qp_model,
    nishimori_beta,
)

FAMILIES = ("qp", "bilinear", "combined-site", "combined-edge")


def default_beta_ladder(
    beta_target: float, n_rungs: int = 12, lo: float = 0.45, hi: float = 1.12
) -> tuple[tuple[float, ...], int]:
    """Ascending ladder bracketing the target, with one rung exactly on it.

    Returns (ladder, index of the target rung). Hot rungs dominate so the
    tempering chain can escape local minima of the disordered models.
    """
    fracs = np.linspace(lo, hi, n_rungs)
    idx = int(np.argmin(np.abs(fracs - 1.0)))
    fracs[idx] = 1.0
    betas = np.sort(np.unique(fracs * beta_target))
    target_index = int(np.nonzero(betas == beta_target)[0][0])
    return tuple(float(b) for b in betas), target_index


def _family_builder(
    family: str, lattice, p: float, other_rate: float | None, disorder_base: int = 0
):
    """Per-sample model factory and the matched beta for a scan point."""
    # The matched beta only exists for p > 0; boundary scans over an explicit
    # beta grid never use it, which makes p = 0 (the pure model) legal there.
    if family == "qp":
        beta = nishimori_beta(p) if p > 0 else None

        def build(i):
            return build_qp_model(
                lattice, DisorderSpec(site_prob=p, seed=_sample_seed(disorder_base, i))
            )

        return build, beta
    if family == "bilinear":
        beta = nishimori_beta(p) if p > 0 else None

        def build(i):
            return build_bilinear_models(
                lattice, DisorderSpec(edge_prob=p, seed=_sample_seed(disorder_base, i))
            )

        return build, beta
    if family in ("combined-site", "combined-edge"):
        if other_rate is None:
            raise ValueError(f"family {family!r} needs other_rate (the fixed rate)")
        site = p if family == "combined-site" else other_rate
        edge = other_rate if family == "combined-site" else p

        def build(i):
            return build_combined_model(
                lattice,
                DisorderSpec(
                    site_prob=site,
                    edge_prob=edge,
                    seed=_sample_seed(disorder_base, i),
                ),
            )

        return build, 1.0
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


def _sample_seed(base: int, i: int) -> int:
    h = hashlib.sha256(f"disorder|{base}|{i}".encode()).digest()
    return int.from_bytes(h[:8], "big") >> 1


def point_key(family: str, p: float, size: int, config: McConfig, other_rate) -> str:
    raw = f"{family}|p={p!r}|L={size}|other={other_rate!r}|{config.digest()}"
    return hashlib.sha256(raw.encode()).hexdigest()[:24]


@dataclass
class ScanPoint:
    """One (p, L) grid point of a scan, measured at the matched rung."""

    family: str
    p: float
    beta: float
    size: int
    u_q: float
    u_q_err: float
    e: float
    e_err: float
    n_disorder: int
    excluded: int
    flagged: bool
    cache_key: str

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ScanResult:
    """U_q(p, L) grid with uncertainties, plus per-point ensemble references."""

    family: str
    sizes: tuple[int, ...]
    p_grid: tuple[float, ...]
    points: list[ScanPoint]
    other_rate: float | None = None
    ensembles: dict = field(default_factory=dict, repr=False)  # cache_key -> EnsembleResult

    def point(self, size: int, p: float) -> ScanPoint:
        for pt in self.points:
            if pt.size == size and pt.p == p:
                return pt
        raise KeyError(f"no scan point at L={size}, p={p}")

    def u_grid(self) -> tuple[np.ndarray, np.ndarray]:
        """(U, U_err) arrays shaped (n_sizes, n_p)."""
        u = np.array(
            [[self.point(L, p).u_q for p in self.p_grid] for L in self.sizes]
        )
        ue = np.array(
            [[self.point(L, p).u_q_err for p in self.p_grid] for L in self.sizes]
        )
        return u, ue

    def to_json(self) -> str:
        return json.dumps(
            {
                "family": self.family,
                "sizes": list(self.sizes),
                "p_grid": list(self.p_grid),
                "other_rate": self.other_rate,
                "points": [pt.as_dict() for pt in self.points],
            }
        )

    @staticmethod
    def from_json(text: str) -> "ScanResult":
        d = json.loads(text)
        return ScanResult(
            family=d["family"],
            sizes=tuple(d["sizes"]),
            p_grid=tuple(d["p_grid"]),
            other_rate=d.get("other_rate"),
            points=[ScanPoint(**pt) for pt in d["points"]],
        )


def _run_point(
    family: str,
    p: float,
    size: int,
    config: McConfig,
    other_rate: float | None,
    cache_dir: str | None,
) -> tuple[ScanPoint, EnsembleResult]:
    key = point_key(family, p, size, config, other_rate)
    cache_path = os.path.join(cache_dir, key + ".json") if cache_dir else None
    if cache_path and os.path.exists(cache_path):
        with open(cache_path) as f:
            ens = EnsembleResult.from_json(f.read())
        target = ens.config["target_rung"]
    else:
        lattice = build_lattice(*cells_for_linear_size(size))
        point_seed = int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big") >> 1
        build, beta_target = _family_builder(
            family, lattice, p, other_rate, disorder_base=point_seed
        )
        ladder, target = default_beta_ladder(beta_target)
        point_config = McConfig(
            betas=ladder,
            sweeps=config.sweeps,
            thermalization=config.thermalization,
            measure_interval=config.measure_interval,
            replicas_per_beta=config.replicas_per_beta,
            n_disorder=config.n_disorder,
            master_seed=point_seed,
            checkpoint_interval=config.checkpoint_interval,
            init=config.init,
        )
        sample_cache = os.path.join(cache_dir, key + "_samples") if cache_dir else None
        ens = run_disorder_ensemble(build, point_config, cache_dir=sample_cache)
        ens.config["target_rung"] = target
        ens.config["scan_master_seed"] = config.master_seed
        if cache_path:
            os.makedirs(cache_dir, exist_ok=True)
            tmp = cache_path + ".tmp"
            with open(tmp, "w") as f:
                f.write(ens.to_json())
            os.replace(tmp, cache_path)
            shutil.rmtree(sample_cache, ignore_errors=True)
    obs = ens.observables
    pt = ScanPoint(
        family=family,
        p=float(p),
        beta=float(ens.betas[target]),
        size=size,
        u_q=obs["u_q"][target],
        u_q_err=obs["u_q_err"][target],
        e=obs["e"][target],
        e_err=obs["e_err"][target],
        n_disorder=ens.n_requested,
        excluded=ens.n_excluded,
        flagged=ens.flagged,
        cache_key=key,
    )
    return pt, ens


def nishimori_scan(
    family: str,
    p_grid,
    sizes,
    config: McConfig,
    other_rate: float | None = None,
    cache_dir: str | None = None,
) -> ScanResult:
    """Disorder-averaged U_q over a (p, L) grid along the matched line."""
    sizes = tuple(int(s) for s in sizes)
    p_grid = tuple(float(p) for p in p_grid)
    if len(sizes) < 2:
        raise ValueError("need at least 2 sizes for a crossing analysis")
    if any(not 0.0 < p < 0.5 for p in p_grid):
        raise ValueError("scan grid must lie inside (0, 0.5)")
    points = []
    ensembles = {}
    for size in sizes:
        for p in p_grid:
            pt, ens = _run_point(family, p, size, config, other_rate, cache_dir)
            points.append(pt)
            ensembles[pt.cache_key] = ens
    return ScanResult(
        family=family,
        sizes=sizes,
        p_grid=p_grid,
        points=points,
        other_rate=other_rate,
        ensembles=ensembles,
    )


@dataclass
class ThresholdEstimate:
    """Crossing-based threshold with uncertainty, or an explicit no-crossing."""

    crossed: bool
    p_c: float | None
    uncertainty: float | None
    pairs: list[dict]
    metadata: dict

    def as_dict(self) -> dict:
        return {
            "crossed": self.crossed,
            "p_c": self.p_c,
            "uncertainty": self.uncertainty,
            "pairs": self.pairs,
            "metadata": self.metadata,
        }


def _interp_crossing(x: np.ndarray, d: np.ndarray) -> float | None:
    """First sign change of d(x), located by linear interpolation."""
    for k in range(d.size - 1):
        if d[k] == 0.0:
            return float(x[k])
        if d[k] * d[k + 1] < 0:
            return float(x[k] - d[k] * (x[k + 1] - x[k]) / (d[k + 1] - d[k]))
    if d[-1] == 0.0:
        return float(x[-1])
    return None


def crossing_of_pair(
    x: np.ndarray,
    u_small: np.ndarray,
    u_large: np.ndarray,
    err_small: np.ndarray | None = None,
    err_large: np.ndarray | None = None,
    n_bootstrap: int = 1000,
    seed: int = 0,
) -> tuple[float | None, float | None]:
    """Crossing of two U(x) curves with a parametric-bootstrap uncertainty."""
    x = np.asarray(x, dtype=float)
    d = np.asarray(u_small, dtype=float) - np.asarray(u_large, dtype=float)
    center = _interp_crossing(x, d)
    if center is None:
        return None, None
    if err_small is None or err_large is None:
        return center, 0.0
    sigma = np.sqrt(np.asarray(err_small) ** 2 + np.asarray(err_large) ** 2)
    if not np.any(sigma > 0):
        return center, 0.0
    gen = rngmod.stream(seed, 17)
    roots = []
    for _ in range(n_bootstrap):
        root = _interp_crossing(x, d + gen.normal(0.0, sigma))
        if root is not None:
            roots.append(root)
    if len(roots) < n_bootstrap // 10:
        return center, None
    return center, float(np.std(roots, ddof=1))


def estimate_crossing(scan: ScanResult, n_bootstrap: int = 1000) -> ThresholdEstimate:
    """Combine pairwise U_q crossings into one threshold estimate.

    Pairs that never cross inside the grid are reported as such; if no
    pair crosses, the result is an explicit no-crossing (never an
    extrapolation).  Pair crossings are combined by inverse-variance
    weights.
    """
    x = np.array(scan.p_grid)
    u, ue = scan.u_grid()
    pairs = []
    estimates = []
    weights = []
    for i in range(len(scan.sizes)):
        for j in range(i + 1, len(scan.sizes)):
            center, sigma = crossing_of_pair(
                x, u[i], u[j], ue[i], ue[j],
                n_bootstrap=n_bootstrap,
                seed=int.from_bytes(
                    hashlib.sha256(
                        f"pair|{scan.sizes[i]}|{scan.sizes[j]}".encode()
                    ).digest()[:6],
                    "big",
                ),
            )
            rec = {
                "sizes": [scan.sizes[i], scan.sizes[j]],
                "crossing": center,
                "sigma": sigma,
            }
            pairs.append(rec)
            if center is not None and sigma is not None:
                estimates.append(center)
                weights.append(1.0 / max(sigma, 1e-12) ** 2)
    metadata = {
        "sizes": list(scan.sizes),
        "p_grid": list(scan.p_grid),
        "n_bootstrap": n_bootstrap,
        "family": scan.family,
    }
    if not estimates:
        return ThresholdEstimate(False, None, None, pairs, metadata)
    w = np.array(weights)
    est = np.array(estimates)
    p_c = float((w * est).sum() / w.sum())
    sigma_combined = float(np.sqrt(1.0 / w.sum()))
    scatter = (
        float(np.sqrt((w * (est - p_c) ** 2).sum() / w.sum())) if est.size > 1 else 0.0
    )
    return ThresholdEstimate(
        True, p_c, max(sigma_combined, scatter), pairs, metadata
    )


@dataclass
class BoundaryPoint:
    p: float
    t_c: float | None
    t_c_err: float | None
    crossed: bool
    pairs: list[dict]


@dataclass
class PhaseBoundary:
    """T_c(p) curve from U_q crossings in temperature at fixed disorder."""

    family: str
    sizes: tuple[int, ...]
    points: list[BoundaryPoint]

    def to_json(self) -> str:
        return json.dumps(
            {
                "family": self.family,
                "sizes": list(self.sizes),
                "points": [
                    {
                        "p": b.p,
                        "t_c": b.t_c,
                        "t_c_err": b.t_c_err,
                        "crossed": b.crossed,
                        "pairs": b.pairs,
                    }
                    for b in self.points
                ],
            }
        )


def phase_boundary(
    family: str,
    p_list,
    beta_grid,
    sizes,
    config: McConfig,
    other_rate: float | None = None,
    cache_dir: str | None = None,
) -> PhaseBoundary:
    """Estimate T_c(p) per disorder strength from U_q(beta) size crossings.

    The whole beta grid doubles as the tempering ladder, so every rung is
    measured; crossings are located in beta and reported as T = 1/beta.
    """
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) < 2:
        raise ValueError("need at least 2 sizes")
    betas = tuple(float(b) for b in beta_grid)
    out_points = []
    for p in p_list:
        per_size = {}
        for size in sizes:
            key = hashlib.sha256(
                f"boundary|{family}|{p!r}|{size}|{betas!r}|other={other_rate!r}|{config.digest()}".encode()
            ).hexdigest()[:24]
            cache_path = os.path.join(cache_dir, key + ".json") if cache_dir else None
            if cache_path and os.path.exists(cache_path):
                with open(cache_path) as f:
                    ens = EnsembleResult.from_json(f.read())
            else:
                lattice = build_lattice(*cells_for_linear_size(size))
                point_seed = (
                    int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big")
                    >> 1
                )
                build, _ = _family_builder(
                    family, lattice, p, other_rate, disorder_base=point_seed
                )
                point_config = McConfig(
                    betas=betas,
                    sweeps=config.sweeps,
                    thermalization=config.thermalization,
                    measure_interval=config.measure_interval,
                    replicas_per_beta=config.replicas_per_beta,
                    n_disorder=config.n_disorder,
                    master_seed=point_seed,
                    checkpoint_interval=config.checkpoint_interval,
                    init=config.init,
                )
                sample_cache = (
                    os.path.join(cache_dir, key + "_samples") if cache_dir else None
                )
                ens = run_disorder_ensemble(build, point_config, cache_dir=sample_cache)
                if cache_path:
                    os.makedirs(cache_dir, exist_ok=True)
                    tmp = cache_path + ".tmp"
                    with open(tmp, "w") as f:
                        f.write(ens.to_json())
                    os.replace(tmp, cache_path)
                    shutil.rmtree(sample_cache, ignore_errors=True)
            per_size[size] = ens
        pairs = []
        estimates = []
        weights = []
        barr = np.array(betas)
        for i in range(len(sizes)):
            for j in range(i + 1, len(sizes)):
                ei = per_size[sizes[i]]
                ej = per_size[sizes[j]]
                center, sigma = crossing_of_pair(
                    barr,
                    np.array(ei.observables["u_q"]),
                    np.array(ej.observables["u_q"]),
                    np.array(ei.observables["u_q_err"]),
                    np.array(ej.observables["u_q_err"]),
                    seed=int.from_bytes(
                        hashlib.sha256(
                            f"bpair|{p!r}|{sizes[i]}|{sizes[j]}".encode()
                        ).digest()[:6],
                        "big",
                    ),
                )
                pairs.append(
                    {"sizes": [sizes[i], sizes[j]], "beta_c": center, "sigma": sigma}
                )
                if center is not None and sigma is not None:
                    estimates.append(center)
                    weights.append(1.0 / max(sigma, 1e-12) ** 2)
        if estimates:
            w = np.array(weights)
            est = np.array(estimates)
            beta_c = float((w * est).sum() / w.sum())
            sig_b = float(np.sqrt(1.0 / w.sum()))
            scatter = (
                float(np.sqrt((w * (est - beta_c) ** 2).sum() / w.sum()))
                if est.size > 1
                else 0.0
            )
            sig_b = max(sig_b, scatter)
            out_points.append(
                BoundaryPoint(
                    p=float(p),
                    t_c=1.0 / beta_c,
                    t_c_err=sig_b / beta_c**2,
                    crossed=True,
                    pairs=pairs,
                )
            )
        else:
            out_points.append(
                BoundaryPoint(p=float(p), t_c=None, t_c_err=None, crossed=False, pairs=pairs)
            )
    return PhaseBoundary(family=family, sizes=sizes, points=out_points)


def scan_to_csv(scan: ScanResult) -> str:
    """CSV grid: one row per (p, L) at the matched rung."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["family", "p", "beta", "L", "U_q", "U_q_err", "E", "E_err", "n_disorder", "excluded"]
    )
    for pt in scan.points:
        writer.writerow(
            [
                pt.family,
                repr(pt.p),
                repr(pt.beta),
                pt.size,
                repr(pt.u_q),
                repr(pt.u_q_err),
                repr(pt.e),
                repr(pt.e_err),
                pt.n_disorder,
                pt.excluded,
            ]
        )
    return buf.getvalue()
