"""Command-line interface.

Subcommands: ``lattice info``, ``noise sample``, ``model build``,
``oracle verify``, ``run``.  Exit codes: 0 success, 1 verification
failure, 2 usage or configuration error.  The environment variable
``MSCTK_OUTPUT_DIR`` overrides the configured output directory.

Every artifact embeds the tool version, the configuration hash, and the
master seed; run results are cached so an interrupted or repeated ``run``
reproduces identical files without redoing finished work.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .algebra import ground_space_degeneracy, stabilizer_rank
from .config import ConfigError, RunConfig, load_config
from .lattice import LatticeSizeError, build_lattice, cells_for_linear_size
from .mc import run_disorder_ensemble
from .models import (
    DisorderSpec,
    build_bilinear_models,
    build_combined_model,
    build_gauge_model,
    build_qp_model,
    nishimori_beta,
    temporal_tube_loop,
)
from .noise import ErrorRates, sample_chain, sample_history
from .threshold import (
    default_beta_ladder,
    estimate_crossing,
    nishimori_scan,
    phase_boundary,
    scan_to_csv,
)

OUTPUT_DIR_ENV = "MSCTK_OUTPUT_DIR"


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        f.write(text)
    os.replace(tmp, path)


def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=False)
    if out:
        _atomic_write(out, text)
    else:
        print(text)


# ---------------------------------------------------------------- lattice

def _cmd_lattice_info(args) -> int:
    try:
        lat = build_lattice(args.l1, args.l2)
    except LatticeSizeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    info = {
        "N": lat.n_sites,
        "P": lat.n_plaquettes,
        "edges": lat.n_edges,
        "rank": stabilizer_rank(lat),
        "degeneracy": ground_space_degeneracy(lat),
        "plaquettes_per_color": [
            int(np.count_nonzero(lat.colors == c)) for c in range(3)
        ],
        "edges_per_color": [int(lat.edges_of_color(c).size) for c in range(3)],
    }
    _emit(info, args.out)
    return 0


# ------------------------------------------------------------------ noise

def _cmd_noise_sample(args) -> int:
    try:
        lat = build_lattice(args.l1, args.l2)
        rates = ErrorRates(p_qp=args.qp, p_b=args.bilinear, p_m=args.measurement)
        if args.rounds > 1 or args.measurement > 0:
            history = sample_history(lat, rates, args.rounds, args.seed)
            payload = json.loads(history.to_json())
        else:
            chain = sample_chain(lat, rates, args.seed)
            payload = json.loads(chain.to_json())
    except (LatticeSizeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(payload, args.out)
    return 0


# ------------------------------------------------------------------ model

def _cmd_model_build(args) -> int:
    try:
        lat = build_lattice(args.l1, args.l2)
        if args.family == "qp":
            model = build_qp_model(
                lat, DisorderSpec(site_prob=args.qp, seed=args.seed)
            )
            payload = json.loads(model.to_json())
        elif args.family == "bilinear":
            models = build_bilinear_models(
                lat, DisorderSpec(edge_prob=args.bilinear, seed=args.seed)
            )
            payload = [json.loads(m.to_json()) for m in models]
        elif args.family == "combined":
            model = build_combined_model(
                lat,
                DisorderSpec(
                    site_prob=args.qp, edge_prob=args.bilinear, seed=args.seed
                ),
            )
            payload = json.loads(model.to_json())
        else:  # gauge-qp / gauge-bilinear
            kind = args.family.split("-", 1)[1]
            prob_key = "site_prob" if kind == "qp" else "edge_prob"
            rate = args.qp if kind == "qp" else args.bilinear
            model = build_gauge_model(
                kind,
                lat,
                args.rounds,
                DisorderSpec(
                    **{prob_key: rate}, meas_prob=args.measurement, seed=args.seed
                ),
                color=args.color,
            )
            payload = json.loads(model.to_json())
    except (LatticeSizeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(payload, args.out)
    return 0


# ----------------------------------------------------------------- oracle

def _oracle_report(l1: int, l2: int, probs, inject_fault: bool) -> dict:
    """Exact verification suite; small systems only."""
    from . import oracle
    from .algebra import commutes, plaquette_operator, syndrome_of_vector
    from .noise import ErrorChain

    lat = build_lattice(l1, l2)
    checks = []
    first_counterexample = None

    def record(name: str, ok: bool, detail: dict):
        nonlocal first_counterexample
        checks.append({"name": name, "ok": bool(ok), **detail})
        if not ok and first_counterexample is None:
            first_counterexample = {"check": name, **detail}

    ops = [plaquette_operator(lat, p) for p in range(lat.n_plaquettes)]
    bad_pairs = [
        (a, b)
        for a in range(len(ops))
        for b in range(a + 1, len(ops))
        if not commutes(ops[a], ops[b])
    ]
    record("plaquette_operators_commute", not bad_pairs,
           {"failing_pairs": bad_pairs[:3]})

    site_ok = True
    site_bad = None
    for site in range(lat.n_sites):
        vec = np.zeros(lat.n_sites, dtype=np.uint8)
        vec[site] = 1
        syndrome = np.nonzero(syndrome_of_vector(lat, vec))[0]
        if syndrome.size != 3 or sorted(lat.colors[syndrome]) != [0, 1, 2]:
            site_ok, site_bad = False, int(site)
            break
    record("single_site_syndrome_one_per_color", site_ok, {"site": site_bad})

    rank = stabilizer_rank(lat)
    record(
        "degeneracy_is_four",
        ground_space_degeneracy(lat) == 4,
        {"rank": rank, "degeneracy": ground_space_degeneracy(lat)},
    )

    rng = np.random.default_rng(7)
    for p in probs:
        for error_type, colors in (("qp", [0]), ("bilinear", [0, 1, 2])):
            for color in colors:
                if error_type == "qp":
                    err = ErrorChain(
                        qp_sites=(rng.random(lat.n_sites) < 0.25).astype(np.uint8),
                        bilinear_edges=np.zeros(lat.n_edges, dtype=np.uint8),
                    )
                else:
                    flags = np.zeros(lat.n_edges, dtype=np.uint8)
                    es = lat.edges_of_color(color)
                    flags[es[rng.random(es.size) < 0.25]] = 1
                    err = ErrorChain(
                        qp_sites=np.zeros(lat.n_sites, dtype=np.uint8),
                        bilinear_edges=flags,
                    )
                report = oracle.mapping_consistency_check(
                    lat, err, p, error_type=error_type, color=color,
                    _tau_corruption=(0 if inject_fault else None),
                )
                name = f"mapping_{error_type}_color{color}_p{p}"
                record(
                    name,
                    report.ok,
                    {
                        "max_proportionality_dev": report.max_proportionality_dev,
                        "max_class_ratio_dev": report.max_class_ratio_dev,
                        "failing_config": report.failing_config,
                        "n_deformation_classes": report.n_deformation_classes,
                    },
                )
    for error_type in ("qp", "bilinear"):
        p0 = 0.109 if error_type == "qp" else 0.1645
        avg = oracle.exact_nishimori_bond_average(lat, p0, error_type=error_type)
        dev = abs(avg - (1.0 - 2.0 * p0))
        record(
            f"bond_average_identity_{error_type}",
            dev <= 1e-9,
            {"value": avg, "expected": 1.0 - 2.0 * p0, "dev": dev},
        )
    passed = all(c["ok"] for c in checks)
    return {
        "passed": passed,
        "lattice": [l1, l2],
        "tool_version": __version__,
        "checks": checks,
        "first_counterexample": first_counterexample,
    }


def _cmd_oracle_verify(args) -> int:
    try:
        l1, l2 = (int(t) for t in args.size.lower().split("x"))
    except ValueError:
        print(f"error: --size must look like '2x2', got {args.size!r}", file=sys.stderr)
        return 2
    try:
        lat = build_lattice(l1, l2)
    except LatticeSizeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if lat.n_plaquettes > 20:
        print(
            f"error: exact verification enumerates all 2^P spin states and is "
            f"limited to P <= 20 plaquettes; ({l1},{l2}) has P = {lat.n_plaquettes}. "
            f"Use --size 2x2 (the default) or another size within the bound.",
            file=sys.stderr,
        )
        return 2
    probs = [float(t) for t in args.p.split(",")]
    report = _oracle_report(l1, l2, probs, args.inject_fault)
    _emit(report, args.out)
    return 0 if report["passed"] else 1


# -------------------------------------------------------------------- run

def _ensemble_sample_seed(config_hash: str, i: int) -> int:
    h = hashlib.sha256(f"ensemble|{config_hash}|{i}".encode()).digest()
    return int.from_bytes(h[:8], "big") >> 1


def _run_ensemble(cfg: RunConfig, outdir: str, provenance: dict) -> dict:
    """mode=ensemble: one disorder-averaged run at fixed rates and size."""
    data = cfg.data
    l1, l2 = data["lattice"]["cells"]
    lattice = build_lattice(l1, l2)
    rates = data["rates"]
    family = cfg.family
    chash = cfg.config_hash()

    if data["nishimori"]:
        if family == "qp":
            betas, target = default_beta_ladder(nishimori_beta(rates["qp"]))
        elif family == "bilinear":
            betas, target = default_beta_ladder(nishimori_beta(rates["bilinear"]))
        else:  # combined and gauge families bake the matched couplings in
            betas, target = default_beta_ladder(1.0, lo=0.25, hi=1.0)
    else:
        betas, target = tuple(data["betas"]), len(data["betas"]) - 1

    if family == "qp":
        def build(i):
            return build_qp_model(
                lattice,
                DisorderSpec(site_prob=rates["qp"], seed=_ensemble_sample_seed(chash, i)),
            )
    elif family == "bilinear":
        def build(i):
            return build_bilinear_models(
                lattice,
                DisorderSpec(edge_prob=rates["bilinear"], seed=_ensemble_sample_seed(chash, i)),
            )
    elif family == "combined":
        def build(i):
            return build_combined_model(
                lattice,
                DisorderSpec(
                    site_prob=rates["qp"],
                    edge_prob=rates["bilinear"],
                    seed=_ensemble_sample_seed(chash, i),
                ),
            )
    else:
        kind = family.split("-", 1)[1]
        rate = rates["qp"] if kind == "qp" else rates["bilinear"]
        prob_key = "site_prob" if kind == "qp" else "edge_prob"
        if data["nishimori"]:
            site_coupling = nishimori_beta(rate)
            meas_coupling = nishimori_beta(rates["measurement"])
        else:
            site_coupling = meas_coupling = 1.0

        def build(i):
            return build_gauge_model(
                kind,
                lattice,
                data["rounds"],
                DisorderSpec(
                    **{prob_key: rate},
                    meas_prob=rates["measurement"],
                    seed=_ensemble_sample_seed(chash, i),
                ),
                color=data["color"],
                site_coupling=site_coupling,
                meas_coupling=meas_coupling,
            )

    loops = None
    if data["wilson"]["temporal_tubes"]:
        model0 = build(0)
        n_ev_terms = model0.metadata["n_timelike_spins"]
        n_meas = (model0.n_terms - n_ev_terms) // data["rounds"]
        loops = [temporal_tube_loop(model0, pl) for pl in range(n_meas)]

    mccfg = cfg.mc_config(betas=betas)
    cache = os.path.join(outdir, "cache", f"ensemble_{chash}")
    ens = run_disorder_ensemble(
        build, mccfg, wilson_loops=loops,
        n_bootstrap=data["mc"]["n_bootstrap"], cache_dir=cache,
    )

    result = {
        "provenance": provenance,
        "betas": list(betas),
        "target_rung": target,
        "result": json.loads(ens.to_json()),
    }
    if loops:
        w = np.array(ens.wilson["mean"])[:, target]
        we = np.array(ens.wilson["err"])[:, target]
        result["wilson_summary"] = {
            "target_rung_mean": float(w.mean()),
            "target_rung_err": float(np.sqrt((we**2).sum()) / max(we.size, 1)),
            "n_loops": int(w.size),
        }

    import csv as _csv
    import io as _io

    buf = _io.StringIO()
    writer = _csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["family", "beta", "u_q", "u_q_err", "e", "e_err", "q2", "q2_err",
         "bond_site", "bond_edge", "bond_meas", "n_disorder", "excluded"]
    )
    obs = ens.observables
    for k, b in enumerate(betas):
        writer.writerow(
            [family, repr(float(b)), repr(obs["u_q"][k]), repr(obs["u_q_err"][k]),
             repr(obs["e"][k]), repr(obs["e_err"][k]), repr(obs["q2"][k]),
             repr(obs["q2_err"][k]), repr(obs["bond_site"][k]),
             repr(obs["bond_edge"][k]), repr(obs["bond_meas"][k]),
             ens.n_requested, ens.n_excluded]
        )
    csv_text = buf.getvalue()

    from .plots import plot_ensemble

    svg_path = os.path.join(outdir, cfg.prefix + ".svg")
    plot_ensemble(
        betas, {k: obs[k] for k in ("u_q", "u_q_err", "e", "e_err")},
        path=svg_path,
        description=_provenance_line(provenance),
        title=f"{family} ensemble ({l1}x{l2} cells)",
        wilson=ens.wilson or None,
    )
    return {"json": result, "csv": csv_text}


def _provenance_line(provenance: dict) -> str:
    return (
        f"msctk {provenance['tool_version']} "
        f"config {provenance['config_hash']} seed {provenance['master_seed']}"
    )


def _run_scan(cfg: RunConfig, outdir: str, provenance: dict) -> dict:
    data = cfg.data
    family = cfg.family
    other_rate = None
    if family == "combined-site":
        other_rate = data["rates"]["bilinear"]
    elif family == "combined-edge":
        other_rate = data["rates"]["qp"]
    cache = os.path.join(outdir, "cache", f"scan_{cfg.config_hash()}")
    scan = nishimori_scan(
        family,
        data["grid"],
        data["lattice"]["sizes"],
        cfg.mc_config(),
        other_rate=other_rate,
        cache_dir=cache,
    )
    est = estimate_crossing(scan, n_bootstrap=data["mc"]["n_bootstrap"])
    result = {
        "provenance": provenance,
        "scan": json.loads(scan.to_json()),
        "estimate": est.as_dict(),
    }
    from .plots import plot_scan

    svg_path = os.path.join(outdir, cfg.prefix + ".svg")
    plot_scan(scan, est, path=svg_path, description=_provenance_line(provenance))
    return {"json": result, "csv": scan_to_csv(scan)}


def _run_boundary(cfg: RunConfig, outdir: str, provenance: dict) -> dict:
    data = cfg.data
    family = cfg.family
    other_rate = None
    if family == "combined-site":
        other_rate = data["rates"]["bilinear"]
    elif family == "combined-edge":
        other_rate = data["rates"]["qp"]
    cache = os.path.join(outdir, "cache", f"boundary_{cfg.config_hash()}")
    bound = phase_boundary(
        family,
        data["grid"],
        data["betas"],
        data["lattice"]["sizes"],
        cfg.mc_config(),
        other_rate=other_rate,
        cache_dir=cache,
    )
    result = {"provenance": provenance, "boundary": json.loads(bound.to_json())}

    import csv as _csv
    import io as _io

    buf = _io.StringIO()
    writer = _csv.writer(buf, lineterminator="\n")
    writer.writerow(["family", "p", "t_c", "t_c_err", "crossed"])
    for b in bound.points:
        writer.writerow(
            [family, repr(b.p),
             repr(b.t_c) if b.t_c is not None else "",
             repr(b.t_c_err) if b.t_c_err is not None else "",
             int(b.crossed)]
        )
    from .plots import plot_phase_boundary

    svg_path = os.path.join(outdir, cfg.prefix + ".svg")
    plot_phase_boundary(
        bound, path=svg_path, description=_provenance_line(provenance)
    )
    return {"json": result, "csv": buf.getvalue()}


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2

    outdir = os.environ.get(OUTPUT_DIR_ENV) or cfg.data["output"]["directory"]
    os.makedirs(outdir, exist_ok=True)
    provenance = {
        "tool_version": __version__,
        "config_hash": cfg.config_hash(),
        "master_seed": cfg.master_seed,
        "config": cfg.data,
    }

    runner = {"scan": _run_scan, "boundary": _run_boundary, "ensemble": _run_ensemble}
    artifacts = runner[cfg.mode](cfg, outdir, provenance)

    json_path = os.path.join(outdir, cfg.prefix + ".json")
    csv_path = os.path.join(outdir, cfg.prefix + ".csv")
    _atomic_write(json_path, json.dumps(artifacts["json"], indent=2))
    _atomic_write(csv_path, "# " + _provenance_line(provenance) + "\n" + artifacts["csv"])
    print(
        json.dumps(
            {
                "outputs": [
                    json_path,
                    csv_path,
                    os.path.join(outdir, cfg.prefix + ".svg"),
                ],
                "config_hash": cfg.config_hash(),
            }
        )
    )
    return 0


# ------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msctk",
        description="Statistical-mechanics toolkit for Majorana surface codes",
    )
    parser.add_argument("--version", action="version", version=f"msctk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    lat = sub.add_parser("lattice", help="lattice inspection")
    lat_sub = lat.add_subparsers(dest="subcommand", required=True)
    info = lat_sub.add_parser("info", help="print lattice/stabilizer facts as JSON")
    info.add_argument("--l1", type=int, required=True)
    info.add_argument("--l2", type=int, required=True)
    info.add_argument("--out", default=None, help="write JSON here instead of stdout")
    info.set_defaults(func=_cmd_lattice_info)

    noise = sub.add_parser("noise", help="noise sampling")
    noise_sub = noise.add_subparsers(dest="subcommand", required=True)
    ns = noise_sub.add_parser("sample", help="draw an error chain or history")
    ns.add_argument("--l1", type=int, required=True)
    ns.add_argument("--l2", type=int, required=True)
    ns.add_argument("--qp", type=float, default=0.0, help="single-site error rate")
    ns.add_argument("--bilinear", type=float, default=0.0, help="adjacent-pair error rate")
    ns.add_argument("--measurement", type=float, default=0.0, help="measurement fault rate")
    ns.add_argument("--rounds", type=int, default=1)
    ns.add_argument("--seed", type=int, required=True)
    ns.add_argument("--out", default=None)
    ns.set_defaults(func=_cmd_noise_sample)

    model = sub.add_parser("model", help="spin-model construction")
    model_sub = model.add_subparsers(dest="subcommand", required=True)
    mb = model_sub.add_parser("build", help="build a disordered spin model as JSON")
    mb.add_argument(
        "--family", required=True,
        choices=["qp", "bilinear", "combined", "gauge-qp", "gauge-bilinear"],
    )
    mb.add_argument("--l1", type=int, required=True)
    mb.add_argument("--l2", type=int, required=True)
    mb.add_argument("--qp", type=float, default=0.0)
    mb.add_argument("--bilinear", type=float, default=0.0)
    mb.add_argument("--measurement", type=float, default=0.0)
    mb.add_argument("--rounds", type=int, default=1)
    mb.add_argument("--color", type=int, default=0)
    mb.add_argument("--seed", type=int, required=True)
    mb.add_argument("--out", default=None)
    mb.set_defaults(func=_cmd_model_build)

    oracle = sub.add_parser("oracle", help="exact-enumeration verification")
    oracle_sub = oracle.add_subparsers(dest="subcommand", required=True)
    ov = oracle_sub.add_parser("verify", help="run the exact mapping test suite")
    ov.add_argument("--size", default="2x2", help="lattice cells, e.g. 2x2")
    ov.add_argument("--p", default="0.1,0.3,0.5", help="comma-separated error rates")
    ov.add_argument(
        "--inject-fault", action="store_true",
        help="corrupt one quenched sign to demonstrate failure detection",
    )
    ov.add_argument("--out", default=None)
    ov.set_defaults(func=_cmd_oracle_verify)

    run = sub.add_parser("run", help="execute a configured scan/boundary/ensemble")
    run.add_argument("--config", required=True, help="YAML run configuration")
    run.add_argument(
        "--resume", action="store_true",
        help="continue from cached samples/checkpoints (caching is always on; "
        "this flag documents intent and is accepted on first runs too)",
    )
    run.add_argument(
        "--threads", type=int, default=None,
        help="cap worker parallelism (results are independent of the cap)",
    )
    run.set_defaults(func=_cmd_run)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
