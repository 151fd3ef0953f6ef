"""End-to-end CLI tests: exit codes, JSON contracts, artifacts, reproducibility."""

import json
import os

import pytest

from msctk import __version__
from msctk.cli import main

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ------------------------------------------------------------------ lattice


def test_lattice_info_values(capsys):
    code, out, err = run_cli(["lattice", "info", "--l1", "2", "--l2", "2"], capsys)
    assert code == 0
    info = json.loads(out)
    assert info == {
        "N": 24,
        "P": 12,
        "edges": 36,
        "rank": 10,
        "degeneracy": 4,
        "plaquettes_per_color": [4, 4, 4],
        "edges_per_color": [12, 12, 12],
    }


def test_lattice_info_bytes_are_stable(capsys):
    _, first, _ = run_cli(["lattice", "info", "--l1", "3", "--l2", "3"], capsys)
    _, second, _ = run_cli(["lattice", "info", "--l1", "3", "--l2", "3"], capsys)
    assert first == second


def test_lattice_info_rejects_small_torus(capsys):
    code, out, err = run_cli(["lattice", "info", "--l1", "1", "--l2", "2"], capsys)
    assert code == 2
    assert "minimum" in err
    assert out == ""


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


# -------------------------------------------------------------------- noise


def test_noise_sample_single_round(capsys):
    code, out, _ = run_cli(
        ["noise", "sample", "--l1", "2", "--l2", "2", "--qp", "0.3", "--seed", "5"],
        capsys,
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["n_sites"] == 24
    assert "chains" not in payload
    # deterministic across calls
    _, again, _ = run_cli(
        ["noise", "sample", "--l1", "2", "--l2", "2", "--qp", "0.3", "--seed", "5"],
        capsys,
    )
    assert again == out


def test_noise_sample_history_when_rounds_or_measurement(capsys):
    code, out, _ = run_cli(
        ["noise", "sample", "--l1", "2", "--l2", "2", "--qp", "0.2",
         "--measurement", "0.1", "--rounds", "3", "--seed", "1"],
        capsys,
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["rounds"] == 3
    assert len(payload["chains"]) == 3


def test_noise_sample_bad_rate(capsys):
    code, _, err = run_cli(
        ["noise", "sample", "--l1", "2", "--l2", "2", "--qp", "1.5", "--seed", "1"],
        capsys,
    )
    assert code == 2
    assert "must lie in" in err


# -------------------------------------------------------------------- model


def test_model_build_families(capsys):
    code, out, _ = run_cli(
        ["model", "build", "--family", "qp", "--l1", "2", "--l2", "2",
         "--qp", "0.109", "--seed", "3"],
        capsys,
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["kind"] == "qp"
    assert payload["num_spins"] == 12
    assert len(payload["terms"]) == 24

    code, out, _ = run_cli(
        ["model", "build", "--family", "bilinear", "--l1", "2", "--l2", "2",
         "--bilinear", "0.1", "--seed", "3"],
        capsys,
    )
    payload = json.loads(out)
    assert isinstance(payload, list) and len(payload) == 3
    assert [m["metadata"]["color"] for m in payload] == [0, 1, 2]

    code, out, _ = run_cli(
        ["model", "build", "--family", "gauge-qp", "--l1", "2", "--l2", "2",
         "--qp", "0.05", "--measurement", "0.05", "--rounds", "4", "--seed", "3"],
        capsys,
    )
    payload = json.loads(out)
    assert payload["kind"] == "gauge-qp"
    assert payload["num_spins"] == 144
    assert len(payload["terms"]) == 144


def test_model_build_rejects_bad_combined(capsys):
    code, _, err = run_cli(
        ["model", "build", "--family", "combined", "--l1", "2", "--l2", "2",
         "--qp", "0.0", "--bilinear", "0.2", "--seed", "3"],
        capsys,
    )
    assert code == 2
    assert "probabilities" in err


def test_model_build_unknown_family_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["model", "build", "--family", "nope", "--l1", "2", "--l2", "2",
              "--seed", "1"])
    assert exc.value.code == 2


# ------------------------------------------------------------------- oracle


def test_oracle_verify_passes(capsys):
    code, out, _ = run_cli(["oracle", "verify", "--p", "0.3"], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["passed"] is True
    assert report["first_counterexample"] is None
    names = [c["name"] for c in report["checks"]]
    assert "plaquette_operators_commute" in names
    assert "degeneracy_is_four" in names
    assert "mapping_qp_color0_p0.3" in names
    assert "mapping_bilinear_color2_p0.3" in names
    assert "bond_average_identity_qp" in names
    assert all(c["ok"] for c in report["checks"])


def test_oracle_verify_fault_injection_fails(capsys):
    code, out, _ = run_cli(
        ["oracle", "verify", "--p", "0.3", "--inject-fault"], capsys
    )
    assert code == 1
    report = json.loads(out)
    assert report["passed"] is False
    ce = report["first_counterexample"]
    assert ce is not None
    assert ce["check"].startswith("mapping_")
    assert ce["failing_config"] is not None


def test_oracle_verify_refuses_oversized_lattice(capsys):
    code, _, err = run_cli(["oracle", "verify", "--size", "3x3"], capsys)
    assert code == 2
    assert "P <= 20" in err
    code, _, err = run_cli(["oracle", "verify", "--size", "huge"], capsys)
    assert code == 2
    assert "2x2" in err


# ---------------------------------------------------------------------- run


SCAN_YAML = """
mode: scan
family: qp
lattice:
  sizes: [6, 9]
grid: [0.08, 0.14]
mc:
  sweeps: 24
  thermalization: 8
  measure_interval: 4
  n_disorder: 2
  master_seed: 2
  n_bootstrap: 100
output:
  directory: should-be-overridden
"""


def _read(path):
    with open(path, "rb") as f:
        return f.read()


def test_run_scan_writes_artifacts_and_caches(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "scan.yaml"
    cfg.write_text(SCAN_YAML)
    outdir = tmp_path / "results"
    monkeypatch.setenv("MSCTK_OUTPUT_DIR", str(outdir))

    code, out, _ = run_cli(["run", "--config", str(cfg)], capsys)
    assert code == 0
    printed = json.loads(out)
    paths = printed["outputs"]
    assert [os.path.basename(p) for p in paths] == [
        "qp_scan.json", "qp_scan.csv", "qp_scan.svg",
    ]
    for p in paths:
        assert os.path.exists(p)
        assert str(outdir) in p  # env var took precedence over the config

    doc = json.loads(_read(paths[0]))
    prov = doc["provenance"]
    assert prov["tool_version"] == __version__
    assert prov["config_hash"] == printed["config_hash"]
    assert prov["master_seed"] == 2
    assert prov["config"]["grid"] == [0.08, 0.14]
    assert "estimate" in doc and "crossed" in doc["estimate"]

    csv_text = _read(paths[1]).decode()
    first_line = csv_text.split("\n", 1)[0]
    assert first_line == f"# msctk {__version__} config {prov['config_hash']} seed 2"
    assert "family,p,beta,L,U_q" in csv_text

    svg = _read(paths[2])
    assert svg.startswith(b"<?xml")

    # a repeated run reuses the cache and reproduces every byte
    before = [_read(p) for p in paths]
    code, out2, _ = run_cli(["run", "--config", str(cfg), "--resume"], capsys)
    assert code == 0
    after = [_read(p) for p in paths]
    assert before == after


ENSEMBLE_TUBES_YAML = """
mode: ensemble
family: gauge-qp
lattice:
  cells: [2, 2]
rates:
  qp: 0.02
  measurement: 0.02
rounds: 2
betas: [0.6, 1.0]
nishimori: false
wilson:
  temporal_tubes: true
mc:
  sweeps: 32
  thermalization: 8
  measure_interval: 4
  n_disorder: 2
  master_seed: 4
  n_bootstrap: 100
  init: plus
"""


def test_run_ensemble_with_temporal_tubes(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "ens.yaml"
    cfg.write_text(ENSEMBLE_TUBES_YAML)
    monkeypatch.setenv("MSCTK_OUTPUT_DIR", str(tmp_path / "out"))
    code, out, _ = run_cli(["run", "--config", str(cfg)], capsys)
    assert code == 0
    doc = json.loads(_read(json.loads(out)["outputs"][0]))
    ws = doc["wilson_summary"]
    assert ws["n_loops"] == 12  # one tube per plaquette
    assert -1.0 <= ws["target_rung_mean"] <= 1.0
    assert doc["target_rung"] == 1
    csv_text = _read(json.loads(out)["outputs"][1]).decode()
    assert "bond_meas" in csv_text.split("\n")[1]


def test_run_ensemble_svg_matches_golden(tmp_path, monkeypatch, capsys):
    golden_cfg = os.path.join(DATA_DIR, "golden_ensemble.yaml")
    golden_svg = os.path.join(DATA_DIR, "golden_ensemble.svg")
    monkeypatch.setenv("MSCTK_OUTPUT_DIR", str(tmp_path / "out"))
    code, out, _ = run_cli(["run", "--config", golden_cfg], capsys)
    assert code == 0
    produced = _read(json.loads(out)["outputs"][2])
    assert produced == _read(golden_svg)


def test_run_usage_errors(tmp_path, capsys):
    code, _, err = run_cli(["run", "--config", str(tmp_path / "absent.yaml")], capsys)
    assert code == 2
    assert "not found" in err

    bad = tmp_path / "bad.yaml"
    bad.write_text("mode: scan\nfamily: qp\nmysterious: 1\n")
    code, _, err = run_cli(["run", "--config", str(bad)], capsys)
    assert code == 2
    assert "unknown config key" in err

    cfg = tmp_path / "scan.yaml"
    cfg.write_text(SCAN_YAML)
    code, _, err = run_cli(
        ["run", "--config", str(cfg), "--threads", "0"], capsys
    )
    assert code == 2
    assert "--threads" in err
