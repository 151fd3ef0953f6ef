"""Tests for YAML run configuration: schema, defaults, validation, hashing."""

import textwrap

import pytest

from msctk.config import ConfigError, load_config, parse_config

BASE_SCAN = """
mode: scan
family: qp
lattice:
  sizes: [6, 9]
grid: [0.09, 0.109, 0.13]
mc:
  sweeps: 64
  thermalization: 16
  n_disorder: 4
  master_seed: 3
"""

BASE_ENSEMBLE = """
mode: ensemble
family: qp
lattice:
  cells: [2, 2]
rates:
  qp: 0.109
nishimori: true
mc:
  sweeps: 64
  thermalization: 16
  n_disorder: 2
  master_seed: 1
"""


def test_parse_fills_defaults():
    cfg = parse_config(BASE_SCAN)
    assert cfg.mode == "scan"
    assert cfg.family == "qp"
    assert cfg["mc"]["measure_interval"] == 8
    assert cfg["mc"]["n_bootstrap"] == 1000
    assert cfg["rates"] == {"qp": 0.0, "bilinear": 0.0, "measurement": 0.0}
    assert cfg["output"]["directory"] == "out"
    assert cfg.prefix == "qp_scan"
    assert cfg.master_seed == 3


def test_unknown_key_reports_dotted_path_and_known_keys():
    bad = BASE_SCAN + "\nmc_extra: 1\n"
    with pytest.raises(ConfigError, match="unknown config key 'mc_extra'"):
        parse_config(bad)
    bad_nested = BASE_SCAN.replace("master_seed: 3", "master_seed: 3\n  sweepz: 9")
    with pytest.raises(ConfigError, match=r"unknown config key 'mc.sweepz'") as exc:
        parse_config(bad_nested)
    assert "known keys:" in str(exc.value)
    assert "sweeps" in str(exc.value)


def test_type_errors_include_expected_type():
    bad = BASE_SCAN.replace("sweeps: 64", "sweeps: sixty")
    with pytest.raises(ConfigError, match="must be int, got str"):
        parse_config(bad)
    bad_bool = BASE_SCAN.replace("sweeps: 64", "sweeps: true")
    with pytest.raises(ConfigError, match="must be int, got bool"):
        parse_config(bad_bool)


def test_yaml_error_carries_line_number():
    text = "mode: scan\nfamily: [unclosed\n"
    with pytest.raises(ConfigError, match=r"line \d+"):
        parse_config(text)


def test_non_mapping_rejected():
    with pytest.raises(ConfigError, match="mapping"):
        parse_config("- a\n- b\n")


@pytest.mark.parametrize(
    "mutation,message",
    [
        (("mode: scan", "mode: dance"), "mode must be one of"),
        (("family: qp", "family: unknown"), "supports families"),
        (("sizes: [6, 9]", "sizes: [6]"), "at least 2 lattice sizes"),
        (("sizes: [6, 9]", "sizes: [6, 7]"), "multiples of 3"),
        (("grid: [0.09, 0.109, 0.13]", "grid: [0.7, 0.8]"), r"inside \(0, 0.5\)"),
        (("grid: [0.09, 0.109, 0.13]", "grid: [0.109]"), "at least 2 rates"),
        (("thermalization: 16", "thermalization: 64"), "thermalization"),
        (("n_disorder: 4", "n_disorder: 0"), "n_disorder"),
    ],
)
def test_scan_validation_messages(mutation, message):
    old, new = mutation
    with pytest.raises(ConfigError, match=message):
        parse_config(BASE_SCAN.replace(old, new))


def test_combined_scan_families_need_fixed_rate():
    cfg = BASE_SCAN.replace("family: qp", "family: combined-site")
    with pytest.raises(ConfigError, match="rates.bilinear"):
        parse_config(cfg)
    ok = cfg + "\nrates:\n  bilinear: 0.5\n"
    parsed = parse_config(ok)
    assert parsed["rates"]["bilinear"] == 0.5

    edge = BASE_SCAN.replace("family: qp", "family: combined-edge")
    with pytest.raises(ConfigError, match="rates.qp"):
        parse_config(edge)


def test_boundary_needs_beta_grid():
    cfg = BASE_SCAN.replace("mode: scan", "mode: boundary")
    with pytest.raises(ConfigError, match="'betas' grid"):
        parse_config(cfg)
    parse_config(cfg + "\nbetas: [0.2, 0.25, 0.3]\n")


def test_ensemble_validation():
    parse_config(BASE_ENSEMBLE)
    with pytest.raises(ConfigError, match="exactly one of"):
        parse_config(BASE_ENSEMBLE.replace("nishimori: true", "nishimori: false"))
    with pytest.raises(ConfigError, match="exactly one of"):
        parse_config(BASE_ENSEMBLE + "\nbetas: [0.5, 1.0]\n")
    with pytest.raises(ConfigError, match="ascending"):
        parse_config(
            BASE_ENSEMBLE.replace("nishimori: true", "betas: [1.0, 0.5]")
        )
    with pytest.raises(ConfigError, match="cells"):
        parse_config(BASE_ENSEMBLE.replace("cells: [2, 2]", "cells: [2]"))
    with pytest.raises(ConfigError, match="cells"):
        parse_config(BASE_ENSEMBLE.replace("cells: [2, 2]", "cells: [1, 2]"))
    with pytest.raises(ConfigError, match="temporal_tubes requires"):
        parse_config(BASE_ENSEMBLE + "\nwilson:\n  temporal_tubes: true\n")
    with pytest.raises(ConfigError, match="rounds"):
        parse_config(BASE_ENSEMBLE + "\nrounds: 0\n")
    with pytest.raises(ConfigError, match="color"):
        parse_config(BASE_ENSEMBLE + "\ncolor: 3\n")


def test_ensemble_combined_needs_both_rates():
    cfg = BASE_ENSEMBLE.replace("family: qp", "family: combined")
    with pytest.raises(ConfigError, match="nonzero rates"):
        parse_config(cfg)
    ok = cfg.replace("rates:\n  qp: 0.109", "rates:\n  qp: 0.109\n  bilinear: 0.1645")
    parse_config(ok)


def test_gauge_family_with_tubes_accepted():
    cfg = BASE_ENSEMBLE.replace("family: qp", "family: gauge-qp")
    cfg += "\nrounds: 4\nwilson:\n  temporal_tubes: true\n"
    parsed = parse_config(cfg)
    assert parsed["wilson"]["temporal_tubes"] is True
    assert parsed["rounds"] == 4


def test_rate_bounds():
    with pytest.raises(ConfigError, match=r"rates.qp must lie in \[0, 0.5\]"):
        parse_config(BASE_ENSEMBLE.replace("qp: 0.109", "qp: 0.6"))


def test_config_hash_stable_and_sensitive():
    a = parse_config(BASE_SCAN)
    b = parse_config(BASE_SCAN)
    assert a.config_hash() == b.config_hash()
    c = parse_config(BASE_SCAN.replace("master_seed: 3", "master_seed: 4"))
    assert c.config_hash() != a.config_hash()
    # formatting and key order do not affect the hash
    reordered = textwrap.dedent("""
    family: qp
    mode: scan
    grid: [0.09, 0.109, 0.13]
    mc:
      master_seed: 3
      n_disorder: 4
      sweeps: 64
      thermalization: 16
    lattice:
      sizes: [6, 9]
    """)
    assert parse_config(reordered).config_hash() == a.config_hash()


def test_mc_config_export():
    cfg = parse_config(BASE_ENSEMBLE)
    mc = cfg.mc_config(betas=(0.5, 1.0))
    assert mc.betas == (0.5, 1.0)
    assert mc.sweeps == 64
    assert mc.thermalization == 16
    assert mc.n_disorder == 2
    assert mc.master_seed == 1


def test_load_config_reads_file(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(BASE_SCAN)
    cfg = load_config(str(path))
    assert cfg.mode == "scan"
