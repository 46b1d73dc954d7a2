"""Scenario engine: loading, curve construction, CSV/manifest output."""

import json
from dataclasses import replace
from pathlib import Path

import pytest

from hetnetsim.model import ConfigError
from hetnetsim.scenarios import (Experiment, Scenario, _build_curves, _tag,
                                 load_scenario, run_scenario)


def tier_dict(name, density, radius, beta, p_dbm=33):
    return {"name": name, "density_per_m2": density, "tx_power_dbm": p_dbm,
            "bias_db": 0, "noise_figure_db": 10, "static_power_w": 10,
            "amp_slope": 4, "band": "mmwave",
            "balls": [{"radius_m": radius, "los_prob": beta,
                       "alpha_los": 2, "alpha_nlos": 4}]}


def small_config(n_tiers=1):
    tiers = [tier_dict("a", 3e-4, 60, 0.8)]
    if n_tiers > 1:
        tiers.append(tier_dict("b", 5e-4, 40, 1.0, p_dbm=23))
    return {"ue_density_per_m2": 1e-3, "bandwidth_hz": 1e9,
            "carrier_hz": 2.8e10,
            "antenna": {"main_db": 10, "side_db": -10, "beamwidth_deg": 30},
            "fading": {"n_los": 3, "n_nlos": 2}, "tiers": tiers}


def write_scenario(tmp_path: Path, body: dict, name="scn.json") -> Path:
    path = tmp_path / name
    path.write_text(json.dumps(body))
    return path


def basic_scenario(tmp_path, **overrides) -> Path:
    body = {"name": "basic", "experiment": "SINR_VS_SNR",
            "config": small_config(),
            "grid": {"threshold_db": [-5.0, 5.0], "tier_counts": [1]},
            "monte_carlo": {"drops": 2000, "seed": 7, "chunks": 4}}
    body.update(overrides)
    return write_scenario(tmp_path, body)


def read_csv(path: Path):
    lines = path.read_text().strip().split("\n")
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


def test_load_scenario_inline_config(tmp_path):
    scn = load_scenario(basic_scenario(tmp_path))
    assert scn.name == "basic"
    assert scn.experiment is Experiment.SINR_VS_SNR
    assert scn.config.n_tiers == 1
    assert scn.monte_carlo.drops == 2000
    assert scn.monte_carlo.parallel_chunks == 4
    assert scn.mode == "sinr" and scn.exclusion_zone == "with_gains"


def test_load_scenario_bundled_and_relative(tmp_path):
    scn = load_scenario(basic_scenario(tmp_path, config="bundled:table1"))
    assert scn.config.n_tiers == 3
    cfg_path = tmp_path / "net.json"
    cfg_path.write_text(json.dumps(small_config()))
    scn = load_scenario(basic_scenario(tmp_path, config="net.json"))
    assert scn.config.n_tiers == 1
    assert scn.config_path.endswith("net.json")


def test_load_scenario_rejects_malformed(tmp_path):
    with pytest.raises(ConfigError):
        load_scenario(tmp_path / "missing.json")
    for body in (
        {"experiment": "SINR_VS_SNR", "config": small_config(), "grid": {}},
        {"name": "x", "experiment": "NOPE", "config": small_config(),
         "grid": {"threshold_db": [0]}},
        {"name": "x", "experiment": "SINR_VS_SNR", "config": small_config(),
         "grid": {"threshold_db": []}},
        {"name": "x", "experiment": "SINR_VS_SNR", "config": small_config(),
         "grid": {"threshold_db": [0]}, "mode": "psychic"},
        {"name": "x", "experiment": "SINR_VS_SNR", "config": small_config(),
         "grid": {"threshold_db": [0]}, "exclusion_zone": "none"},
        {"name": "x", "experiment": "SINR_VS_SNR", "config": 7,
         "grid": {"threshold_db": [0]}},
    ):
        with pytest.raises(ConfigError):
            load_scenario(write_scenario(tmp_path, body))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_scenario(bad)


def test_run_scenario_outputs_and_determinism(tmp_path):
    scn = load_scenario(basic_scenario(tmp_path))
    out1 = run_scenario(scn, output_dir=tmp_path / "run1")
    out2 = run_scenario(scn, output_dir=tmp_path / "run2", workers=2)
    assert out1.files == ("sinr_tiers1.csv", "snr_tiers1.csv")
    assert not out1.flagged
    for fname in out1.files:
        a = (tmp_path / "run1" / fname).read_bytes()
        b = (tmp_path / "run2" / fname).read_bytes()
        assert a == b
    m1 = json.loads(out1.manifest_path.read_text())
    m2 = json.loads((tmp_path / "run2" / "manifest.json").read_text())
    m1.pop("wall_time_s"), m2.pop("wall_time_s")
    assert m1 == m2
    assert m1["files"] == list(out1.files)
    assert len(m1["config_sha256"]) == 64

    header, rows = read_csv(tmp_path / "run1" / "sinr_tiers1.csv")
    assert header == ["x", "analytic", "quad_error", "flag",
                      "monte_carlo", "mc_stderr"]
    assert len(rows) == 2
    for row in rows:
        analytic, mc, se = float(row[1]), float(row[4]), float(row[5])
        assert 0.0 <= analytic <= 1.0
        assert row[3] == ""
        assert abs(analytic - mc) <= 5.0 * se + 0.02
    # sinr curve sits below the snr curve pointwise
    _, snr_rows = read_csv(tmp_path / "run1" / "snr_tiers1.csv")
    for r_sinr, r_snr in zip(rows, snr_rows):
        assert float(r_sinr[1]) <= float(r_snr[1]) + 1e-12


def test_run_scenario_grid_error_creates_nothing(tmp_path):
    scn = load_scenario(basic_scenario(tmp_path))
    broken = replace(scn, grid={"threshold_db": []})
    target = tmp_path / "never"
    with pytest.raises(ConfigError):
        run_scenario(broken, output_dir=target)
    assert not target.exists()


def test_energy_scenario_files(tmp_path):
    body = {"name": "ee", "experiment": "ENERGY", "config": small_config(2),
            "grid": {"bias_db": [0.0, 10.0], "tier": 1, "threshold_db": 0.0,
                     "variants": [{"name": "denser_b",
                                   "density_scale": {"1": 2.0}}]}}
    scn = load_scenario(write_scenario(tmp_path, body))
    result = run_scenario(scn, output_dir=tmp_path / "ee")
    assert result.files == ("ee_base.csv", "ee_denser_b.csv")
    _, rows = read_csv(tmp_path / "ee" / "ee_base.csv")
    assert [float(r[0]) for r in rows] == [0.0, 10.0]
    assert all(float(r[1]) > 0.0 for r in rows)


def test_assoc_scenario_with_mc_points(tmp_path):
    body = {"name": "assq", "experiment": "ASSOC_VS_BIAS",
            "config": small_config(2),
            "grid": {"bias_db": [0.0, 10.0], "tier": 1},
            "monte_carlo": {"drops": 4000, "seed": 5, "chunks": 2}}
    scn = load_scenario(write_scenario(tmp_path, body))
    result = run_scenario(scn, output_dir=tmp_path / "assq")
    assert result.files == ("assoc_a.csv", "assoc_b.csv")
    _, rows_a = read_csv(tmp_path / "assq" / "assoc_a.csv")
    _, rows_b = read_csv(tmp_path / "assq" / "assoc_b.csv")
    for ra, rb in zip(rows_a, rows_b):
        assert float(ra[1]) + float(rb[1]) <= 1.0 + 1e-9
        assert abs(float(ra[1]) - float(ra[4])) <= 5 * float(ra[5]) + 0.02
    # boosting tier b's bias moves mass from a to b
    assert float(rows_b[1][1]) > float(rows_b[0][1])
    assert float(rows_a[1][1]) < float(rows_a[0][1])


def test_closed24_conversion_rules():
    import hetnetsim.model as model
    cfg = model.network_from_dict(small_config())
    scn = Scenario(name="g", config=cfg, experiment=Experiment.GAIN_SWEEP,
                   grid={"threshold_db": [0.0], "main_gain_db": [10.0]},
                   mode="closed24")
    curves = _build_curves(scn)
    assert all(job["kind"] == "closed24"
               for curve in curves for job in curve.jobs)

    rate_scn = Scenario(name="r", config=cfg, experiment=Experiment.RATE,
                        grid={"rate_bps": [1e8]}, mode="closed24")
    with pytest.raises(ConfigError):
        _build_curves(rate_scn)
    beam_scn = Scenario(name="b", config=cfg, experiment=Experiment.BEAM_ERROR,
                        grid={"threshold_db": [0.0], "sigma_be_deg": [5.0]},
                        mode="closed24")
    with pytest.raises(ConfigError):
        _build_curves(beam_scn)


def test_hybrid_experiments_require_hybrid_config():
    import hetnetsim.model as model
    cfg = model.network_from_dict(small_config())
    for exp, grid in ((Experiment.HYBRID_BIAS,
                       {"threshold_db": [0.0], "bias_db": [0.0]}),
                      (Experiment.HYBRID_DENSITY,
                       {"threshold_db": [0.0], "density_mult": [2.0]})):
        with pytest.raises(ConfigError):
            _build_curves(Scenario(name="h", config=cfg, experiment=exp,
                                   grid=grid))


def test_filename_tags():
    assert _tag(-5) == "m5"
    assert _tag(0.5) == "0p5"
    assert _tag(10.0) == "10"
