"""Config parsing, unit conversion, antenna pmf and blockage geometry."""

import math

import numpy as np
import pytest

from conftest import make_network, make_tier
from hetnetsim.model import (AntennaPattern, Band, ConfigError, FadingConfig,
                             LinkState, NetworkConfig, cross_gain_pmf,
                             db_to_linear, dbm_to_watts, friis_kappa,
                             gain_pmf, linear_to_db, los_probability,
                             noise_power_w, path_loss, validate,
                             watts_to_dbm, with_antenna, with_bias,
                             with_density_scale)


def test_db_roundtrip():
    assert db_to_linear(10.0) == pytest.approx(10.0)
    assert linear_to_db(db_to_linear(-7.3)) == pytest.approx(-7.3)
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert watts_to_dbm(dbm_to_watts(53.0)) == pytest.approx(53.0)


def test_friis_kappa_28ghz():
    kappa = friis_kappa(28e9)
    # (4 pi f / c)^2 at 28 GHz, roughly 61.4 dB
    assert 10.0 * math.log10(kappa) == pytest.approx(61.4, abs=0.05)


def test_noise_power():
    # -174 dBm/Hz + 10 log10(1 GHz) + 10 dB figure = -74 dBm
    assert watts_to_dbm(noise_power_w(1e9, noise_figure_db=10.0)) == \
        pytest.approx(-74.0, abs=1e-9)


def test_table1_accepted(table1):
    assert table1.n_tiers == 3
    assert [t.name for t in table1.tiers] == ["micro", "pico", "femto"]
    assert not table1.is_hybrid


def test_nonincreasing_radii_rejected():
    with pytest.raises(ConfigError):
        make_network([make_tier(radii=(60.0, 40.0), betas=(0.5, 0.5))])


def test_los_prob_above_one_rejected():
    with pytest.raises(ConfigError):
        make_network([make_tier(radii=(50.0,), betas=(1.3,))])


def test_gain_pmf_full_main_lobe():
    pat = AntennaPattern(main_gain=10.0, side_gain=0.1,
                         beamwidth_rad=2.0 * math.pi)
    pmf = gain_pmf(pat)
    probs = {g: p for g, p in pmf}
    assert probs[100.0] == pytest.approx(1.0)
    assert sum(p for _, p in pmf) == pytest.approx(1.0)


def test_gain_pmf_half_beamwidth():
    pat = AntennaPattern(main_gain=4.0, side_gain=0.5, beamwidth_rad=math.pi)
    probs = [p for _, p in gain_pmf(pat)]
    assert probs == pytest.approx([0.25, 0.5, 0.25])


def test_gain_pmf_table1_values():
    pat = AntennaPattern(main_gain=db_to_linear(10.0),
                         side_gain=db_to_linear(-10.0),
                         beamwidth_rad=math.radians(30.0))
    pmf = gain_pmf(pat)
    probs = [p for _, p in pmf]
    assert probs == pytest.approx([(1 / 12) ** 2, 2 * (1 / 12) * (11 / 12),
                                   (11 / 12) ** 2])
    gains = [g for g, _ in pmf]
    assert gains == pytest.approx([100.0, 1.0, 0.01])


def test_cross_gain_pmf_normalizes():
    a = AntennaPattern(main_gain=2.0, side_gain=0.5, beamwidth_rad=2.0)
    b = AntennaPattern(main_gain=8.0, side_gain=0.25, beamwidth_rad=0.7)
    pmf = cross_gain_pmf(a, b)
    assert len(pmf) == 4
    assert sum(p for _, p in pmf) == pytest.approx(1.0)
    # mean gain factorizes over independent ends
    mean = sum(g * p for g, p in pmf)
    ma = sum(g * p for g, p in gain_pmf(a)) ** 0.5
    assert mean == pytest.approx(
        (a.main_gain * a.main_prob + a.side_gain * (1 - a.main_prob))
        * (b.main_gain * b.main_prob + b.side_gain * (1 - b.main_prob)))


def test_los_probability_annuli(table1):
    micro = table1.tiers[0]
    assert los_probability(micro, 30.0) == pytest.approx(0.8)
    assert los_probability(micro, 100.0) == pytest.approx(0.2)
    assert los_probability(micro, 250.0) is LinkState.OUTAGE


def test_path_loss_direct():
    tier = make_tier(radii=(50.0,), betas=(1.0,), alpha_los=2.0,
                     alpha_nlos=4.0, kappa_los=1.0)
    assert path_loss(tier, 0, LinkState.LOS, 10.0) == pytest.approx(100.0)
    assert path_loss(tier, 0, LinkState.NLOS, 10.0) == pytest.approx(10000.0)


def test_path_loss_table1_kappa(table1):
    micro = table1.tiers[0]
    kappa = friis_kappa(table1.carrier)
    assert path_loss(micro, 0, LinkState.LOS, 30.0) == \
        pytest.approx(kappa * 900.0, rel=1e-12)


def test_validate_collects_field_names():
    raw_tier = make_tier(density=-1.0)
    cfg = NetworkConfig(
        tiers=(raw_tier,), ue_density=1e-3, bandwidth=1e9, carrier=28e9,
        pattern=AntennaPattern(main_gain=10.0, side_gain=0.1,
                               beamwidth_rad=1.0),
        fading=FadingConfig())
    with pytest.raises(ConfigError) as err:
        validate(cfg)
    assert "tiers[0].density" in str(err.value)


def test_network_from_dict_round_trip(table1):
    assert table1.tiers[1].balls[0].radius == 40.0
    assert table1.tiers[1].balls[0].los_prob == 1.0
    assert table1.tiers[2].bias == pytest.approx(1.0)
    assert table1.tiers[0].tx_power == pytest.approx(dbm_to_watts(53.0))
    assert table1.tiers[0].static_power == 130.0
    assert table1.tiers[0].amp_slope == 4.0


def test_hybrid_loading(hybrid):
    assert hybrid.is_hybrid
    micro = hybrid.tiers[0]
    assert micro.band is Band.MICROWAVE
    # microwave serving gain couples the BS-side pattern with the UE pattern
    assert micro.serving_gain == pytest.approx(
        hybrid.mu_pattern.main_gain * hybrid.pattern.main_gain)
    assert len(hybrid.interferer_gain_pmf(0)) == 4
    assert len(hybrid.interferer_gain_pmf(1)) == 3
    assert hybrid.same_band_tiers(0) == (0,)
    assert hybrid.same_band_tiers(1) == (1, 2)


def test_subset(table1):
    sub = table1.subset((0, 2))
    assert sub.n_tiers == 2
    assert [t.name for t in sub.tiers] == ["micro", "femto"]


def test_with_bias_and_density(table1):
    cfg = with_bias(table1, {2: 5.0})
    assert cfg.tiers[2].bias == 5.0
    assert cfg.tiers[1].bias == table1.tiers[1].bias
    cfg2 = with_density_scale(table1, {0: 10.0})
    assert cfg2.tiers[0].density == pytest.approx(10.0 * table1.tiers[0].density)


def test_with_antenna_updates_serving_gain(table1):
    pat = AntennaPattern(main_gain=db_to_linear(15.0),
                         side_gain=table1.pattern.side_gain,
                         beamwidth_rad=table1.pattern.beamwidth_rad)
    cfg = with_antenna(table1, pat)
    assert cfg.tiers[0].serving_gain == pytest.approx(pat.main_gain ** 2)


def test_outage_radius(table1):
    assert table1.tiers[0].outage_radius == 200.0
    assert table1.tiers[1].outage_radius == 60.0
