import math

import numpy as np
import pytest
import yaml

from symsync.errors import ConfigError
from symsync.params import (
    CampaignConfig,
    PhyParams,
    build_grid_topology,
    campaign_seed,
    config_from_dict,
    config_to_dict,
    derive_trial_seed,
    dump_config,
    line_topology,
    load_config,
    mix64,
    select_source,
)


def test_defaults_sample_counts():
    phy = PhyParams()
    assert phy.ts_samples == 500
    assert phy.tp_samples == 60
    assert phy.window_samples == 200
    assert phy.turnaround_samples == 2
    assert phy.base_pulse_duration_s == pytest.approx(0.5e-6)


@pytest.mark.parametrize(
    "changes, fragment",
    [
        ({"window_length_s": 2e-6}, "pulse_duration < window_length"),
        ({"window_length_s": 30e-6}, "window_length <= symbol_duration"),
        ({"symbol_duration_s": 25.01e-6, "window_length_s": 10e-6}, "positive integer"),
        ({"power_sleep_mw": 90.0}, "power_sleep < power_rx < power_tx"),
        ({"cfo_range_hz": -1.0}, "cfo_range"),
        ({"roll_off": 1.5}, "roll_off"),
        ({"preamble_len": 0}, "preamble_len"),
    ],
)
def test_phy_validation_names_constraint(changes, fragment):
    with pytest.raises(ConfigError, match=fragment.replace("(", r"\(")):
        PhyParams(**changes)


def test_grid_25():
    topo = build_grid_topology(25, 25.0)
    assert topo.grid_distance == 5.0
    assert topo.n_nodes == 25
    assert tuple(topo.positions[topo.sink_id]) == (22.5, 22.5)
    assert topo.positions.min() == 2.5


def test_grid_400_and_single():
    topo = build_grid_topology(400, 25.0)
    assert topo.grid_distance == 1.25
    assert topo.positions.shape == (400, 2)
    one = build_grid_topology(1, 10.0)
    assert one.n_nodes == 1 and one.sink_id == 0


@pytest.mark.parametrize("n, area", [(4, 3.0), (9, 25.0), (100, 25.0), (49, 7.3)])
def test_grid_spacing_identity(n, area):
    topo = build_grid_topology(n, area)
    k = math.isqrt(n)
    assert topo.grid_distance * k == pytest.approx(area, rel=0, abs=math.ulp(area))
    assert np.all(topo.positions > 0) and np.all(topo.positions < area)
    # nearest-neighbour distance is d everywhere
    diff = topo.positions[:, None] - topo.positions[None]
    dist = np.sqrt((diff ** 2).sum(-1)) + np.eye(n) * 1e9
    assert np.allclose(dist.min(axis=1), topo.grid_distance)


def test_non_square_names_neighbours():
    with pytest.raises(ConfigError, match="nearest squares are 16 and 25"):
        build_grid_topology(20, 25.0)


def test_select_source_two_nodes_and_single():
    topo = line_topology([3.0])
    rng = np.random.default_rng(0)
    assert {select_source(rng, topo) for _ in range(50)} == {0}
    with pytest.raises(ConfigError):
        select_source(rng, build_grid_topology(1, 5.0))


def test_select_source_uniform_chi_square():
    from scipy.stats import chisquare

    topo = build_grid_topology(25, 25.0)
    rng = np.random.default_rng(123)
    draws = np.array([select_source(rng, topo) for _ in range(100_000)])
    assert topo.sink_id not in draws
    counts = np.bincount(draws, minlength=25)
    counts = np.delete(counts, topo.sink_id)
    assert chisquare(counts).pvalue > 1e-3
    # each frequency within a 3 sigma binomial band around 1/24
    p = 1 / 24
    sigma = math.sqrt(p * (1 - p) / 100_000)
    assert np.all(np.abs(counts / 100_000 - p) < 3.5 * sigma)


def test_select_source_deterministic():
    topo = build_grid_topology(25, 25.0)
    a = [select_source(np.random.default_rng(5), topo) for _ in range(3)]
    assert len(set(a)) == 1


def test_mix64_known_vectors():
    # SplitMix64 outputs for state increments of the golden gamma from seed 0
    gamma = 0x9E3779B97F4A7C15
    assert mix64(gamma) == 0xE220A8397B1DCDAF
    assert mix64(2 * gamma & (2 ** 64 - 1)) == 0x6E789E6AA1B965F4


def test_trial_seed_injective_in_index_and_base():
    rng = np.random.default_rng(9)
    bases = rng.integers(0, 2 ** 63, 20_000, dtype=np.int64).tolist()
    assert all(derive_trial_seed(s, 0) != derive_trial_seed(s, 1) for s in bases)
    seeds = {derive_trial_seed(s, 7) for s in bases}
    assert len(seeds) == len(set(bases))
    idx = {derive_trial_seed(42, i) for i in range(100_000)}
    assert len(idx) == 100_000
    assert derive_trial_seed(42, 3) == derive_trial_seed(42, 3)


def test_campaign_seed_depends_on_cell():
    assert campaign_seed(1, 25, 0.2) != campaign_seed(1, 100, 0.2)
    assert campaign_seed(1, 25, 0.2) != campaign_seed(1, 25, 0.3)
    assert campaign_seed(1, 25, 0.2) == campaign_seed(1, 25, 0.2)


def test_campaign_validation():
    with pytest.raises(ConfigError):
        CampaignConfig(n_packets=0)
    with pytest.raises(ConfigError):
        CampaignConfig(wake_probability=1.2)
    with pytest.raises(ConfigError):
        CampaignConfig(n_nodes=24)
    with pytest.raises(ConfigError):
        CampaignConfig(wake_phase="sometimes")


def test_config_roundtrip(tmp_path):
    cfg = CampaignConfig(n_packets=7, wake_probability=0.3, n_nodes=16)
    assert config_from_dict(config_to_dict(cfg)) == cfg
    path = tmp_path / "c.yaml"
    path.write_text(dump_config(cfg))
    assert load_config(path) == cfg


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="unknown configuration key"):
        config_from_dict({"n_pakets": 3})
    with pytest.raises(ConfigError, match="unknown keys in section 'phy'"):
        config_from_dict({"phy": {"tx_pwr": 0}})
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("phy: [1, 2\n")
    with pytest.raises(ConfigError, match="cannot parse"):
        load_config(bad)


def test_partial_config_file(tmp_path):
    path = tmp_path / "p.yaml"
    path.write_text(yaml.safe_dump({"n_nodes": 100, "phy": {"threshold_margin_db": 10.0}}))
    cfg = load_config(path)
    assert cfg.n_nodes == 100
    assert cfg.phy.threshold_margin_db == 10.0
    assert cfg.phy.preamble_len == 8
