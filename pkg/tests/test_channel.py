import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symsync.channel import (
    SPEED_OF_LIGHT,
    ChannelParams,
    LinkRealization,
    friis_reference_loss_db,
    noise_block,
    noise_sample,
    noise_std,
    path_gain_db,
    propagation_delay_samples,
    realize_link,
    realize_links,
    superpose,
    tap_power_profile,
)
from symsync.errors import ConfigError
from symsync.params import build_grid_topology

FS = 20e6


def test_friis_reference():
    # 20 log10(4 pi f / c) at 1 m
    expected = 20 * math.log10(4 * math.pi * 2491e6 / 299_792_458.0)
    assert friis_reference_loss_db(2491e6) == pytest.approx(expected)
    assert expected == pytest.approx(40.375, abs=1e-3)
    assert ChannelParams().reference_loss_db == pytest.approx(expected, abs=5e-3)


def test_path_gain_examples():
    cp = ChannelParams(reference_loss_db=40.36, system_gain_db=0.0)
    assert path_gain_db((0, 0), (1, 0), cp) == pytest.approx(-40.36)
    cp6 = ChannelParams(reference_loss_db=40.36, system_gain_db=6.0)
    assert path_gain_db((0, 0), (5, 0), cp6) == pytest.approx(-48.34, abs=5e-3)
    d1 = path_gain_db((0, 0), (3, 0), cp)
    d2 = path_gain_db((0, 0), (6, 0), cp)
    assert d1 - d2 == pytest.approx(20 * math.log10(2))
    with pytest.raises(ValueError):
        path_gain_db((1, 1), (1, 1), cp)


def test_channel_validation():
    for bad in ({"path_loss_exponent": 0}, {"n_taps": 0}, {"rms_delay_spread_s": -1}, {"fading": "rician"}):
        with pytest.raises(ConfigError):
            ChannelParams(**bad)


def test_delay_examples():
    assert propagation_delay_samples(5.0, FS) == 0
    assert 25.0 / SPEED_OF_LIGHT * FS == pytest.approx(1.668, abs=1e-3)
    assert propagation_delay_samples(25.0, FS) == 2


def test_tap_profile():
    prof = tap_power_profile(ChannelParams(), FS)
    assert prof.sum() == pytest.approx(1.0)
    assert np.all(np.diff(prof) < 0)
    # 50 ns sample spacing over a 15 ns decay constant
    assert prof[1] / prof[0] == pytest.approx(math.exp(-50 / 15))
    assert tap_power_profile(ChannelParams(rms_delay_spread_s=0.0), FS).tolist() == [1.0, 0.0, 0.0]


def test_no_fading_single_tap():
    cp = ChannelParams(fading="none")
    link = realize_link(np.random.default_rng(0), (0, 0), (5, 0), cp, FS)
    assert link.taps.shape == (1,)
    assert abs(link.taps[0]) ** 2 == pytest.approx(10 ** (link.gain_db / 10), rel=1e-12)


def test_rayleigh_mean_power():
    cp = ChannelParams()
    topo = build_grid_topology(441, 100.0)
    taps, delays, gains = realize_links(np.random.default_rng(1), topo.positions, cp, FS)
    iu = np.triu_indices(topo.n_nodes, 1)
    ratio = (np.abs(taps[iu]) ** 2).sum(-1) / 10 ** (gains[iu] / 10)
    assert ratio.size > 90_000
    assert ratio.mean() == pytest.approx(1.0, rel=0.02)
    # reciprocity and matching delays
    assert np.array_equal(taps, taps.transpose(1, 0, 2))
    assert np.array_equal(delays, delays.T)
    assert np.all(np.diagonal(taps, axis1=0, axis2=1) == 0)


def test_realize_links_deterministic():
    pos = build_grid_topology(9, 15.0).positions
    a = realize_links(np.random.default_rng(3), pos, ChannelParams(), FS)
    b = realize_links(np.random.default_rng(3), pos, ChannelParams(), FS)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_noise_power_and_determinism():
    std = noise_std(-60.0)
    w = noise_block(11, 3, 0, 1_000_000, std)
    # -60 dBm is 1e-6 mW per sample
    assert np.mean(np.abs(w) ** 2) == pytest.approx(1e-6, rel=0.01)
    assert abs(np.mean(w.real * w.imag)) < 3e-9
    assert np.array_equal(w[1000:1010], noise_block(11, 3, 1000, 10, std))
    assert not np.array_equal(w[:10], noise_block(11, 4, 0, 10, std))
    for t in (0, 1, 777, 999_999):
        re, im = noise_sample(11, 3, t, std)
        assert (re, im) == (w[t].real, w[t].imag)


def test_superpose_single_copy():
    link = LinkRealization(taps=np.array([0.5 + 0.5j]), delay=3, gain_db=-3.0)
    x = np.arange(1, 6, dtype=complex)
    out = superpose([(x, link, 2)], 20)
    expected = np.zeros(20, complex)
    expected[5:10] = x * (0.5 + 0.5j)
    assert np.array_equal(out, expected)


def test_superpose_coherent_gain():
    g = 0.1
    link = LinkRealization(taps=np.array([math.sqrt(g)]), delay=0, gain_db=10 * math.log10(g))
    pulse = np.array([0.2, 1.0, 0.2], dtype=complex)
    one = superpose([(pulse, link, 0)], 5)
    two = superpose([(pulse, link, 0), (pulse, link, 0)], 5)
    assert np.max(np.abs(two) ** 2) == pytest.approx(4 * np.max(np.abs(one) ** 2))


def test_superpose_noise_only():
    rng = np.random.default_rng(2)
    out = superpose([], 1_000_000, noise_floor_dbm=-60.0, rng=rng)
    assert np.mean(np.abs(out) ** 2) == pytest.approx(1e-6, rel=0.01)


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2 ** 32),
    starts=st.lists(st.integers(-5, 30), min_size=2, max_size=5),
)
def test_superpose_linear(seed, starts):
    rng = np.random.default_rng(seed)
    tx = []
    for s in starts:
        taps = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        link = LinkRealization(taps=taps, delay=int(rng.integers(0, 4)), gain_db=0.0)
        tx.append((rng.standard_normal(8) + 1j * rng.standard_normal(8), link, s))
    k = len(tx) // 2
    noise = noise_block(seed, 0, 0, 50, 1e-3)
    both = superpose(tx, 50, noise=noise)
    a = superpose(tx[:k], 50)
    b = superpose(tx[k:], 50)
    assert np.max(np.abs(both - a - b - noise)) < 1e-9
