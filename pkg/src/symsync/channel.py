"""Link model: log-distance path loss, exponential-PDP Rayleigh taps,
integer propagation delay, coherent superposition and receiver noise.

Power convention: ``|sample|**2`` is instantaneous power in mW.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError

SPEED_OF_LIGHT = 299_792_458.0
FADING_MODES = ("none", "rayleigh-block")

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_U53 = 2.0 ** -53
TWO_PI = 2.0 * math.pi


def friis_reference_loss_db(carrier_freq_hz: float, ref_distance_m: float = 1.0) -> float:
    """Free-space loss ``20 log10(4 pi d f / c)`` at the reference distance."""
    return 20.0 * math.log10(4.0 * math.pi * ref_distance_m * carrier_freq_hz / SPEED_OF_LIGHT)


@dataclass(frozen=True)
class ChannelParams:
    path_loss_exponent: float = 2.0
    reference_loss_db: float = round(friis_reference_loss_db(2491e6), 2)
    system_gain_db: float = 14.0
    rms_delay_spread_s: float = 15e-9
    n_taps: int = 3
    fading: str = "rayleigh-block"
    noise_floor_dbm: float = -60.0

    def __post_init__(self) -> None:
        if self.path_loss_exponent <= 0:
            raise ConfigError("path_loss_exponent must be > 0")
        if self.n_taps < 1:
            raise ConfigError("n_taps must be >= 1")
        if self.rms_delay_spread_s < 0:
            raise ConfigError("rms_delay_spread must be >= 0")
        if self.fading not in FADING_MODES:
            raise ConfigError(f"fading must be one of {FADING_MODES}, got {self.fading!r}")

    @property
    def effective_taps(self) -> int:
        return 1 if self.fading == "none" else self.n_taps


@dataclass(frozen=True)
class LinkRealization:
    taps: np.ndarray  # complex amplitude gains, one per sample of excess delay
    delay: int  # propagation delay in samples
    gain_db: float  # mean path gain


def path_gain_db(src: Sequence[float], dst: Sequence[float], cp: ChannelParams) -> float:
    dist = math.dist(src, dst)
    if dist == 0.0:
        raise ValueError("co-located nodes are not supported (zero link distance)")
    return -(cp.reference_loss_db + 10.0 * cp.path_loss_exponent * math.log10(dist)) + cp.system_gain_db


def tap_power_profile(cp: ChannelParams, fs: float) -> np.ndarray:
    """Exponential power-delay profile over ``n_taps`` sample-spaced taps, summing to 1."""
    n = cp.effective_taps
    if n == 1 or cp.rms_delay_spread_s == 0.0:
        prof = np.zeros(n)
        prof[0] = 1.0
        return prof
    delays = np.arange(n) / fs
    prof = np.exp(-delays / cp.rms_delay_spread_s)
    return prof / prof.sum()


def propagation_delay_samples(dist: float | np.ndarray, fs: float):
    return np.rint(np.asarray(dist) / SPEED_OF_LIGHT * fs).astype(np.int64)


def realize_link(rng: np.random.Generator, src, dst, cp: ChannelParams, fs: float) -> LinkRealization:
    gain_db = path_gain_db(src, dst, cp)
    g = 10.0 ** (gain_db / 10.0)
    delay = int(propagation_delay_samples(math.dist(src, dst), fs))
    if cp.fading == "none":
        taps = np.array([math.sqrt(g)], dtype=complex)
    else:
        prof = tap_power_profile(cp, fs)
        z = rng.standard_normal((cp.n_taps, 2))
        taps = np.sqrt(g * prof / 2.0) * (z[:, 0] + 1j * z[:, 1])
    return LinkRealization(taps=taps, delay=delay, gain_db=gain_db)


def realize_links(rng: np.random.Generator, positions: np.ndarray, cp: ChannelParams, fs: float):
    """All ordered links of a node set at once.

    Links are reciprocal: ``taps[i, j] == taps[j, i]``. Returns
    ``(taps, delays, gains_db)`` with shapes ``(N, N, n_taps)``, ``(N, N)``,
    ``(N, N)``; diagonal entries are zero.
    """
    pos = np.asarray(positions, dtype=float)
    n = len(pos)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff ** 2).sum(-1))
    off = ~np.eye(n, dtype=bool)
    if np.any(dist[off] == 0.0):
        raise ValueError("co-located nodes are not supported (zero link distance)")
    gains_db = np.zeros((n, n))
    gains_db[off] = -(cp.reference_loss_db + 10.0 * cp.path_loss_exponent * np.log10(dist[off])) + cp.system_gain_db
    g = np.where(off, 10.0 ** (gains_db / 10.0), 0.0)
    delays = propagation_delay_samples(dist, fs)
    np.fill_diagonal(delays, 0)
    ntap = cp.effective_taps
    if cp.fading == "none":
        taps = np.sqrt(g)[:, :, None].astype(complex)
    else:
        prof = tap_power_profile(cp, fs)
        iu = np.triu_indices(n, 1)
        z = rng.standard_normal((len(iu[0]), ntap, 2))
        upper = np.sqrt(g[iu][:, None] * prof[None, :] / 2.0) * (z[..., 0] + 1j * z[..., 1])
        taps = np.zeros((n, n, ntap), dtype=complex)
        taps[iu] = upper
        taps[iu[1], iu[0]] = upper
    return taps, delays, gains_db


# --- receiver noise ---------------------------------------------------------
#
# Noise is a pure function of (seed, node, global sample index): the trial
# kernel materializes only the samples a node actually listens to, and every
# backend reproduces the same values.


def noise_std(noise_floor_dbm: float) -> float:
    """Per-component standard deviation giving ``E|w|^2 = 10**(floor/10)`` mW."""
    return math.sqrt(10.0 ** (noise_floor_dbm / 10.0) / 2.0)


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def noise_sample(seed: int, node: int, t: int, std: float) -> tuple[float, float]:
    """Box-Muller sample keyed by ``(seed, node, t)``; ``t`` must be below 2**40."""
    z = (seed + (((node << 40) + t + 1) * _GAMMA)) & _MASK64
    h1 = _mix64(z)
    h2 = _mix64((z + _GAMMA) & _MASK64)
    u1 = ((h1 >> 11) + 1) * _U53
    u2 = (h2 >> 11) * _U53
    r = std * math.sqrt(-2.0 * math.log(u1))
    a = TWO_PI * u2
    return r * math.cos(a), r * math.sin(a)


def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def noise_block(seed: int, node: int, start: int, count: int, std: float) -> np.ndarray:
    """Vectorized :func:`noise_sample` for samples ``start .. start+count-1``."""
    t = np.arange(start, start + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        key = (np.uint64(node) << np.uint64(40)) + t + np.uint64(1)
        z = np.uint64(seed) + key * np.uint64(_GAMMA)
        h1 = _mix64_np(z)
        h2 = _mix64_np(z + np.uint64(_GAMMA))
    u1 = ((h1 >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * _U53
    u2 = (h2 >> np.uint64(11)).astype(np.float64) * _U53
    r = std * np.sqrt(-2.0 * np.log(u1))
    a = TWO_PI * u2
    return r * np.cos(a) + 1j * (r * np.sin(a))


def superpose(
    transmissions: Iterable[tuple[np.ndarray, LinkRealization, int]],
    n_samples: int,
    noise_floor_dbm: float | None = None,
    rng: np.random.Generator | None = None,
    noise: np.ndarray | None = None,
) -> np.ndarray:
    """Received samples ``0 .. n_samples-1`` at one node.

    Each transmission is ``(samples, link, start)``: the transmitted waveform
    begins at receiver-timeline sample ``start`` before propagation delay.
    Noise comes from ``noise`` if given, else is drawn from ``rng`` at
    ``noise_floor_dbm``; with neither, the output is noiseless.
    """
    out = np.zeros(n_samples, dtype=complex)
    for samples, link, start in transmissions:
        received = np.convolve(np.asarray(samples, dtype=complex), link.taps)
        lo = start + link.delay
        a, b = max(lo, 0), min(lo + len(received), n_samples)
        if a < b:
            out[a:b] += received[a - lo : b - lo]
    if noise is not None:
        out += noise[:n_samples]
    elif rng is not None and noise_floor_dbm is not None:
        s = noise_std(noise_floor_dbm)
        out += s * rng.standard_normal(n_samples) + 1j * s * rng.standard_normal(n_samples)
    return out
