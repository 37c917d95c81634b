"""Configuration, grid topologies and seeding policy.

All times are stored in seconds and frequencies in Hz; the ``*_samples``
properties convert to integer sample counts at ``sample_rate``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .channel import ChannelParams
from .errors import ConfigError

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
WAKE_PHASES = ("aligned", "random")


def _samples(duration: float, rate: float, name: str) -> int:
    n = duration * rate
    k = round(n)
    if k <= 0 or abs(n - k) > 1e-6:
        raise ConfigError(f"{name} x sample_rate must be a positive integer, got {n!r}")
    return k


@dataclass(frozen=True)
class PhyParams:
    tx_power_dbm: float = 0.0
    carrier_freq_hz: float = 2491e6
    cfo_range_hz: float = 10e3
    bandwidth_hz: float = 3e6
    roll_off: float = 0.5
    pulse_duration_s: float = 3e-6
    symbol_duration_s: float = 25e-6
    window_length_s: float = 10e-6
    sample_rate_hz: float = 20e6
    noise_floor_dbm: float = -60.0
    threshold_margin_db: float = 9.0
    preamble_len: int = 8
    power_tx_mw: float = 94.41
    power_rx_mw: float = 80.82
    power_sleep_mw: float = 1.8
    turnaround_delay_s: float = 100e-9
    # Majority-vote span of the detector; one base (pre-filter) pulse period.
    vote_duration_s: float = 0.5e-6
    # How far before the predicted arrival the next window opens.
    window_lead_s: float = 2.5e-6

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not self.pulse_duration_s < self.window_length_s <= self.symbol_duration_s:
            raise ConfigError(
                "pulse_duration < window_length <= symbol_duration violated: "
                f"{self.pulse_duration_s}, {self.window_length_s}, {self.symbol_duration_s}"
            )
        for name in ("symbol_duration_s", "pulse_duration_s", "window_length_s", "vote_duration_s"):
            _samples(getattr(self, name), self.sample_rate_hz, name)
        if not self.power_sleep_mw < self.power_rx_mw < self.power_tx_mw:
            raise ConfigError("power_sleep < power_rx < power_tx violated")
        if self.cfo_range_hz < 0:
            raise ConfigError("cfo_range must be >= 0")
        if not 0.0 <= self.roll_off <= 1.0:
            raise ConfigError("roll_off must lie in [0, 1]")
        if self.preamble_len < 1:
            raise ConfigError("preamble_len must be >= 1")
        if self.turnaround_delay_s < 0:
            raise ConfigError("turnaround_delay must be >= 0")
        if self.vote_samples > self.window_samples:
            raise ConfigError("vote span must not exceed the detection window")
        if not 0 <= self.window_lead_samples <= self.ts_samples // 2:
            raise ConfigError("window_lead must lie in [0, symbol_duration / 2]")
        if self.min_cycle_samples > self.ts_samples // 4:
            raise ConfigError("vote span + turnaround + pulse must fit in a quarter symbol period")

    @property
    def ts_samples(self) -> int:
        return _samples(self.symbol_duration_s, self.sample_rate_hz, "symbol_duration")

    @property
    def tp_samples(self) -> int:
        return _samples(self.pulse_duration_s, self.sample_rate_hz, "pulse_duration")

    @property
    def window_samples(self) -> int:
        return _samples(self.window_length_s, self.sample_rate_hz, "window_length")

    @property
    def vote_samples(self) -> int:
        return _samples(self.vote_duration_s, self.sample_rate_hz, "vote_duration")

    @property
    def turnaround_samples(self) -> int:
        return round(self.turnaround_delay_s * self.sample_rate_hz)

    @property
    def window_lead_samples(self) -> int:
        return round(self.window_lead_s * self.sample_rate_hz)

    @property
    def min_cycle_samples(self) -> int:
        return self.vote_samples + self.turnaround_samples + self.tp_samples

    @property
    def base_pulse_duration_s(self) -> float:
        return (1.0 + self.roll_off) / self.bandwidth_hz


@dataclass(frozen=True)
class BchParams:
    n: int = 127
    k: int = 106
    t: int = 3
    on_air_bits: int = 128

    def __post_init__(self) -> None:
        if self.k >= self.n:
            raise ConfigError("bch.k must be smaller than bch.n")
        if self.on_air_bits < self.n:
            raise ConfigError("on_air_bits must be >= bch.n")
        if self.t < 1:
            raise ConfigError("bch.t must be >= 1")


@dataclass(frozen=True)
class Topology:
    positions: np.ndarray
    grid_distance: float
    sink_id: int

    def __post_init__(self) -> None:
        pos = np.array(self.positions, dtype=float).reshape(-1, 2)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        if not 0 <= self.sink_id < len(pos):
            raise ConfigError("sink_id out of range")

    @property
    def n_nodes(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class CampaignConfig:
    n_packets: int = 1000
    wake_probability: float = 1.0
    base_seed: int = 1
    n_nodes: int = 25
    area_side_m: float = 25.0
    tail_symbols: int = 2
    idle_periods: int = 0
    # "aligned": relay period grids start with the source's first symbol;
    # "random": each relay's grid has a uniform random phase.
    wake_phase: str = "aligned"
    phy: PhyParams = field(default_factory=PhyParams)
    channel: ChannelParams = field(default_factory=ChannelParams)
    bch: BchParams = field(default_factory=BchParams)

    def __post_init__(self) -> None:
        if self.n_packets < 1:
            raise ConfigError("n_packets must be >= 1")
        if not 0.0 <= self.wake_probability <= 1.0:
            raise ConfigError("wake_probability must lie in [0, 1]")
        if self.area_side_m <= 0:
            raise ConfigError("area_side must be > 0")
        if self.tail_symbols < 0 or self.idle_periods < 0:
            raise ConfigError("tail_symbols and idle_periods must be >= 0")
        if not 0 <= self.base_seed <= MASK64:
            raise ConfigError("base_seed must be a 64-bit unsigned integer")
        if self.wake_phase not in WAKE_PHASES:
            raise ConfigError(f"wake_phase must be one of {WAKE_PHASES}, got {self.wake_phase!r}")
        _check_square(self.n_nodes)
        if not math.isclose(self.channel.noise_floor_dbm, self.phy.noise_floor_dbm):
            raise ConfigError("channel.noise_floor must mirror phy.noise_floor")

    @property
    def payload_info_bits(self) -> int:
        return self.bch.k

    @property
    def packet_symbols(self) -> int:
        return self.phy.preamble_len + self.bch.on_air_bits

    def replace(self, **changes: Any) -> "CampaignConfig":
        return dataclasses.replace(self, **changes)


def _check_square(n_nodes: int) -> int:
    if n_nodes < 1:
        raise ConfigError("n_nodes must be >= 1")
    k = math.isqrt(n_nodes)
    if k * k != n_nodes:
        lo, hi = k * k, (k + 1) * (k + 1)
        raise ConfigError(
            f"n_nodes={n_nodes} is not a perfect square; nearest squares are {lo} and {hi}"
        )
    return k


def build_grid_topology(n_nodes: int, area_side: float) -> Topology:
    """k x k grid with spacing ``area_side / k``, half-cell offset from the border.

    The sink is the corner node with maximal coordinates.
    """
    k = _check_square(n_nodes)
    if area_side <= 0:
        raise ConfigError("area_side must be > 0")
    d = area_side / k
    coords = (np.arange(k) + 0.5) * d
    xx, yy = np.meshgrid(coords, coords, indexing="ij")
    positions = np.column_stack([xx.ravel(), yy.ravel()])
    sink = int(np.lexsort((positions[:, 1], positions[:, 0]))[-1])
    return Topology(positions=positions, grid_distance=d, sink_id=sink)


def line_topology(distances: list[float]) -> Topology:
    """Nodes on the x axis at the given cumulative offsets; last node is the sink."""
    xs = np.concatenate([[0.0], np.cumsum(distances)])
    pos = np.column_stack([xs, np.zeros_like(xs)])
    spacing = float(distances[0]) if distances else 0.0
    return Topology(positions=pos, grid_distance=spacing, sink_id=len(xs) - 1)


def select_source(rng: np.random.Generator, topology: Topology) -> int:
    if topology.n_nodes < 2:
        raise ConfigError("a topology with a single node has no valid source")
    pick = int(rng.integers(topology.n_nodes - 1))
    return pick if pick < topology.sink_id else pick + 1


def mix64(z: int) -> int:
    """SplitMix64 finalizer; a bijection on 64-bit integers."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_trial_seed(base_seed: int, trial_index: int) -> int:
    """Per-trial seed: ``mix64(base + (index + 1) * 0x9E3779B97F4A7C15)``.

    Injective in ``trial_index`` for indices below 2**64 (the golden gamma is
    odd and ``mix64`` is bijective), and likewise injective in ``base_seed``.
    """
    return mix64((base_seed + (trial_index + 1) * GOLDEN_GAMMA) & MASK64)


def campaign_seed(base_seed: int, n_nodes: int, wake_probability: float) -> int:
    """Seed of one (density, P) cell; independent of sweep order."""
    p_key = round(wake_probability * 1_000_000)
    return mix64(derive_trial_seed(base_seed, n_nodes) ^ mix64(p_key + 0x5851F42D4C957F2D))


# --- config file -----------------------------------------------------------

_SECTIONS = {"phy": PhyParams, "channel": ChannelParams, "bch": BchParams}


def config_to_dict(config: CampaignConfig) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        out[f.name] = dataclasses.asdict(value) if f.name in _SECTIONS else value
    return out


def config_from_dict(data: dict[str, Any]) -> CampaignConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a mapping")
    kwargs: dict[str, Any] = {}
    known = {f.name for f in dataclasses.fields(CampaignConfig)}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown configuration key {key!r}")
        if key in _SECTIONS:
            cls = _SECTIONS[key]
            names = {f.name for f in dataclasses.fields(cls)}
            if not isinstance(value, dict):
                raise ConfigError(f"section {key!r} must be a mapping")
            bad = set(value) - names
            if bad:
                raise ConfigError(f"unknown keys in section {key!r}: {sorted(bad)}")
            try:
                kwargs[key] = cls(**value)
            except TypeError as exc:
                raise ConfigError(str(exc)) from exc
        else:
            kwargs[key] = value
    if "channel" not in kwargs and "phy" in kwargs:
        kwargs["channel"] = ChannelParams(noise_floor_dbm=kwargs["phy"].noise_floor_dbm)
    try:
        return CampaignConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> CampaignConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return config_from_dict(data)


def dump_config(config: CampaignConfig) -> str:
    return yaml.safe_dump(config_to_dict(config), sort_keys=False)
