"""Trial simulation and Monte Carlo campaign driver.

A trial is one packet flooded from a random source to the sink. All
randomness of a trial is drawn up front from its seed; the streaming kernel
(see :mod:`symsync.kernel`) then plays out the sample-accurate timeline.
Campaigns aggregate integer counts only, so any partition of the trial
indices over workers merges to identical results.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .channel import noise_std, realize_links
from .coding import decode, encode, make_bch
from .energy import EnergyLedger, EnergyReport, packet_energy_report
from .kernel import get_backend
from .params import (
    CampaignConfig,
    Topology,
    build_grid_topology,
    campaign_seed,
    derive_trial_seed,
    mix64,
    select_source,
)
from .phy import make_pulse_shape
from .relay import SymbolStateKind
from .stats import MetricRow, rate_with_ci

NOISE_STREAM = 0x6A09E667F3BCC909


@dataclass
class TrialSetup:
    """Every random draw of one trial, in kernel-ready form."""

    topology: Topology
    source: int
    info: np.ndarray
    bits: np.ndarray  # preamble + on-air codeword, one entry per symbol
    cfo: np.ndarray
    phase: np.ndarray
    first_start: np.ndarray
    taps: np.ndarray
    delays: np.ndarray
    wake: np.ndarray
    noise_seed: int
    n_periods: int
    src_offset: int
    t_end: int

    @property
    def is_relay(self) -> np.ndarray:
        mask = np.ones(self.topology.n_nodes, dtype=np.uint8)
        mask[self.source] = 0
        mask[self.topology.sink_id] = 0
        return mask


@dataclass
class TrialTrace:
    kinds: np.ndarray  # (n_nodes, n_periods), -1 for non-relays
    listen: np.ndarray
    tx: np.ndarray
    period_start: np.ndarray
    tx_node: np.ndarray
    tx_start: np.ndarray
    tx_trigger: np.ndarray  # completing sample of the triggering detection, -1 for the source
    sink_bits: np.ndarray


@dataclass
class TrialResult:
    seed: int
    source: int
    preamble_detected: bool
    decoded_ok: bool
    payload_bit_errors: int
    sink_acquired_symbol: int | None
    ledger: EnergyLedger
    trace: TrialTrace | None = None


def prepare_trial(config: CampaignConfig, trial_seed: int, topology: Topology | None = None) -> TrialSetup:
    phy = config.phy
    topo = topology or build_grid_topology(config.n_nodes, config.area_side_m)
    n = topo.n_nodes
    code = make_bch(config.bch.n, config.bch.k, config.bch.t, config.bch.on_air_bits)
    rng = np.random.default_rng(trial_seed)
    source = select_source(rng, topo)
    info = rng.integers(0, 2, code.k, dtype=np.uint8)
    bits = np.concatenate([np.ones(phy.preamble_len, dtype=np.uint8), encode(info, code)])
    cfo = rng.uniform(-phy.cfo_range_hz, phy.cfo_range_hz, n)
    phase = rng.uniform(0.0, 2.0 * math.pi, n)
    ts = phy.ts_samples
    if config.wake_phase == "random":
        first_start = rng.integers(0, ts, n).astype(np.int64)
    else:
        first_start = np.zeros(n, dtype=np.int64)
    taps, delays, _ = realize_links(rng, topo.positions, config.channel, phy.sample_rate_hz)
    n_periods = config.packet_symbols + config.idle_periods
    wake = rng.random((n, n_periods)) < config.wake_probability
    src_offset = config.idle_periods * ts
    t_end = src_offset + (config.packet_symbols + config.tail_symbols) * ts
    return TrialSetup(
        topology=topo,
        source=source,
        info=info,
        bits=bits,
        cfo=cfo,
        phase=phase,
        first_start=first_start,
        taps=taps,
        delays=delays.astype(np.int64),
        wake=wake,
        noise_seed=mix64(trial_seed ^ NOISE_STREAM),
        n_periods=n_periods,
        src_offset=src_offset,
        t_end=t_end,
    )


def _check_trace(trace: TrialTrace, is_relay: np.ndarray, ts: int, tp: int, turn: int) -> None:
    """Per-period conservation, causality and half-duplex checks."""
    relays = is_relay.astype(bool)
    k = trace.kinds[relays]
    if np.any((k < 0) | (k > 4)):
        raise AssertionError("relay period left unclassified")
    if np.any(trace.kinds[~relays] != -1):
        raise AssertionError("non-relay node has relay periods")
    listen = trace.listen[relays].astype(np.int64)
    tx = trace.tx[relays].astype(np.int64)
    if np.any(listen < 0) or np.any(tx < 0) or np.any(listen + tx > ts):
        raise AssertionError("per-period tx + rx exceeds the symbol period")
    fwd = (k == SymbolStateKind.LISTEN_DETECT) | (k == SymbolStateKind.ONE_BIT_RELAY)
    if np.any(tx[fwd] != tp) or np.any(tx[~fwd] != 0):
        raise AssertionError("transmit time inconsistent with state kind")
    relayed = trace.tx_trigger >= 0
    if np.any(trace.tx_start[relayed] < trace.tx_trigger[relayed] + 1 + turn):
        raise AssertionError("relay transmitted before its triggering detection")


def run_trial(
    config: CampaignConfig,
    trial_seed: int,
    topology: Topology | None = None,
    backend: str | None = None,
    keep_trace: bool = False,
    noise: bool = True,
) -> TrialResult:
    """Simulate one packet; a pure function of ``(config, trial_seed, topology)``.

    ``noise=False`` disables receiver noise (used for flood-property checks).
    """
    phy = config.phy
    setup = prepare_trial(config, trial_seed, topology)
    topo = setup.topology
    n = topo.n_nodes
    nper = setup.n_periods
    nsym = len(setup.bits)
    is_relay = setup.is_relay
    n_relays = int(is_relay.sum())

    kinds = np.full((n, nper), -1, dtype=np.int8)
    listen = np.zeros((n, nper), dtype=np.int32)
    tx = np.zeros((n, nper), dtype=np.int32)
    starts = np.full((n, nper), -1, dtype=np.int64)
    sink_bits = np.zeros(nsym, dtype=np.uint8)
    cap = nsym + n_relays * nper + 1
    tx_node = np.zeros(cap, dtype=np.int64)
    tx_start = np.zeros(cap, dtype=np.int64)
    tx_trigger = np.zeros(cap, dtype=np.int64)

    pulse = np.ascontiguousarray(make_pulse_shape(phy).taps, dtype=float)
    thr2 = 10.0 ** ((phy.noise_floor_dbm + phy.threshold_margin_db) / 10.0)
    std = noise_std(config.channel.noise_floor_dbm) if noise else 0.0
    kern = get_backend(backend)
    n_tx, acquired, sink_m = kern.simulate(
        pulse,
        np.ascontiguousarray(setup.taps.real),
        np.ascontiguousarray(setup.taps.imag),
        setup.delays,
        setup.cfo,
        setup.phase,
        setup.wake.astype(np.uint8),
        setup.first_start,
        setup.bits,
        is_relay,
        setup.source,
        topo.sink_id,
        phy.ts_samples,
        phy.window_samples,
        phy.vote_samples,
        phy.turnaround_samples,
        phy.window_lead_samples,
        nper,
        setup.t_end,
        setup.src_offset,
        setup.noise_seed,
        std,
        thr2,
        phy.sample_rate_hz,
        2.0 * math.pi,
        kinds,
        listen,
        tx,
        starts,
        sink_bits,
        tx_node,
        tx_start,
        tx_trigger,
    )
    trace = TrialTrace(kinds, listen, tx, starts, tx_node[:n_tx].copy(), tx_start[:n_tx].copy(),
                       tx_trigger[:n_tx].copy(), sink_bits)
    _check_trace(trace, is_relay, phy.ts_samples, phy.tp_samples, phy.turnaround_samples)
    ledger = EnergyLedger.from_periods(kinds, listen, tx, phy.ts_samples)
    ledger.check_conservation()

    preamble_detected = bool(acquired) and 0 <= sink_m < phy.preamble_len
    payload = sink_bits[phy.preamble_len:]
    sent = setup.bits[phy.preamble_len:]
    bit_errors = int(np.count_nonzero(payload != sent))
    decoded_ok = False
    if preamble_detected:
        code = make_bch(config.bch.n, config.bch.k, config.bch.t, config.bch.on_air_bits)
        info = decode(payload, code)
        decoded_ok = info is not None and bool(np.array_equal(info, setup.info))
    return TrialResult(
        seed=trial_seed,
        source=setup.source,
        preamble_detected=preamble_detected,
        decoded_ok=decoded_ok,
        payload_bit_errors=bit_errors,
        sink_acquired_symbol=int(sink_m) if acquired else None,
        ledger=ledger,
        trace=trace if keep_trace else None,
    )


@dataclass
class CampaignResult:
    """Integer aggregates of a set of trials; rates are derived on demand."""

    config: CampaignConfig
    seed: int
    grid_distance: float
    n_packets: int = 0
    n_delivered: int = 0
    n_preamble_detected: int = 0
    bit_errors: int = 0
    payload_bits: int = 0
    relay_packets: np.ndarray = field(default=None)  # per node: trials in which it was a relay
    ledger: EnergyLedger = field(default=None)

    def __post_init__(self) -> None:
        n = self.config.n_nodes
        if self.relay_packets is None:
            self.relay_packets = np.zeros(n, dtype=np.int64)
        if self.ledger is None:
            self.ledger = EnergyLedger.zeros(n, self.config.phy.ts_samples)

    def add_trial(self, trial: TrialResult, sink: int) -> None:
        self.n_packets += 1
        self.n_delivered += int(trial.decoded_ok)
        if trial.preamble_detected:
            self.n_preamble_detected += 1
            self.bit_errors += trial.payload_bit_errors
            self.payload_bits += self.config.bch.on_air_bits
        relay = np.ones(len(self.relay_packets), dtype=bool)
        relay[[trial.source, sink]] = False
        self.relay_packets += relay
        self.ledger = self.ledger + trial.ledger

    def merge(self, other: "CampaignResult") -> "CampaignResult":
        if other.config != self.config or other.seed != self.seed:
            raise ValueError("can only merge parts of the same campaign")
        return CampaignResult(
            config=self.config,
            seed=self.seed,
            grid_distance=self.grid_distance,
            n_packets=self.n_packets + other.n_packets,
            n_delivered=self.n_delivered + other.n_delivered,
            n_preamble_detected=self.n_preamble_detected + other.n_preamble_detected,
            bit_errors=self.bit_errors + other.bit_errors,
            payload_bits=self.payload_bits + other.payload_bits,
            relay_packets=self.relay_packets + other.relay_packets,
            ledger=self.ledger + other.ledger,
        )

    @property
    def n_errors(self) -> int:
        return self.n_packets - self.n_delivered

    @property
    def n_preamble_lost(self) -> int:
        return self.n_packets - self.n_preamble_detected

    def per(self, confidence: float = 0.95) -> tuple[float, float, float]:
        return rate_with_ci(self.n_errors, self.n_packets, confidence)

    def prlr(self, confidence: float = 0.95) -> tuple[float, float, float]:
        return rate_with_ci(self.n_preamble_lost, self.n_packets, confidence)

    @property
    def ber(self) -> float:
        return self.bit_errors / self.payload_bits if self.payload_bits else math.nan

    def energy(self) -> EnergyReport:
        """Energy per packet per relay (source and sink excluded), split by radio mode."""
        return packet_energy_report(self.ledger, self.relay_packets, self.config.phy)

    def metric_row(self) -> MetricRow:
        per, lo, hi = self.per()
        e = self.energy()
        return MetricRow(
            n_nodes=self.config.n_nodes,
            d_m=self.grid_distance,
            P=self.config.wake_probability,
            n_packets=self.n_packets,
            per=per,
            per_lo=lo,
            per_hi=hi,
            prlr=self.prlr()[0],
            ber=self.ber,
            e_tx_uj=e.mean_tx_uj,
            e_rx_uj=e.mean_rx_uj,
            e_sleep_uj=e.mean_sleep_uj,
            e_total_uj=e.mean_total_uj,
            seed=self.config.base_seed,
        )


def _run_block(args) -> CampaignResult:
    config, seed, start, stop, topology, backend = args
    part = CampaignResult(config=config, seed=seed, grid_distance=topology.grid_distance)
    for i in range(start, stop):
        trial = run_trial(config, derive_trial_seed(seed, i), topology, backend)
        part.add_trial(trial, topology.sink_id)
    return part


def default_workers() -> int:
    raw = os.environ.get("SYMSYNC_WORKERS", "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"SYMSYNC_WORKERS must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValueError("SYMSYNC_WORKERS must be >= 1")
    return value


def _blocks(start: int, count: int, n_blocks: int) -> list[tuple[int, int]]:
    edges = np.linspace(start, start + count, n_blocks + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def run_campaign(
    config: CampaignConfig,
    workers: int | None = None,
    topology: Topology | None = None,
    backend: str | None = None,
    start: int = 0,
    count: int | None = None,
) -> CampaignResult:
    """Run trials ``start .. start + count - 1`` of the campaign defined by ``config``.

    The campaign seed depends on ``(base_seed, n_nodes, P)`` only; trial
    ``i`` always uses the same derived seed, so partial runs merge exactly.
    """
    topo = topology or build_grid_topology(config.n_nodes, config.area_side_m)
    if topo.n_nodes != config.n_nodes:
        raise ValueError("topology size does not match config.n_nodes")
    count = config.n_packets if count is None else count
    seed = campaign_seed(config.base_seed, config.n_nodes, config.wake_probability)
    workers = default_workers() if workers is None else workers
    if workers < 1:
        raise ValueError("workers must be >= 1")
    total = CampaignResult(config=config, seed=seed, grid_distance=topo.grid_distance)
    if count <= 0:
        return total
    if workers == 1:
        return total.merge(_run_block((config, seed, start, start + count, topo, backend)))
    # more blocks than workers keeps the pool busy when trial costs vary
    jobs = [(config, seed, a, b, topo, backend) for a, b in _blocks(start, count, 4 * workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_run_block, jobs):
            total = total.merge(part)
    return total


def run_sweep(
    config: CampaignConfig,
    p_values: Sequence[float],
    densities: Sequence[int],
    workers: int | None = None,
    backend: str | None = None,
    progress: Callable[[CampaignResult], None] | None = None,
) -> list[CampaignResult]:
    """Campaigns over the cartesian product densities x P, density-major."""
    if not p_values or not densities:
        raise ValueError("P and density lists must be nonempty")
    out = []
    for n_nodes in densities:
        for p in p_values:
            cell = config.replace(n_nodes=int(n_nodes), wake_probability=float(p))
            res = run_campaign(cell, workers=workers, backend=backend)
            if progress is not None:
                progress(res)
            out.append(res)
    return out
