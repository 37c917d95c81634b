"""Per-node energy ledger and per-state energy model.

Durations are kept as integer sample counts so that per-period partitions
are exact and campaign merges are order-independent; joules are derived
from counts only when reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .params import PhyParams
from .relay import SymbolStateKind

N_KINDS = len(SymbolStateKind)
MODES = ("tx", "rx", "sleep")
TX, RX, SLEEP = 0, 1, 2

# Published per-state figures (mean mW, std mW, mean J, std J) for comparison.
REFERENCE_STATE_VALUES = {
    SymbolStateKind.ONE_BIT_RELAY: (36.54, 11.18, 0.91e-6, 0.28e-6),
    SymbolStateKind.ZERO_BIT_RELAY: (33.41, 0.0, 0.84e-6, 0.0),
    SymbolStateKind.SLEEP: (1.80, 0.0, 45e-9, 0.0),
    SymbolStateKind.LISTEN_EMPTY: (80.82, 0.0, 2e-6, 0.0),
    SymbolStateKind.LISTEN_DETECT: (52.14, 17.38, 1.30e-6, 0.43e-6),
}


def mode_powers_w(phy: PhyParams) -> np.ndarray:
    return np.array([phy.power_tx_mw, phy.power_rx_mw, phy.power_sleep_mw]) * 1e-3


class SymbolEnergy(NamedTuple):
    kind: SymbolStateKind
    rx_time: float
    tx_time: float
    sleep_time: float
    energy_j: float


def account_symbol(kind: SymbolStateKind, listen_time: float, tx_time: float, phy: PhyParams) -> SymbolEnergy:
    ts = phy.symbol_duration_s
    if listen_time < 0 or tx_time < 0:
        raise ValueError("negative state duration")
    if listen_time + tx_time > ts * (1 + 1e-12):
        raise ValueError(f"listen {listen_time} + tx {tx_time} exceeds the symbol period {ts}")
    sleep = max(ts - listen_time - tx_time, 0.0)
    e = (phy.power_rx_mw * listen_time + phy.power_tx_mw * tx_time + phy.power_sleep_mw * sleep) * 1e-3
    return SymbolEnergy(SymbolStateKind(kind), listen_time, tx_time, sleep, e)


@dataclass
class EnergyLedger:
    """Sample counts per node, per state kind and per radio mode.

    ``counts[i, kind, mode]`` is the number of samples node ``i`` spent in
    ``mode`` during periods classified as ``kind``; ``listen_sq`` keeps the
    sum of squared per-period listen counts for variance reporting.
    """

    counts: np.ndarray  # (n_nodes, N_KINDS, 3) int64
    listen_sq: np.ndarray  # (n_nodes, N_KINDS) int64
    periods: np.ndarray  # (n_nodes, N_KINDS) int64
    ts_samples: int

    @classmethod
    def zeros(cls, n_nodes: int, ts_samples: int) -> "EnergyLedger":
        return cls(
            np.zeros((n_nodes, N_KINDS, 3), dtype=np.int64),
            np.zeros((n_nodes, N_KINDS), dtype=np.int64),
            np.zeros((n_nodes, N_KINDS), dtype=np.int64),
            ts_samples,
        )

    @classmethod
    def from_periods(cls, kinds: np.ndarray, listen: np.ndarray, tx: np.ndarray, ts_samples: int) -> "EnergyLedger":
        """Build from per-period arrays of shape ``(n_nodes, n_periods)``; kind -1 rows are skipped."""
        n = kinds.shape[0]
        led = cls.zeros(n, ts_samples)
        listen = listen.astype(np.int64)
        tx = tx.astype(np.int64)
        sleep = ts_samples - listen - tx
        for kind in range(N_KINDS):
            mask = kinds == kind
            led.counts[:, kind, TX] = np.where(mask, tx, 0).sum(axis=1)
            led.counts[:, kind, RX] = np.where(mask, listen, 0).sum(axis=1)
            led.counts[:, kind, SLEEP] = np.where(mask, sleep, 0).sum(axis=1)
            led.listen_sq[:, kind] = np.where(mask, listen * listen, 0).sum(axis=1)
            led.periods[:, kind] = mask.sum(axis=1)
        return led

    def __add__(self, other: "EnergyLedger") -> "EnergyLedger":
        if self.ts_samples != other.ts_samples:
            raise ValueError("cannot merge ledgers with different symbol periods")
        return EnergyLedger(
            self.counts + other.counts,
            self.listen_sq + other.listen_sq,
            self.periods + other.periods,
            self.ts_samples,
        )

    @property
    def n_nodes(self) -> int:
        return self.counts.shape[0]

    @property
    def symbol_periods_counted(self) -> np.ndarray:
        return self.periods.sum(axis=1)

    def check_conservation(self) -> None:
        """Every counted period partitions exactly into tx + rx + sleep = Ts."""
        if np.any(self.counts < 0):
            raise AssertionError("negative duration in ledger")
        per_kind = self.counts.sum(axis=2)
        if not np.array_equal(per_kind, self.periods * self.ts_samples):
            raise AssertionError("ledger durations do not sum to periods x Ts")

    def mode_energy_j(self, phy: PhyParams) -> np.ndarray:
        """``(n_nodes, 3)`` energy per radio mode."""
        return self.counts.sum(axis=1) / phy.sample_rate_hz * mode_powers_w(phy)

    def kind_energy_j(self, phy: PhyParams) -> np.ndarray:
        """``(n_nodes, N_KINDS)`` energy per state kind."""
        return (self.counts / phy.sample_rate_hz * mode_powers_w(phy)).sum(axis=2)

    def kind_duration_s(self, phy: PhyParams) -> np.ndarray:
        return self.counts.sum(axis=2) / phy.sample_rate_hz

    def total_energy_j(self, phy: PhyParams) -> np.ndarray:
        return self.mode_energy_j(phy).sum(axis=1)

    def select(self, nodes) -> "EnergyLedger":
        return EnergyLedger(self.counts[nodes], self.listen_sq[nodes], self.periods[nodes], self.ts_samples)

    def pooled(self) -> "EnergyLedger":
        """Single-row ledger summing all nodes."""
        return EnergyLedger(
            self.counts.sum(axis=0, keepdims=True),
            self.listen_sq.sum(axis=0, keepdims=True),
            self.periods.sum(axis=0, keepdims=True),
            self.ts_samples,
        )

    def state_statistics(self, phy: PhyParams) -> dict[SymbolStateKind, tuple[int, float, float]]:
        """Measured ``(periods, mean J, std J)`` of per-period energy by state, pooled over nodes."""
        fs = phy.sample_rate_hz
        p_tx, p_rx, p_sl = mode_powers_w(phy)
        counts = self.counts.sum(axis=0)
        sq = self.listen_sq.sum(axis=0)
        periods = self.periods.sum(axis=0)
        out = {}
        for kind in SymbolStateKind:
            n = int(periods[kind])
            if n == 0:
                out[kind] = (0, math.nan, math.nan)
                continue
            tx_mean = counts[kind, TX] / n
            l_mean = counts[kind, RX] / n
            l_var = max(sq[kind] / n - l_mean * l_mean, 0.0)
            mean = (p_rx * l_mean + p_tx * tx_mean + p_sl * (self.ts_samples - l_mean - tx_mean)) / fs
            # tx is constant within a kind, so energy varies only through listen time
            std = abs(p_rx - p_sl) * math.sqrt(l_var) / fs
            out[kind] = (n, mean, std)
        return out


@dataclass(frozen=True)
class EnergyReport:
    per_node_uj: np.ndarray  # (n_nodes, 3) tx/rx/sleep, per packet
    mean_tx_uj: float
    mean_rx_uj: float
    mean_sleep_uj: float

    @property
    def mean_total_uj(self) -> float:
        return self.mean_tx_uj + self.mean_rx_uj + self.mean_sleep_uj


def packet_energy_report(ledger: EnergyLedger, packets: int | np.ndarray, phy: PhyParams) -> EnergyReport:
    """Energy per packet per node, and its average over nodes, split by radio mode.

    ``packets`` is either a scalar or the per-node number of packets the node
    took part in; nodes with zero packets are left out of the average.
    """
    packets_arr = np.broadcast_to(np.asarray(packets, dtype=float), (ledger.n_nodes,))
    if np.all(packets_arr < 1):
        raise ValueError("packet count must be >= 1")
    energy = ledger.mode_energy_j(phy) * 1e6
    valid = packets_arr >= 1
    per_node = np.full_like(energy, np.nan)
    per_node[valid] = energy[valid] / packets_arr[valid, None]
    mean = energy[valid].sum(axis=0) / packets_arr[valid].sum()
    return EnergyReport(per_node, float(mean[TX]), float(mean[RX]), float(mean[SLEEP]))


@dataclass(frozen=True)
class TimingModel:
    """Listen time before the transmission, uniform on ``[listen_lo, listen_hi]`` seconds."""

    listen_lo: float
    listen_hi: float


def default_timing_model(kind: SymbolStateKind, phy: PhyParams) -> TimingModel:
    ts = phy.symbol_duration_s
    if kind == SymbolStateKind.LISTEN_DETECT:
        return TimingModel(0.0, ts)
    if kind == SymbolStateKind.ONE_BIT_RELAY:
        return TimingModel(0.0, phy.window_length_s)
    if kind == SymbolStateKind.LISTEN_EMPTY:
        return TimingModel(ts, ts)
    if kind == SymbolStateKind.ZERO_BIT_RELAY:
        return TimingModel(phy.window_length_s, phy.window_length_s)
    return TimingModel(0.0, 0.0)


class StateEnergyStats(NamedTuple):
    mean_mw: float
    mean_j: float
    std_j: float
    std_mw: float


def expected_state_energy(kind: SymbolStateKind, phy: PhyParams, timing: TimingModel | None = None) -> StateEnergyStats:
    """Closed-form mean and spread of one period's energy in a given state.

    States that forward a pulse transmit for ``Tp`` after listening; the
    remainder of the period is asleep. Energy is linear in the listen time,
    so a uniform listen time gives mean at the midpoint and
    std = (P_rx - P_sleep) x width / sqrt(12).
    """
    kind = SymbolStateKind(kind)
    timing = timing or default_timing_model(kind, phy)
    ts = phy.symbol_duration_s
    tx = phy.pulse_duration_s if kind in (SymbolStateKind.LISTEN_DETECT, SymbolStateKind.ONE_BIT_RELAY) else 0.0
    mean_listen = 0.5 * (timing.listen_lo + timing.listen_hi)
    mean_j = (
        phy.power_rx_mw * mean_listen + phy.power_tx_mw * tx + phy.power_sleep_mw * (ts - mean_listen - tx)
    ) * 1e-3
    std_j = (phy.power_rx_mw - phy.power_sleep_mw) * 1e-3 * (timing.listen_hi - timing.listen_lo) / math.sqrt(12.0)
    return StateEnergyStats(mean_j / ts * 1e3, mean_j, std_j, std_j / ts * 1e3)

