"""Per-node relay state machine: random wake-up, acquisition, forwarding.

The trial kernels run this logic in streaming form; :func:`step_symbol` is
the per-period reference used to replay and audit kernel decisions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .detector import DetectionResult, WindowState, detect
from .params import PhyParams


class SymbolStateKind(enum.IntEnum):
    SLEEP = 0
    LISTEN_EMPTY = 1
    LISTEN_DETECT = 2
    ONE_BIT_RELAY = 3
    ZERO_BIT_RELAY = 4


class Role(enum.Enum):
    SOURCE = "source"
    RELAY = "relay"
    SINK = "sink"


@dataclass(frozen=True)
class RelayRuntime:
    node: int
    role: Role
    window: WindowState
    acquired: bool = False
    cfo: float = 0.0
    phase: float = 0.0

    @property
    def period_start(self) -> int:
        return self.window.next_window_start


class SymbolStep(NamedTuple):
    kind: SymbolStateKind
    tx_start: int | None
    listen_samples: int
    tx_samples: int
    runtime: RelayRuntime


def wake_decision(rng: np.random.Generator, p: float) -> bool:
    if not 0.0 <= p <= 1.0:
        raise ValueError("wake probability must lie in [0, 1]")
    return bool(rng.random() < p)


def listen_length(rt: RelayRuntime, phy: PhyParams) -> int:
    """Samples listened when awake: a whole period before acquisition, one window after."""
    return rt.window.window_len_samples if rt.acquired else phy.ts_samples


def resync(rt: RelayRuntime, detect_instant: int, ts_samples: int, lead: int = 0) -> RelayRuntime:
    window = replace(rt.window, next_window_start=detect_instant + ts_samples - lead, synced=True)
    return replace(rt, window=window, acquired=True)


def step_symbol(
    rt: RelayRuntime,
    awake: bool,
    rx: np.ndarray | None,
    phy: PhyParams,
    threshold: float,
) -> SymbolStep:
    """Advance one relay by one of its own symbol periods.

    ``rx`` holds the received samples from the period start, of length
    :func:`listen_length`; it must be given iff the node is awake.
    """
    if rt.role is Role.SOURCE:
        raise ValueError("the source only transmits")
    if rt.role is Role.SINK and not awake:
        raise ValueError("the sink never sleeps")
    ts = phy.ts_samples
    start = rt.period_start
    if not awake:
        if rx is not None:
            raise AssertionError("rx given for a sleeping node")
        rt = replace(rt, window=replace(rt.window, next_window_start=start + ts))
        return SymbolStep(SymbolStateKind.SLEEP, None, 0, 0, rt)
    if rx is None:
        raise AssertionError("awake node without received samples (engine bug)")
    n_listen = listen_length(rt, phy)
    if len(rx) != n_listen:
        raise AssertionError(f"expected {n_listen} received samples, got {len(rx)}")

    result = detect(rx, threshold, phy.vote_samples)
    if result.bit == 0:
        kind = SymbolStateKind.ZERO_BIT_RELAY if rt.acquired else SymbolStateKind.LISTEN_EMPTY
        rt = replace(rt, window=replace(rt.window, next_window_start=start + ts))
        return SymbolStep(kind, None, n_listen, 0, rt)

    instant = start + result.detect_offset
    done = instant + phy.vote_samples  # first sample after the deciding span
    tx_start = done + phy.turnaround_samples
    listen = tx_start - start
    if rt.acquired:
        kind = SymbolStateKind.ONE_BIT_RELAY
    else:
        kind = SymbolStateKind.LISTEN_DETECT
        # an acquisition late in the period overruns it; the excess is not billed
        listen = min(listen, ts - phy.tp_samples)
    rt = resync(rt, instant, ts, phy.window_lead_samples)
    return SymbolStep(kind, tx_start, listen, phy.tp_samples, rt)


def initial_runtime(node: int, role: Role, first_period_start: int, phy: PhyParams,
                    cfo: float = 0.0, phase: float = 0.0) -> RelayRuntime:
    window = WindowState(next_window_start=first_period_start, window_len_samples=phy.window_samples)
    return RelayRuntime(node=node, role=role, window=window, cfo=cfo, phase=phase)


__all__ = [
    "DetectionResult",
    "RelayRuntime",
    "Role",
    "SymbolStateKind",
    "SymbolStep",
    "initial_runtime",
    "listen_length",
    "resync",
    "step_symbol",
    "wake_decision",
]
