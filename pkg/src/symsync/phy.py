"""POOK baseband synthesis: raised-cosine pulse, symbol frames, CFO rotation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import PhyParams


@dataclass(frozen=True)
class PulseShape:
    taps: np.ndarray
    base_pulse_duration: float
    span: float

    @property
    def center(self) -> int:
        return len(self.taps) // 2


@dataclass(frozen=True)
class SampleFrame:
    samples: np.ndarray
    sample_rate: float

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def energy(self) -> float:
        """Frame energy in mJ (mW x s)."""
        return float(np.sum(np.abs(self.samples) ** 2) / self.sample_rate)


def raised_cosine(t: np.ndarray, symbol_time: float, roll_off: float) -> np.ndarray:
    """Raised-cosine impulse response with unit peak at ``t = 0``."""
    x = np.asarray(t, dtype=float) / symbol_time
    denom = 1.0 - (2.0 * roll_off * x) ** 2
    singular = np.isclose(denom, 0.0, atol=1e-12)
    safe = np.where(singular, 1.0, denom)
    h = np.sinc(x) * np.cos(np.pi * roll_off * x) / safe
    if roll_off > 0:
        limit = np.pi / 4.0 * np.sinc(1.0 / (2.0 * roll_off))
        h = np.where(singular, limit, h)
    return h


def make_pulse_shape(phy: PhyParams) -> PulseShape:
    """Raised-cosine pulse truncated to ``Tp`` and peak-scaled to ``tx_power``.

    Taps sit at offsets ``-L/2 .. L/2 - 1`` samples around the peak, where
    ``L = Tp * fs``. With the default numbers ``Tp`` covers exactly six base
    periods, so the first tap is the raised-cosine zero at ``-3T`` and the
    dropped tap at ``+3T`` is zero too.
    """
    n = phy.tp_samples
    fs = phy.sample_rate_hz
    t = (np.arange(n) - n // 2) / fs
    h = raised_cosine(t, phy.base_pulse_duration_s, phy.roll_off)
    peak_amp = math.sqrt(10.0 ** (phy.tx_power_dbm / 10.0))
    taps = h / h[n // 2] * peak_amp
    taps.setflags(write=False)
    return PulseShape(taps=taps, base_pulse_duration=phy.base_pulse_duration_s, span=n / fs)


def modulate_symbol(bit: int, shape: PulseShape, phy: PhyParams) -> SampleFrame:
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    samples = np.zeros(phy.ts_samples, dtype=complex)
    if bit:
        samples[: len(shape.taps)] = shape.taps
    return SampleFrame(samples, phy.sample_rate_hz)


def cfo_angle(cfo: float, sample_index: int, fs: float, initial_phase: float) -> float:
    """Oscillator phase at an absolute transmitter sample index.

    Evaluated in a fixed operation order so every kernel backend agrees to the bit.
    """
    return 2.0 * math.pi * cfo * float(sample_index) / fs + initial_phase


def apply_cfo(frame: SampleFrame, cfo: float, initial_phase: float, start_sample: int = 0) -> SampleFrame:
    """Rotate sample ``n`` by ``exp(j(2 pi cfo (start+n) / fs + phase))``."""
    n = np.arange(len(frame.samples)) + start_sample
    angle = 2.0 * math.pi * cfo * n.astype(float) / frame.sample_rate + initial_phase
    return SampleFrame(frame.samples * np.exp(1j * angle), frame.sample_rate)
