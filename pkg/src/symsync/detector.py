"""Window-based POOK detector with majority voting over a sliding span."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class WindowState:
    next_window_start: int
    window_len_samples: int
    synced: bool = False


@dataclass(frozen=True)
class DetectionResult:
    bit: int
    detect_offset: int | None = None


def threshold_amplitude(noise_floor_dbm: float, margin_db: float) -> float:
    """Amplitude (mW**0.5) that sits ``margin_db`` above the noise floor."""
    return math.sqrt(10.0 ** ((noise_floor_dbm + margin_db) / 10.0))


def detect(window_samples, threshold: float, vote_len: int) -> DetectionResult:
    """First vote span in which strictly more than half the magnitudes exceed ``threshold``.

    Spans of ``vote_len`` samples start at offsets ``0 .. len - vote_len``;
    the earliest qualifying offset is reported. A tie votes 0.
    """
    x = np.asarray(window_samples)
    if vote_len < 1 or len(x) < vote_len:
        raise ValueError("need len(window) >= vote_len >= 1")
    # squared comparison matches the trial kernel exactly
    above = (x.real * x.real + x.imag * x.imag) > threshold * threshold
    counts = np.convolve(above.astype(np.int64), np.ones(vote_len, dtype=np.int64), mode="valid")
    hits = np.flatnonzero(2 * counts > vote_len)
    if hits.size == 0:
        return DetectionResult(0)
    return DetectionResult(1, int(hits[0]))


def detect_many(windows, threshold: float, vote_len: int) -> np.ndarray:
    """Row-wise :func:`detect` over a 2-D array; returns offsets, -1 where the bit is 0."""
    x = np.asarray(windows)
    if x.ndim != 2 or vote_len < 1 or x.shape[1] < vote_len:
        raise ValueError("need a 2-D array with rows of length >= vote_len >= 1")
    above = (x.real * x.real + x.imag * x.imag) > threshold * threshold
    csum = np.zeros((x.shape[0], x.shape[1] + 1), dtype=np.int64)
    np.cumsum(above, axis=1, out=csum[:, 1:])
    counts = csum[:, vote_len:] - csum[:, :-vote_len]
    hit = 2 * counts > vote_len
    first = hit.argmax(axis=1)
    return np.where(hit.any(axis=1), first, -1)


def advance_window(ws: WindowState, detection: DetectionResult, ts_samples: int, lead: int = 0) -> WindowState:
    """Next window start: re-anchored at the detection instant on a 1, fixed stride on a 0.

    ``lead`` opens the next window that many samples before the predicted arrival.
    """
    if detection.bit:
        start = ws.next_window_start + detection.detect_offset + ts_samples - lead
    else:
        start = ws.next_window_start + ts_samples
    return replace(ws, next_window_start=start)


def false_alarm_probability(margin_db: float, vote_len: int, n_offsets: int = 1) -> float:
    """Probability that noise alone triggers a 1 in a window.

    Per-sample exceedance for a Rayleigh magnitude is ``exp(-10**(margin/10))``;
    a span fires when more than half its samples exceed. The union bound over
    ``n_offsets`` spans caps the window probability.
    """
    from scipy.stats import binom

    p = math.exp(-(10.0 ** (margin_db / 10.0)))
    span = float(binom.sf(vote_len // 2, vote_len, p))
    return min(1.0, n_offsets * span)
