"""Rates with Wilson intervals and the sweep table writers."""

from __future__ import annotations

import dataclasses
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from scipy.stats import norm

CSV_COLUMNS = (
    "n_nodes", "d_m", "P", "n_packets", "per", "per_lo", "per_hi", "prlr", "ber",
    "e_tx_uj", "e_rx_uj", "e_sleep_uj", "e_total_uj", "seed",
)
SCHEMA_VERSION = 1


def rate_with_ci(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float, float]:
    """Point estimate and Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    z = float(norm.ppf(0.5 + confidence / 2.0))
    p = successes / trials
    z2n = z * z / trials
    centre = (p + z2n / 2.0) / (1.0 + z2n)
    half = z * math.sqrt(p * (1.0 - p) / trials + z2n / (4.0 * trials)) / (1.0 + z2n)
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return p, lo, hi


def intervals_disjoint(a: tuple[float, float, float], b: tuple[float, float, float]) -> bool:
    return a[2] < b[1] or b[2] < a[1]


@dataclass(frozen=True)
class MetricRow:
    n_nodes: int
    d_m: float
    P: float
    n_packets: int
    per: float
    per_lo: float
    per_hi: float
    prlr: float
    ber: float
    e_tx_uj: float
    e_rx_uj: float
    e_sleep_uj: float
    e_total_uj: float
    seed: int

    def values(self) -> tuple:
        return tuple(getattr(self, c) for c in CSV_COLUMNS)


def format_value(v) -> str:
    # repr of a Python float is the shortest string that round-trips
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def render_table(rows: Iterable[MetricRow], fmt: str = "csv", header_lines: Iterable[str] = ()) -> str:
    """Whole file text. ``header_lines`` become ``#`` comments above the table."""
    if fmt not in ("csv", "gnuplot"):
        raise ValueError(f"unknown format {fmt!r}")
    out = [f"# {line}" if line else "#" for line in header_lines]
    if fmt == "csv":
        out.append(",".join(CSV_COLUMNS))
        out.extend(",".join(format_value(v) for v in r.values()) for r in rows)
    else:
        out.append("# " + " ".join(CSV_COLUMNS))
        out.extend(" ".join(format_value(v) for v in r.values()) for r in rows)
    return "\n".join(out) + "\n"


def write_atomic(path: str | Path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def emit_csv(rows: Iterable[MetricRow], destination: str | Path, fmt: str = "csv",
             header_lines: Iterable[str] = ()) -> None:
    try:
        write_atomic(destination, render_table(rows, fmt, header_lines))
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {destination}: {exc.strerror}") from exc


def read_csv(path: str | Path) -> list[MetricRow]:
    """Parse a file written by :func:`emit_csv` (csv format), skipping comment lines."""
    import csv

    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected columns {reader.fieldnames}")
    types = {f.name: f.type for f in dataclasses.fields(MetricRow)}
    rows = []
    for rec in reader:
        kwargs = {k: (int(v) if types[k] in (int, "int") else float(v)) for k, v in rec.items()}
        rows.append(MetricRow(**kwargs))
    return rows
