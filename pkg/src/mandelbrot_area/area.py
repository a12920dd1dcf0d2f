"""Upper bounds ``A_N = pi * (1 - sum_{m=1}^{N} m * b_m^2)`` for the area."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable

from .arith import DyadicRational
from .engine import EXACT, CoeffStream

# reference sample points N = 0.5M .. 5M
REFERENCE_SAMPLE_POINTS = tuple(500_000 * k for k in range(1, 11))


class AreaError(ValueError):
    pass


class CompensatedSum:
    """Running float sum with a Neumaier error term."""

    __slots__ = ("total", "err")

    def __init__(self):
        self.total = 0.0
        self.err = 0.0

    def add(self, x: float) -> None:
        t = self.total + x
        if abs(self.total) >= abs(x):
            self.err += (self.total - t) + x
        else:
            self.err += (x - t) + self.total
        self.total = t

    @property
    def value(self) -> float:
        return self.total + self.err


@dataclass
class AreaSeries:
    mode: str
    samples: list[tuple[int, float]] = field(default_factory=list)
    # sum of m * b_m^2 for m = 1..last sample
    weighted_sum: float = 0.0
    max_abs_bm_tail: float = 0.0

    def __len__(self):
        return len(self.samples)

    def as_dict(self) -> dict[int, float]:
        return dict(self.samples)

    def summary(self) -> dict:
        if not self.samples:
            raise AreaError("empty series")
        n, a = self.samples[-1]
        return {"mode": self.mode, "N": n, "area_upper_bound": a, "max_abs_bm_tail": self.max_abs_bm_tail}


def accumulate(stream: CoeffStream, sample_points: Iterable[int]) -> AreaSeries:
    """Evaluate ``A_N`` at each requested ``N``.

    Exact streams are summed exactly and rounded once per sample; float
    streams use a compensated running sum.  ``max_abs_bm_tail`` is the
    largest ``|b_m|`` over the last tenth of the range ``1..N_max``.
    """
    points = sorted(set(int(p) for p in sample_points))
    if points and points[0] < 0:
        raise AreaError("sample points must be non-negative")
    n_max = points[-1] if points else 0
    if n_max >= len(stream):
        raise AreaError(f"stream holds b_0..b_{len(stream) - 1}; A_{n_max} needs b_{n_max}")
    series = AreaSeries(stream.mode)
    tail_start = n_max - n_max // 10
    tail = 0.0
    wanted = iter(points)
    nxt = next(wanted, None)
    while nxt == 0:
        series.samples.append((0, math.pi))
        nxt = next(wanted, None)
    if stream.mode == EXACT:
        acc = DyadicRational(0)
        for m in range(1, n_max + 1):
            b = stream[m]
            acc = acc + DyadicRational(m) * b * b
            if m >= tail_start:
                tail = max(tail, abs(float(b)))
            if m == nxt:
                series.samples.append((m, math.pi * (1.0 - float(acc))))
                nxt = next(wanted, None)
        series.weighted_sum = float(acc)
    else:
        acc = CompensatedSum()
        values = stream.floats()
        for m in range(1, n_max + 1):
            b = float(values[m])
            acc.add(m * b * b)
            if m >= tail_start:
                tail = max(tail, abs(b))
            if m == nxt:
                series.samples.append((m, math.pi * (1.0 - acc.value)))
                nxt = next(wanted, None)
        series.weighted_sum = acc.value
    series.max_abs_bm_tail = tail
    return series


def naive_area(stream: CoeffStream, n: int) -> float:
    """Plain left-to-right float accumulation, for comparison only."""
    values = stream.floats()
    s = 0.0
    for m in range(1, n + 1):
        s += m * float(values[m]) ** 2
    return math.pi * (1.0 - s)


def export_series(series: AreaSeries, path: str | os.PathLike, fmt: str | None = None) -> None:
    """Write ``N,A_N`` rows (CSV, 10 significant digits) or a JSON document."""
    if not series.samples:
        raise AreaError("refusing to export an empty series")
    fmt = fmt or ("json" if os.fspath(path).endswith(".json") else "csv")
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["N", "A_N"])
            for n, a in series.samples:
                w.writerow([n, f"{a:.10g}"])
    elif fmt == "json":
        doc = series.summary()
        doc["series"] = [{"N": n, "A_N": a} for n, a in series.samples]
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2)
    else:
        raise AreaError(f"unknown format {fmt!r}")
