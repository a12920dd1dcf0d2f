import json
import math
import random

import numpy as np
import pytest

from mandelbrot_area.area import (
    REFERENCE_SAMPLE_POINTS,
    AreaError,
    CompensatedSum,
    accumulate,
    export_series,
    naive_area,
)
from mandelbrot_area.arith import DyadicRational as D
from mandelbrot_area.engine import EXACT, FLOAT, CoeffStream


def test_reference_sample_points():
    assert REFERENCE_SAMPLE_POINTS[0] == 500_000 and REFERENCE_SAMPLE_POINTS[-1] == 5_000_000 and len(REFERENCE_SAMPLE_POINTS) == 10


def test_small_exact_value():
    stream = CoeffStream([D(-1, 1), D(1, 3), D(-1, 2), D(15, 7)], EXACT)
    series = accumulate(stream, [3])
    assert series.samples == [(3, math.pi * (1 - 2979 / 16384))]
    assert 2979 / 16384 == 1 / 64 + 2 / 16 + 3 * 225 / 16384


def test_all_zero_tail_gives_pi():
    stream = CoeffStream(np.array([-0.5] + [0.0] * 20), FLOAT)
    series = accumulate(stream, [0, 5, 20])
    assert [a for _, a in series.samples] == [math.pi] * 3
    assert series.max_abs_bm_tail == 0.0


def test_monotone_and_modes_agree(exact_300):
    _, ex = exact_300
    fl = CoeffStream(ex.floats(), FLOAT)
    points = list(range(0, 301, 7))
    a = accumulate(ex, points)
    b = accumulate(fl, points)
    values = [v for _, v in a.samples]
    assert all(x >= y for x, y in zip(values, values[1:]))
    assert max(abs(x - y) for (_, x), (_, y) in zip(a.samples, b.samples)) <= 1e-12
    assert a.max_abs_bm_tail == pytest.approx(b.max_abs_bm_tail, rel=1e-15)


def test_float_stream_monotone(float_10k):
    _, stream = float_10k
    series = accumulate(stream, range(0, 10_001, 50))
    values = [v for _, v in series.samples]
    assert all(x >= y for x, y in zip(values, values[1:]))
    assert values[-1] == pytest.approx(naive_area(stream, 10_000), abs=1e-13)


def test_summary_and_tail(float_10k):
    _, stream = float_10k
    series = accumulate(stream, [10_000])
    s = series.summary()
    assert s["N"] == 10_000 and s["mode"] == FLOAT
    tail = np.abs(stream.floats()[9000:10_001]).max()
    assert s["max_abs_bm_tail"] == tail


def test_compensated_beats_naive():
    # a long stream of mixed-size positive terms
    rng = random.Random(7)
    terms = [rng.random() * 10.0 ** rng.randint(-12, 0) for _ in range(1_000_000)]
    acc = CompensatedSum()
    naive = 0.0
    for t in terms:
        acc.add(t)
        naive += t
    exact = math.fsum(terms)
    assert abs(acc.value - exact) <= abs(exact) * 2**-52
    assert abs(acc.value - exact) <= abs(naive - exact)


def test_stream_too_short():
    stream = CoeffStream(np.zeros(5), FLOAT)
    with pytest.raises(AreaError):
        accumulate(stream, [5])
    with pytest.raises(AreaError):
        accumulate(stream, [-1])


def test_export_csv_and_json(tmp_path, exact_300):
    _, ex = exact_300
    series = accumulate(ex, [3, 100])
    export_series(series, tmp_path / "a.csv")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "N,A_N"
    assert lines[1] == f"3,{math.pi * (1 - 2979 / 16384):.10g}"
    export_series(series, tmp_path / "a.json")
    doc = json.loads((tmp_path / "a.json").read_text())
    assert doc["N"] == 100 and len(doc["series"]) == 2
    single = accumulate(ex, [3])
    assert len(single) == 1


def test_export_empty_series(tmp_path):
    series = accumulate(CoeffStream(np.zeros(1), FLOAT), [])
    with pytest.raises(AreaError):
        export_series(series, tmp_path / "a.csv")
    with pytest.raises(AreaError):
        export_series(accumulate(CoeffStream(np.zeros(3), FLOAT), [1]), tmp_path / "a.txt", fmt="xml")
