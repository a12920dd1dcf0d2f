from fractions import Fraction

import numpy as np
import pytest

from mandelbrot_area.arith import DyadicRational as D
from mandelbrot_area.engine import (
    EXACT,
    FLOAT,
    BandMismatchError,
    BatchPlan,
    BetaTable,
    CertificateError,
    DependencyError,
    EngineError,
    PlanError,
    check_plan,
    compute_stream,
    deepest_row,
    min_threshold,
    plan_batches,
    row_start,
    run,
)
from mandelbrot_area.oracle import sequential_betas

B_FIRST = ["-1/2", "1/8", "-1/4", "15/128", "0", "-47/1024", "-1/16", "987/32768", "0"]
# continued with the Fraction reference recursion
B_NEXT = ["-3673/262144", "1/32", "-61029/4194304"]


def test_row_geometry():
    assert [row_start(n) for n in range(4)] == [1, 3, 7, 15]
    assert deepest_row(0) == -1
    assert [deepest_row(m) for m in (1, 2, 3, 6, 7, 14, 15)] == [0, 0, 1, 1, 2, 2, 3]


@pytest.mark.parametrize("mode", [EXACT, FLOAT])
def test_first_coefficients(mode):
    table = BetaTable(mode)
    stream = run(table, 12, width=4, threshold=2)
    want = [Fraction(v) for v in B_FIRST + B_NEXT]
    if mode == EXACT:
        assert [v.to_fraction() for v in stream] == want
    else:
        # every value is a short dyadic, so floats are exact too
        assert list(stream.floats()) == [float(v) for v in want]


def test_convolution_examples():
    table = BetaTable(EXACT)
    run(table, 8)
    assert table.convolution(1, 6) == D(1, 2)
    assert table.convolution(0, 2) == D(-1, 1) * D(-1, 1)
    assert table.convolution(1, 5) == D(0)  # empty range
    assert table.convolution(1, 7) == 2 * table.get(1, 3) * table.get(1, 4)


def test_compute_entry_examples():
    table = BetaTable(EXACT)
    run(table, 70)
    assert table.compute_entry(0, 1) == D(-1, 1)
    assert table.compute_entry(0, 4) == D(15, 7)
    for n in range(1, 4):
        assert table.compute_entry(n, 2 ** (n + 2)) == D(1, 4)
    for n in range(5):
        assert table.compute_entry(n, row_start(n)) == D(-1, 1)
    assert table.compute_entry(1, 7) == D(-47, 8)
    assert table.compute_entry(1, 8) == D(1, 4)


def test_trivial_entries_answered_by_rule():
    table = BetaTable(EXACT)
    assert table.get(3, 0) == D(1)
    assert table.get(3, 14) == D(0)
    with pytest.raises(ValueError):
        table.compute_entry(2, 6)


def test_compute_column_order():
    table = BetaTable(EXACT)
    table.compute_column(1)
    assert table.get(0, 1) == D(-1, 1) and table.m_done == 1
    table.compute_column(2)
    table.compute_column(3)
    assert table.get(1, 3) == D(-1, 1)
    assert table.get(0, 3) == D(-1, 2)
    for m in range(4, 8):
        table.compute_column(m)
    table.compute_column(8, row_floor=1)
    assert table.is_computed(2, 8) and table.is_computed(1, 8)
    assert not table.is_computed(0, 8)
    assert table.m_done == 7
    with pytest.raises(DependencyError):
        table.get(0, 8)
    table.compute_column(8)
    assert table.m_done == 8
    assert table.get(0, 8) == table.b(7) == D(987, 15)


def test_dependency_errors():
    table = BetaTable(EXACT)
    with pytest.raises(DependencyError):
        table.compute_column(3)
    with pytest.raises(DependencyError):
        table.compute_entry(0, 2)
    with pytest.raises(DependencyError):
        table.stream(1)


def test_matches_fraction_reference(exact_300):
    table, _ = exact_300
    ref = sequential_betas(300)
    for (n, m), v in ref.items():
        assert table.get(n, m).to_fraction() == v


@pytest.mark.parametrize("width,threshold", [(1, 0), (3, 1), (4, 2), (7, 2), (15, 3)])
def test_schedule_does_not_change_exact_values(width, threshold, exact_300):
    _, ref = exact_300
    _, got = compute_stream(301, EXACT, width=width, threshold=threshold, workers=2)
    assert list(got) == list(ref)


@pytest.mark.parametrize("width,threshold,workers", [(1, 0, 1), (3, 1, 3), (4, 2, 4), (4, 3, 2), (15, 3, 4)])
def test_schedule_does_not_change_float_bits(width, threshold, workers, float_10k):
    _, ref = float_10k
    _, got = compute_stream(10_001, FLOAT, width=width, threshold=threshold, workers=workers)
    assert np.array_equal(got.floats().view(np.int64), ref.floats().view(np.int64))


def test_float_equals_exact_rounding_early(exact_300, float_10k):
    # the first few hundred values are close to the rounded exact values
    _, ex = exact_300
    _, fl = float_10k
    err = max(abs(float(ex[m]) - fl[m]) for m in range(300))
    assert err < 1e-15


def test_m_target_zero():
    table = BetaTable(FLOAT)
    assert len(run(table, 0)) == 0
    assert table.m_done == 0


def test_resume_in_memory():
    table = BetaTable(FLOAT)
    run(table, 500, width=4, threshold=2)
    run(table, 1200, width=3, threshold=1)
    _, ref = compute_stream(1200, FLOAT)
    assert np.array_equal(table.stream().floats(), ref.floats())


def test_run_stops_at_target_column():
    table = BetaTable(FLOAT)
    run(table, 10, width=4, threshold=2)
    assert table.m_done == 10


def test_plan_validation():
    check_plan(1, 0)
    check_plan(3, 1)
    check_plan(7, 2)
    for width, threshold in [(8, 2), (4, 1), (2, 0), (0, 3)]:
        with pytest.raises(PlanError):
            check_plan(width, threshold)
    with pytest.raises(PlanError):
        BatchPlan(1, 8, 2)
    with pytest.raises(PlanError):
        run(BetaTable(), 10, width=8, threshold=2)
    assert [min_threshold(w) for w in (1, 2, 3, 4, 7, 8)] == [0, 1, 1, 2, 2, 3]


def test_plan_batches_cover_range():
    plans = list(plan_batches(5, 17, 4, 2))
    assert [p.first_column for p in plans] == [5, 9, 13, 17]
    assert plans[-1].width == 1
    assert [m for p in plans for m in p.columns] == list(range(5, 18))


def test_exact_cap():
    table = BetaTable(EXACT, exact_cap=50)
    with pytest.raises(EngineError):
        run(table, 51)
    run(BetaTable(EXACT, exact_cap=None), 60)


@pytest.mark.parametrize("band", ["recursion", "verify"])
def test_band_modes_agree(band, float_10k):
    _, ref = float_10k
    _, got = compute_stream(10_001, FLOAT, band=band)
    assert np.array_equal(got.floats().view(np.int64), ref.floats().view(np.int64))
    _, ex = compute_stream(200, EXACT, band=band)
    assert list(ex) == list(compute_stream(200, EXACT)[1])


def test_band_shortcut_is_the_recursion_in_the_band():
    # inside the band the convolution range is empty and the upstream entry is
    # zero, so the shortcut and the recursion are the same arithmetic
    table = BetaTable(EXACT)
    run(table, 40)
    for n in range(1, 5):
        for m in range(row_start(n), min(2 * row_start(n), 41)):
            assert table.convolution(n, m) == D(0)
            assert table.compute_entry(n, m) == D(-1, 1) * table.get(0, m - row_start(n))


def test_band_verify_reports_disagreement(monkeypatch):
    table = BetaTable(EXACT, band="verify")
    run(table, 20)
    store = table._store
    monkeypatch.setattr(store, "_band_scaled", lambda n, m: type(store)._band_scaled(store, n, m) + (1 << (2 * m)))
    with pytest.raises(BandMismatchError):
        run(table, 40)


def test_certificate_failure_is_reported():
    table = BetaTable(EXACT)
    run(table, 10)
    # perturb beta[0, 7] by 2^-14; the next column inherits a too-large denominator
    table._store.set_raw(0, 7, table._store.raw(0, 7) + 1)
    with pytest.raises(CertificateError):
        run(table, 11)


def test_entries_and_rows(exact_300):
    table, _ = exact_300
    count = sum(1 for _ in table.entries())
    m = table.m_done
    assert count == sum(m - row_start(n) + 1 for n in range(deepest_row(m) + 1))
    assert table.row(0)[:3] == [D(-1, 1), D(1, 3), D(-1, 2)]
    assert table.scaled_row(0)[:2] == [-2, 2]
    with pytest.raises(EngineError):
        BetaTable(FLOAT).scaled_row(0)


def test_bad_arguments():
    with pytest.raises(ValueError):
        BetaTable("decimal")
    with pytest.raises(ValueError):
        BetaTable(FLOAT, band="nope")
    with pytest.raises(ValueError):
        run(BetaTable(), -1)
    with pytest.raises(ValueError):
        run(BetaTable(), 5, workers=0)
