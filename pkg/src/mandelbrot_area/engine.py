"""Backward recursion for the coefficient table with column-batch scheduling.

Row ``n`` of the table holds the coefficients of ``z^(2^n - m)`` in the
expansion of the ``n``-th Faber polynomial composed with the exterior map.
Entries with ``n >= 1`` and ``1 <= m <= 2^(n+1) - 2`` are identically zero
and never stored; column 0 is identically one.  Every other ("nontrivial")
entry is produced by

    beta[n, m] = 1/2 * (beta[n+1, m] - conv(n, m) - beta[0, m - 2^(n+1) + 1])

where ``conv(n, m)`` sums ``beta[n, k] * beta[n, m-k]`` over the nontrivial
part of row ``n``.  The Laurent coefficients are ``b[m] = beta[0, m+1]``.

Two storage backends share one scheduler:

* float mode: a flat float64 array driven by compiled kernels;
* exact mode: arbitrary precision integers ``2^(2m) * beta[n, m]``.  Using the
  column-dependent scale ``2^(2m)`` makes every convolution product land on
  the same scale as the entry it feeds, so no shifting happens in the inner
  loop.  Values are handed out as normalized :class:`DyadicRational`.
"""

from __future__ import annotations

import operator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import gmpy2
import numpy as np

from . import _float_kernels as fk
from .arith import DyadicRational
from .combinatorics import sum_of_digits

FLOAT = "float"
EXACT = "exact"
MODES = (FLOAT, EXACT)

DEFAULT_EXACT_CAP = 4096

_BANDS = {"identity": fk.BAND_IDENTITY, "recursion": fk.BAND_RECURSION, "verify": fk.BAND_VERIFY}


class EngineError(Exception):
    pass


class DependencyError(EngineError):
    """A required table entry has not been computed yet."""


class PlanError(EngineError, ValueError):
    pass


class CertificateError(EngineError, ArithmeticError):
    """An exact entry has a larger denominator than the proven bound allows."""


class BandMismatchError(EngineError):
    pass


def row_start(n: int) -> int:
    """First nontrivial column of row ``n``."""
    return (1 << (n + 1)) - 1


def deepest_row(m: int) -> int:
    """Largest ``n`` with a nontrivial entry in column ``m`` (-1 for m = 0)."""
    return (m + 1).bit_length() - 2


@dataclass(frozen=True)
class BatchPlan:
    """Columns ``first_column .. first_column + width - 1`` processed together.

    Rows ``n >= row_threshold`` of these columns do not depend on each other
    as long as ``width <= 2^(row_threshold+1) - 1``.
    """

    first_column: int
    width: int
    row_threshold: int

    def __post_init__(self):
        check_plan(self.width, self.row_threshold)

    @property
    def columns(self) -> range:
        return range(self.first_column, self.first_column + self.width)


def check_plan(width: int, row_threshold: int) -> None:
    if width < 1:
        raise PlanError("batch width must be at least 1")
    if row_threshold < 0:
        raise PlanError("row threshold must be non-negative")
    if width > (1 << (row_threshold + 1)) - 1:
        raise PlanError(
            f"width {width} exceeds 2^({row_threshold}+1) - 1 = "
            f"{(1 << (row_threshold + 1)) - 1} independent columns"
        )


def min_threshold(width: int) -> int:
    """Smallest row threshold that admits ``width`` parallel columns."""
    n = 0
    while (1 << (n + 1)) - 1 < width:
        n += 1
    return n


def plan_batches(m_first: int, m_last: int, width: int, row_threshold: int) -> Iterator[BatchPlan]:
    check_plan(width, row_threshold)
    m = m_first
    while m <= m_last:
        yield BatchPlan(m, min(width, m_last - m + 1), row_threshold)
        m += width


# ---------------------------------------------------------------------------
# storage backends


class _FloatStore:
    mode = FLOAT

    def __init__(self):
        self.cap = 0
        self.nrows = 0
        self.off = np.zeros(1, dtype=np.int64)
        self.data = np.zeros(0, dtype=np.float64)

    def ensure(self, cap: int) -> None:
        if cap <= self.cap:
            return
        nrows = deepest_row(cap) + 1
        off = np.zeros(nrows + 1, dtype=np.int64)
        for n in range(nrows):
            off[n + 1] = off[n] + cap - row_start(n) + 1
        data = np.zeros(int(off[nrows]), dtype=np.float64)
        for n in range(self.nrows):
            length = self.cap - row_start(n) + 1
            data[off[n] : off[n] + length] = self.data[self.off[n] : self.off[n] + length]
        self.cap, self.nrows, self.off, self.data = cap, nrows, off, data

    def raw(self, n: int, m: int) -> float:
        return float(self.data[self.off[n] + m - row_start(n)])

    def set_raw(self, n: int, m: int, value: float) -> None:
        self.data[self.off[n] + m - row_start(n)] = value

    def public(self, n: int, m: int) -> float:
        return self.raw(n, m)

    def one(self):
        return 1.0

    def zero(self):
        return 0.0

    def convolution(self, n: int, m: int) -> float:
        return fk.convolution(self.data, self.off, n, m)

    def entry(self, n: int, m: int) -> float:
        return fk.entry(self.data, self.off, self.nrows, n, m)

    def fill_column(self, m: int, n_hi: int, n_lo: int, band: int) -> int:
        return fk.fill_column(self.data, self.off, self.nrows, m, n_hi, n_lo, band)

    def fill_columns(self, m0: int, m1: int, n_cap: int, band: int) -> int:
        return fk.fill_columns(self.data, self.off, self.nrows, m0, m1, n_cap, band)

    def row_values(self, n: int, upto: int) -> np.ndarray:
        length = max(0, upto - row_start(n) + 1)
        return self.data[self.off[n] : self.off[n] + length].copy()

    def b_values(self, count: int) -> np.ndarray:
        return self.data[self.off[0] : self.off[0] + count].copy() if count else np.zeros(0)


_ZERO = gmpy2.mpz(0)
_ONE = gmpy2.mpz(1)


class _ExactStore:
    """Entries kept as integers ``A[n][m] = 2^(2m) * beta[n, m]``."""

    mode = EXACT

    def __init__(self):
        self.cap = 0
        self.rows: list[list] = []

    def ensure(self, cap: int) -> None:
        if cap <= self.cap:
            return
        nrows = deepest_row(cap) + 1
        while len(self.rows) < nrows:
            self.rows.append([])
        for n, row in enumerate(self.rows):
            want = cap - row_start(n) + 1
            row.extend([None] * (want - len(row)))
        self.cap = cap

    def raw(self, n: int, m: int):
        return self.rows[n][m - row_start(n)]

    def set_raw(self, n: int, m: int, value) -> None:
        self.rows[n][m - row_start(n)] = gmpy2.mpz(value)

    def public(self, n: int, m: int) -> DyadicRational:
        return DyadicRational(int(self.raw(n, m)), 2 * m)

    def one(self):
        return DyadicRational(1)

    def zero(self):
        return DyadicRational(0)

    def _conv_scaled(self, n: int, m: int):
        s = row_start(n)
        if m < 2 * s:
            return _ZERO
        row = self.rows[n]
        hi = (m - 1) // 2 if m & 1 else m // 2 - 1
        if hi >= s:
            # pairs (k, m-k) for k = s..hi, ascending k
            acc = sum(map(operator.mul, row[0 : hi - s + 1], reversed(row[m - hi - s : m - 2 * s + 1])), _ZERO)
            acc = 2 * acc
        else:
            acc = _ZERO
        if not m & 1:
            x = row[m // 2 - s]
            acc = acc + x * x
        return acc

    def convolution(self, n: int, m: int) -> DyadicRational:
        return DyadicRational(int(self._conv_scaled(n, m)), 2 * m)

    def _b0_scaled(self, n: int, m: int):
        j = m - row_start(n)
        a = _ONE if j == 0 else self.rows[0][j - 1]
        return a << (2 * (m - j))

    def _entry_scaled(self, n: int, m: int):
        up = _ZERO
        if n + 1 < len(self.rows) and m >= row_start(n + 1):
            up = self.rows[n + 1][m - row_start(n + 1)]
        t = up - self._conv_scaled(n, m) - self._b0_scaled(n, m)
        if t & 1:
            raise CertificateError(f"entry ({n}, {m}) is not divisible after halving")
        return t >> 1

    def _band_scaled(self, n: int, m: int):
        return (_ZERO - self._b0_scaled(n, m)) >> 1

    def entry(self, n: int, m: int) -> DyadicRational:
        return DyadicRational(int(self._entry_scaled(n, m)), 2 * m)

    def _certify(self, n: int, m: int, a) -> None:
        # -nu(beta) <= p(n, m)  <=>  nu(A) >= 2^(n+2) - 4 + s(n, m)
        if a and gmpy2.bit_scan1(a) < (1 << (n + 2)) - 4 + sum_of_digits(n, m):
            raise CertificateError(f"entry ({n}, {m}) violates the exponent bound")

    def fill_column(self, m: int, n_hi: int, n_lo: int, band: int) -> int:
        bad = 0
        for n in range(n_hi, n_lo - 1, -1):
            s = row_start(n)
            if m <= 2 * s - 1 and band != fk.BAND_RECURSION:
                a = self._band_scaled(n, m)
                if band == fk.BAND_VERIFY and a != self._entry_scaled(n, m):
                    bad += 1
            else:
                a = self._entry_scaled(n, m)
            self._certify(n, m, a)
            self.rows[n][m - s] = a
        return bad

    def fill_columns(self, m0: int, m1: int, n_cap: int, band: int) -> int:
        bad = 0
        for m in range(m0, m1 + 1):
            bad += self.fill_column(m, min(deepest_row(m), n_cap), 0, band)
        return bad

    def row_values(self, n: int, upto: int) -> list[DyadicRational]:
        s = row_start(n)
        return [DyadicRational(int(a), 2 * (s + i)) for i, a in enumerate(self.rows[n][: max(0, upto - s + 1)])]

    def b_values(self, count: int) -> list[DyadicRational]:
        return [DyadicRational(int(a), 2 * (i + 1)) for i, a in enumerate(self.rows[0][:count])] if count else []


# ---------------------------------------------------------------------------


@dataclass
class CoeffStream:
    """Coefficients ``b[0], b[1], ...`` in order.

    ``values`` is a float64 array in float mode and a list of
    :class:`DyadicRational` in exact mode.
    """

    values: Sequence
    mode: str

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, m):
        return self.values[m]

    @property
    def count(self) -> int:
        return len(self.values)

    def floats(self) -> np.ndarray:
        if self.mode == FLOAT:
            return np.asarray(self.values, dtype=np.float64)
        return np.array([float(v) for v in self.values], dtype=np.float64)


class BetaTable:
    """Nontrivial entries of the coefficient table, computed column by column."""

    def __init__(self, mode: str = FLOAT, *, exact_cap: int | None = DEFAULT_EXACT_CAP, band: str = "identity"):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        if band not in _BANDS:
            raise ValueError(f"band must be one of {sorted(_BANDS)}")
        self.mode = mode
        self.exact_cap = exact_cap
        self.band = band
        self._store = _FloatStore() if mode == FLOAT else _ExactStore()
        self.m_done = 0
        # columns past m_done that are partially filled: column -> lowest row done
        self._partial: dict[int, int] = {}

    # -- bookkeeping ------------------------------------------------------
    @property
    def n_max(self) -> int:
        return deepest_row(self.m_done)

    def reserve(self, m: int) -> None:
        if self.mode == EXACT and self.exact_cap is not None and m > self.exact_cap:
            raise EngineError(
                f"exact mode is capped at m = {self.exact_cap}; pass exact_cap=None to lift the cap"
            )
        self._store.ensure(m)

    def is_trivial(self, n: int, m: int) -> bool:
        return m == 0 or m < row_start(n)

    def is_computed(self, n: int, m: int) -> bool:
        if self.is_trivial(n, m) or m <= self.m_done:
            return True
        return m in self._partial and n >= self._partial[m]

    def _require(self, n: int, m: int) -> None:
        if not self.is_computed(n, m):
            raise DependencyError(f"beta[{n}, {m}] has not been computed")

    def _advance(self) -> None:
        while self._partial.get(self.m_done + 1) == 0:
            del self._partial[self.m_done + 1]
            self.m_done += 1

    # -- access -------------------------------------------------------------
    def get(self, n: int, m: int):
        """Value of ``beta[n, m]``; trivial entries are answered by rule."""
        if n < 0 or m < 0:
            raise IndexError("negative index")
        if m == 0:
            return self._store.one()
        if m < row_start(n):
            return self._store.zero()
        self._require(n, m)
        return self._store.public(n, m)

    def b(self, m: int):
        return self.get(0, m + 1)

    def row(self, n: int):
        """Stored entries of row ``n`` for ``row_start(n) <= m <= m_done``."""
        return self._store.row_values(n, self.m_done)

    def scaled_row(self, n: int) -> list:
        """Exact mode only: integers ``2^(2m) * beta[n, m]`` for the stored part of row ``n``."""
        if self.mode != EXACT:
            raise EngineError("scaled rows exist only in exact mode")
        return self._store.rows[n][: max(0, self.m_done - row_start(n) + 1)]

    def stream(self, count: int | None = None) -> CoeffStream:
        count = self.m_done if count is None else count
        if count > self.m_done:
            raise DependencyError(f"only {self.m_done} coefficients are available")
        return CoeffStream(self._store.b_values(count), self.mode)

    def entries(self) -> Iterator[tuple[int, int, object]]:
        """All stored ``(n, m, value)`` for completed columns."""
        for m in range(1, self.m_done + 1):
            for n in range(deepest_row(m), -1, -1):
                yield n, m, self._store.public(n, m)

    # -- single-entry operations -------------------------------------------
    def _check_inputs(self, n: int, m: int, *, upstream: bool) -> None:
        if m < row_start(n):
            raise ValueError(f"beta[{n}, {m}] is trivial")
        s = row_start(n)
        if m >= 2 * s:
            # convolution reads row n up to column m - s
            self._require(n, m - s)
        self._require(0, m - s)
        if upstream and m >= row_start(n + 1):
            self._require(n + 1, m)

    def convolution(self, n: int, m: int):
        """Sum of ``beta[n,k] * beta[n,m-k]`` over the nontrivial range of ``k``.

        Evaluated with the symmetric half-sum in ascending ``k``; an empty
        range contributes zero.
        """
        self._check_inputs(n, m, upstream=False)
        self.reserve(m)
        return self._store.convolution(n, m)

    def compute_entry(self, n: int, m: int):
        """Evaluate the backward recursion for one entry (does not store it)."""
        self._check_inputs(n, m, upstream=True)
        self.reserve(m)
        return self._store.entry(n, m)

    def compute_column(self, m: int, row_floor: int = 0) -> None:
        """Fill column ``m`` from its deepest pending row down to ``row_floor``."""
        if m < 1:
            raise ValueError("column index must be positive")
        top = deepest_row(m)
        if m <= self.m_done:
            return
        start = self._partial.get(m, top + 1) - 1
        if row_floor > start:
            return
        for n in range(start, row_floor - 1, -1):
            self._check_inputs(n, m, upstream=False)
        self.reserve(m)
        bad = self._store.fill_column(m, start, row_floor, _BANDS[self.band])
        if bad:
            raise BandMismatchError(f"{bad} band entries of column {m} disagree with the recursion")
        self._partial[m] = row_floor
        self._advance()

    # -- restore helpers (checkpoint) -----------------------------------------
    def _load_rows(self, m_done: int, rows: list) -> None:
        self._store.ensure(m_done)
        for n, values in enumerate(rows):
            s = row_start(n)
            if self.mode == FLOAT:
                self._store.data[self._store.off[n] : self._store.off[n] + len(values)] = values
            else:
                for i, v in enumerate(values):
                    self._store.set_raw(n, s + i, v.scaled(2 * (s + i)))
        self.m_done = m_done
        self._partial.clear()


# ---------------------------------------------------------------------------


def run(
    table: BetaTable,
    m_target: int,
    *,
    width: int = 1,
    threshold: int | None = None,
    workers: int = 1,
    checkpoint: str | None = None,
    checkpoint_interval: int | None = None,
    progress: Callable[[int], None] | None = None,
) -> CoeffStream:
    """Compute every nontrivial entry with ``m <= m_target``.

    Columns are processed in batches of ``width``.  Inside a batch the rows
    ``n >= threshold`` of all columns run concurrently on ``workers``
    threads; each column only reads its own deeper rows and earlier batches,
    so one barrier per batch suffices.  Rows below the threshold are then
    finished column by column, left to right.  Results do not depend on
    ``width`` or ``workers``.

    Returns ``b[0] .. b[m_target - 1]``.
    """
    if m_target < 0:
        raise ValueError("m_target must be non-negative")
    if threshold is None:
        threshold = min_threshold(width)
    check_plan(width, threshold)
    if workers < 1:
        raise ValueError("workers must be at least 1")
    if m_target == 0:
        return CoeffStream(table._store.b_values(0), table.mode)

    # partially filled columns are recomputed from scratch
    table._partial.clear()
    if m_target > table.m_done:
        table.reserve(m_target)
    store = table._store
    band = _BANDS[table.band]
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 and width > 1 else None
    next_save = None
    if checkpoint and checkpoint_interval:
        next_save = table.m_done + checkpoint_interval
    try:
        for plan in plan_batches(table.m_done + 1, m_target, width, threshold):
            cols = [m for m in plan.columns if deepest_row(m) >= threshold]
            bad = 0
            if pool is not None and len(cols) > 1:
                futures = [pool.submit(store.fill_column, m, deepest_row(m), threshold, band) for m in cols]
                bad += sum(f.result() for f in futures)
            else:
                for m in cols:
                    bad += store.fill_column(m, deepest_row(m), threshold, band)
            bad += store.fill_columns(plan.first_column, plan.first_column + plan.width - 1, threshold - 1, band)
            if bad:
                raise BandMismatchError(f"{bad} band entries disagree with the recursion")
            table.m_done = plan.first_column + plan.width - 1
            if next_save is not None and table.m_done >= next_save:
                from .checkpoint import checkpoint_save

                checkpoint_save(table, checkpoint)
                next_save = table.m_done + checkpoint_interval
            if progress is not None:
                progress(table.m_done)
    finally:
        if pool is not None:
            pool.shutdown()
    if checkpoint:
        from .checkpoint import checkpoint_save

        checkpoint_save(table, checkpoint)
    return table.stream(m_target)


def compute_stream(m_target: int, mode: str = FLOAT, **kwargs) -> tuple[BetaTable, CoeffStream]:
    """Convenience: fresh table, run to ``m_target``."""
    table_kwargs = {k: kwargs.pop(k) for k in ("exact_cap", "band") if k in kwargs}
    table = BetaTable(mode, **table_kwargs)
    stream = run(table, m_target, **kwargs)
    return table, stream
