"""Independent checks on computed coefficients.

All reference arithmetic here is exact (``Fraction`` or
:class:`DyadicRational`); float values only ever appear as the thing being
audited.
"""

from __future__ import annotations

import json
import math
import operator
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .arith import BigRational
from .combinatorics import factorial_valuation, p_bound, sum_of_digits, two_adic_valuation
from .engine import EXACT, FLOAT, BetaTable, CoeffStream, deepest_row, row_start, run

ZERO_TOL = 1e-14
SPOT_VALUE_TOL = 1e-13

# reference b_m values (about 8 digits) at positions without a closed form
SPOT_VALUES = {
    500_000: 5.5221313e-8,
    1_000_000: -4.713883e-8,
    1_500_000: 8.4477641e-8,
    2_000_000: -6.437866e-9,
    2_500_000: 1.6594295e-8,
    3_000_000: 8.150385e-9,
    3_500_000: -3.911993e-9,
    4_000_000: 2.315128e-9,
    4_500_000: -8.87746e-9,
    5_000_000: 8.0532e-11,
}


class OracleError(ValueError):
    pass


# ---------------------------------------------------------------------------
# reports


@dataclass
class CheckRecord:
    name: str
    range_tested: str
    worst_deviation: float
    passed: bool
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name} ({self.range_tested}) worst deviation {self.worst_deviation:.3g}"


@dataclass
class ValidationReport:
    records: list[CheckRecord] = field(default_factory=list)

    def add(self, record: CheckRecord) -> CheckRecord:
        self.records.append(record)
        return record

    @property
    def verdict(self) -> bool:
        return all(r.passed for r in self.records)

    def to_dict(self) -> dict:
        return {"verdict": "pass" if self.verdict else "fail", "checks": [asdict(r) for r in self.records]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), default=_jsonable, **kw)


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    return str(x)


def _exact(stream: CoeffStream, what: str) -> None:
    if stream.mode != EXACT:
        raise OracleError(f"{what} needs an exact-mode stream")


def _need(stream: CoeffStream, limit: int) -> None:
    if limit >= len(stream):
        raise OracleError(f"stream holds b_0..b_{len(stream) - 1}, check needs b_{limit}")


def _dev(value) -> float:
    """Magnitude of a deviation as a float (inf if it does not fit)."""
    try:
        return abs(float(value))
    except OverflowError:
        return math.inf


# ---------------------------------------------------------------------------
# zero families


def known_zero_indices(limit: int) -> list[int]:
    """All ``m <= limit`` of the form ``(2k+1) 2^v`` with ``k + 3 <= 2^v``.

    Powers of two ``2^(n+1)``, ``n >= 1``, are the ``k = 0`` members.
    """
    out = set()
    v = 2
    while (1 << v) <= limit:
        k = 0
        while k + 3 <= (1 << v) and (2 * k + 1) << v <= limit:
            out.add((2 * k + 1) << v)
            k += 1
        v += 1
    return sorted(out)


def known_zero_check(stream: CoeffStream, limit: int) -> CheckRecord:
    _need(stream, limit)
    idx = known_zero_indices(limit)
    worst = 0.0
    bad = []
    for m in idx:
        b = stream[m]
        if stream.mode == EXACT:
            ok = b == 0
            dev = _dev(b)
        else:
            dev = abs(float(b))
            ok = dev <= ZERO_TOL
        worst = max(worst, dev)
        if not ok:
            bad.append(m)
    tol = "exact" if stream.mode == EXACT else f"|b_m| <= {ZERO_TOL:g}"
    return CheckRecord(
        "known_zeros", f"m <= {limit}, {len(idx)} indices, {tol}", worst, not bad, {"failures": bad[:50]}
    )


# ---------------------------------------------------------------------------
# closed forms


def gen_binomial(x: Fraction, k: int) -> Fraction:
    """``x (x-1) ... (x-k+1) / k!`` for rational ``x``."""
    if k < 0:
        return Fraction(0)
    r = Fraction(1)
    for i in range(k):
        r *= x - i
    return r / math.factorial(k)


def closed_form_family(m: int, printed: bool = False) -> tuple[int, int] | None:
    """``(case, v)`` if ``m`` belongs to one of the three closed-form families."""
    if m < 1:
        return None
    v = (m & -m).bit_length() - 1
    q = m >> v
    base = (1 << v) if printed else (1 << (v + 1))
    if q == base - 1 and v >= 1:
        return 1, v
    if q == base + 1 and v >= 2:
        return 2, v
    if q == base + 3 and v >= 2:
        return 3, v
    return None


def closed_form_bm(m: int, printed: bool = False) -> BigRational:
    """Exact ``b_m`` from the closed forms at three index families.

    Families (``P = 2^v``): ``m = (2P - 1) P``, ``m = (2P + 1) P`` and
    ``m = (2P + 3) P``.  With ``printed=True`` the index families and the
    second-case denominator are taken as ``(P - 1) P`` etc. and ``(P - 5)``.
    That variant disagrees with the recursion and is kept only so the
    disagreement can be reported.
    """
    fam = closed_form_family(m, printed)
    if fam is None:
        raise OracleError(f"m = {m} is not covered by a closed form")
    case, v = fam
    P = 1 << v
    if case == 1:
        return Fraction(-1, (1 << (v + 3)) * (P - 1)) * gen_binomial(Fraction(2 * P - 5, 2), P - 2)
    if case == 2:
        d = (P - 5) if printed else (2 * P - 5)
        return Fraction(3 * (P - 6), (1 << (v + 5)) * (P + 1) * d) * gen_binomial(Fraction(2 * P - 3, 2), P - 1)
    poly = 214 * P**3 - 767 * P**2 + 146 * P + 452
    den = (1 << (v + 8)) * (2 * P - 7) * (P * P - 1) * (P + 2)
    return Fraction(-poly, den) * gen_binomial(Fraction(2 * P - 5, 2), P - 2)


def closed_form_indices(limit: int, printed: bool = False) -> list[int]:
    return [m for m in range(1, limit + 1) if closed_form_family(m, printed) is not None]


def closed_form_check(stream: CoeffStream, limit: int) -> CheckRecord:
    """Compare against the closed forms; exact streams must match exactly."""
    _need(stream, limit)
    worst = 0.0
    bad = []
    idx = closed_form_indices(limit)
    for m in idx:
        ref = closed_form_bm(m)
        got = stream[m]
        if stream.mode == EXACT:
            diff = got.to_fraction() - ref
            ok = diff == 0
        else:
            diff = float(got) - float(ref)
            ok = abs(diff) <= ZERO_TOL
        worst = max(worst, _dev(diff))
        if not ok:
            bad.append(m)
    printed_mismatch = []
    if stream.mode == EXACT:
        for m in closed_form_indices(limit, printed=True):
            if closed_form_bm(m, printed=True) != stream[m].to_fraction():
                printed_mismatch.append(m)
    return CheckRecord(
        "closed_forms",
        f"m <= {limit}, indices {idx}",
        worst,
        not bad,
        {"failures": bad, "printed_variant_mismatches": printed_mismatch},
    )


# ---------------------------------------------------------------------------
# valuations


def valuation_check(stream: CoeffStream, limit: int) -> CheckRecord:
    """Denominator bounds for ``b_m``, ``0 <= m <= limit``.

    * ``-v(b_m) <= v((2m+2)!)`` with equality exactly for odd ``m`` (and
      ``m = 0``), strict for every other ``m``;
    * the digit-sum form ``2(m+1) - s(0, m+1)`` equals ``v((2m+2)!)``;
    * the coarser bound ``-v(b_m) <= 2(m+1) - 1``.
    """
    _exact(stream, "valuation_check")
    _need(stream, limit)
    failures = []
    slack_min = math.inf
    for m in range(limit + 1):
        nu = two_adic_valuation(stream[m])
        neg = -nu
        fact = factorial_valuation(2 * m + 2)
        digit = 2 * (m + 1) - sum_of_digits(0, m + 1)
        if digit != fact:
            failures.append((m, "digit-sum form differs from factorial valuation"))
        if neg > fact:
            failures.append((m, "factorial bound"))
        if neg > 2 * m + 1:
            failures.append((m, "coarse bound"))
        if m % 2 == 1 or m == 0:
            if neg != fact:
                failures.append((m, "equality expected"))
        elif neg == fact:
            failures.append((m, "strict inequality expected"))
        if neg != -math.inf:
            slack_min = min(slack_min, fact - neg)
    return CheckRecord(
        "valuations_b",
        f"0 <= m <= {limit}",
        0.0 if not failures else float(len(failures)),
        not failures,
        {"failures": failures[:50], "min_slack": slack_min},
    )


def beta_valuation_check(table: BetaTable) -> CheckRecord:
    """Denominator bounds for every stored entry of an exact table."""
    if table.mode != EXACT:
        raise OracleError("beta_valuation_check needs an exact table")
    failures = []
    band_entries = 0
    edge_failures = 0
    entries = 0
    for n, m, v in table.entries():
        entries += 1
        p = p_bound(n, m)
        # p <= 2m + 3 - 2^(n+2)  <=>  s(n, m) >= 1
        if sum_of_digits(n, m) < 1:
            failures.append((n, m, "digit bound does not imply the coarse bound"))
        if not v:
            continue
        neg = -two_adic_valuation(v)
        if neg > p:
            failures.append((n, m, "digit-sum exponent bound"))
        if neg > 2 * m + 3 - (1 << (n + 2)):
            failures.append((n, m, "coarse exponent bound"))
        if n >= 1:
            cor = 2 * m + 2 - (1 << (n + 2))
            if (1 << (n + 1)) <= m <= (1 << (n + 2)) - 3:
                band_entries += 1
                if neg > cor:
                    failures.append((n, m, "band exponent bound"))
            elif m == row_start(n):
                if neg > cor:
                    edge_failures += 1
                else:
                    failures.append((n, m, "band bound unexpectedly holds at the band edge"))
    rows_with_edge = sum(1 for n in range(1, table.n_max + 1))
    if edge_failures != rows_with_edge:
        failures.append((-1, -1, "edge failures not confirmed on every row"))
    return CheckRecord(
        "valuations_beta",
        f"{entries} entries, m <= {table.m_done}",
        float(len(failures)),
        not failures,
        {"failures": failures[:50], "band_entries": band_entries, "edge_failures_confirmed": edge_failures},
    )


# ---------------------------------------------------------------------------
# structural identities


def identity_check(table: BetaTable, shift_depth: int = 3) -> CheckRecord:
    """Band identity and its diagonal shift, and the special values near the band."""
    t = table
    half = Fraction(1, 2) if t.mode == EXACT else 0.5
    quarter = Fraction(1, 4) if t.mode == EXACT else 0.25

    def g(n, m):
        v = t.get(n, m)
        return v.to_fraction() if t.mode == EXACT else v

    fails = []
    counts = dict(band=0, shift=0, pair=0, const=0, a=0, b=0, c=0)
    M = t.m_done
    for n in range(0, t.n_max + 1):
        s = row_start(n)
        for m in range(s, min(2 * s - 1, M) + 1):
            counts["band"] += 1
            if g(n, m) != -half * g(0, m - s):
                fails.append(("band", n, m))
            for p in range(1, shift_depth + 1):
                m2 = m + (s + 1) * ((1 << p) - 1)
                if m2 > M:
                    break
                counts["shift"] += 1
                if g(n, m) != g(n + p, m2):
                    fails.append(("shift", n, m, p))
        if 2 * s + 1 <= M:
            counts["pair"] += 1
            if g(n, 2 * s) != -half * (g(0, s) + quarter):
                fails.append(("pair-even", n))
            # the odd-column identity needs beta[n, 2^(n+1)] inside the band, so n >= 1
            if n >= 1 and g(n, 2 * s + 1) != -half * (g(0, s + 1) + quarter):
                fails.append(("pair-odd", n))
        top = 1 << (n + 2)
        if n >= 1 and top <= M:
            counts["const"] += 1
            if g(n, top) != quarter * quarter:
                fails.append(("const", n))
        for key, off, nmin in (("a", 2, 2), ("b", 4, 2), ("c", 6, 3)):
            if n >= nmin and top + off <= M:
                counts[key] += 1
                if g(n, top + off) != -half * g(0, (1 << (n + 1)) + off + 1):
                    fails.append((key, n))
    return CheckRecord(
        "identities", f"m <= {M}, {counts}", float(len(fails)), not fails, {"failures": fails[:50], "counts": counts}
    )


def roundtrip_check(table: BetaTable, limit: int | None = None) -> CheckRecord:
    """``beta[n+1,m] = 2 beta[n,m] + conv + beta[0, m-2^(n+1)+1]`` on every entry.

    Exact tables re-sum the convolution over its full (unfolded) index
    range, which also cross-checks the folded half-sum used by the engine,
    and must match exactly.  Float tables use the engine's convolution and
    must match within 4 ulps of the largest term involved.
    """
    M = table.m_done if limit is None else min(limit, table.m_done)
    worst = 0.0
    fails = []
    count = 0
    if table.mode == EXACT:
        rows = [table.scaled_row(n) for n in range(deepest_row(M) + 1)]
        for m in range(1, M + 1):
            for n in range(deepest_row(m), -1, -1):
                s = row_start(n)
                row = rows[n]
                a = row[m - s]
                conv = sum(map(operator.mul, row[0 : m - 2 * s + 1], reversed(row[0 : m - 2 * s + 1])), 0) if m >= 2 * s else 0
                j = m - s
                b0 = (1 if j == 0 else rows[0][j - 1]) << (2 * (m - j))
                up = rows[n + 1][m - row_start(n + 1)] if n + 1 < len(rows) and m >= row_start(n + 1) else 0
                count += 1
                if up != 2 * a + conv + b0:
                    fails.append((n, m))
        return CheckRecord("roundtrip", f"{count} entries, m <= {M}, exact", float(len(fails)), not fails, {"failures": fails[:50]})
    for m in range(1, M + 1):
        for n in range(deepest_row(m), -1, -1):
            a = table.get(n, m)
            conv = table.convolution(n, m)
            b0 = table.get(0, m - row_start(n))
            up = table.get(n + 1, m)
            scale = max(abs(up), 2 * abs(a), abs(conv), abs(b0))
            dev = abs(up - ((2 * a + conv) + b0))
            count += 1
            if scale:
                worst = max(worst, dev / math.ulp(scale))
            if dev > 4 * math.ulp(scale):
                fails.append((n, m))
    return CheckRecord(
        "roundtrip", f"{count} entries, m <= {M}, float (worst in ulps)", worst, not fails, {"failures": fails[:50]}
    )


# ---------------------------------------------------------------------------
# sequential reference


def sequential_betas(m_target: int) -> dict[tuple[int, int], Fraction]:
    """Plain one-entry-at-a-time recursion in ``Fraction`` arithmetic.

    Deliberately naive: full (unfolded) convolution sums, dictionary storage,
    no scheduling.  Returns every nontrivial entry with ``m <= m_target``.
    """
    B: dict[tuple[int, int], Fraction] = {}

    def get(n, m):
        if m == 0:
            return Fraction(1)
        if n >= 1 and m <= (1 << (n + 1)) - 2:
            return Fraction(0)
        return B[(n, m)]

    for m in range(1, m_target + 1):
        n = 0
        while (1 << (n + 2)) - 1 <= m:
            n += 1
        for n in range(n, -1, -1):
            s = (1 << (n + 1)) - 1
            conv = sum((get(n, k) * get(n, m - k) for k in range(s, m - s + 1)), Fraction(0))
            B[(n, m)] = (get(n + 1, m) - conv - get(0, m - s)) / 2
    return B


def sequential_check(table: BetaTable, limit: int = 256) -> CheckRecord:
    if table.mode != EXACT:
        raise OracleError("sequential_check needs an exact table")
    limit = min(limit, table.m_done)
    ref = sequential_betas(limit)
    fails = [(n, m) for (n, m), v in ref.items() if table.get(n, m).to_fraction() != v]
    return CheckRecord("sequential", f"{len(ref)} entries, m <= {limit}", float(len(fails)), not fails, {"failures": fails[:50]})


# ---------------------------------------------------------------------------
# contour integral


class FaberPolynomial:
    """``p_0(w) = w``, ``p_n(w) = p_{n-1}(w)^2 + w`` with integer coefficients.

    ``coeffs[i]`` is the coefficient of ``w**i``.
    """

    def __init__(self, n: int):
        if n < 0:
            raise ValueError("degree index must be non-negative")
        c = [0, 1]
        for _ in range(n):
            sq = [0] * (2 * len(c) - 1)
            for i, a in enumerate(c):
                if a:
                    for j, b in enumerate(c):
                        sq[i + j] += a * b
            sq[1] += 1
            c = sq
        self.n = n
        self.coeffs = c

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, w):
        acc = 0
        for a in reversed(self.coeffs):
            acc = acc * w + a
        return acc


class TruncationError(OracleError):
    pass


def _series_power_coeff(r: list[int], alpha: Fraction, degree: int, order: int) -> Fraction:
    """Coefficient of ``u**degree`` in ``sum_{k<=order} C(alpha,k) r(u)^k``, r(0) = 0."""
    total = Fraction(0)
    power = [1] + [0] * degree  # r^0
    for k in range(0, order + 1):
        if k > 0:
            nxt = [0] * (degree + 1)
            for i, a in enumerate(power):
                if a:
                    for j in range(1, min(len(r), degree + 1 - i)):
                        if r[j]:
                            nxt[i + j] += a * r[j]
            power = nxt
        if power[degree]:
            total += gen_binomial(alpha, k) * power[degree]
    return total


def contour_bm(m: int, n: int | None = None, order: int | None = None) -> BigRational:
    """``b_m`` from the residue of ``p_n(z)^(m / 2^n)``, exactly.

    Write ``p_n(z) = z^(2^n) (1 + r(1/z))``; then ``b_m = -(1/m)`` times the
    coefficient of ``u^(m+1)`` in ``(1 + r(u))^(m / 2^n)``.  The binomial
    series is cut at ``order`` terms (default ``m + 1``, which is exact since
    ``r`` has no constant term) and re-evaluated with one more term; a change
    means the cut was too early.
    """
    if m < 1:
        raise OracleError("contour formula needs m >= 1")
    if n is None:
        n = 1
        while m > (1 << (n + 1)) - 3:
            n += 1
    if m > (1 << (n + 1)) - 3:
        raise OracleError(f"m = {m} needs m <= 2^(n+1) - 3 = {(1 << (n + 1)) - 3}")
    order = m + 1 if order is None else order
    p = FaberPolynomial(n).coeffs
    d = len(p) - 1
    r = [0] + [p[d - i] for i in range(1, d + 1)]
    alpha = Fraction(m, 1 << n)
    c = _series_power_coeff(r, alpha, m + 1, order)
    if _series_power_coeff(r, alpha, m + 1, order + 1) != c:
        raise TruncationError(f"series order {order} is not enough for m = {m}")
    return -c / m


def contour_check(stream: CoeffStream, limit: int = 29, n: int = 4) -> CheckRecord:
    _exact(stream, "contour_check")
    _need(stream, limit)
    fails = []
    worst = 0.0
    for m in range(1, limit + 1):
        ref = contour_bm(m, n)
        diff = stream[m].to_fraction() - ref
        worst = max(worst, _dev(diff))
        if diff:
            fails.append(m)
    return CheckRecord("contour", f"1 <= m <= {limit}, n = {n}", worst, not fails, {"failures": fails})


# ---------------------------------------------------------------------------
# float audit


def float_error_audit(
    limit: int, float_table: BetaTable | None = None, exact_table: BetaTable | None = None, tol: float = 1e-13
) -> CheckRecord:
    """Float recursion against exact recursion up to column ``limit``.

    Reports the largest coefficient error, the largest entrywise error, and
    per-row sums of ``|beta[n, k]|`` (computed from the exact table).
    """
    if float_table is None:
        float_table = BetaTable(FLOAT)
        run(float_table, limit)
    if exact_table is None:
        exact_table = BetaTable(EXACT)
        run(exact_table, limit)
    if float_table.m_done < limit or exact_table.m_done < limit:
        raise OracleError("tables do not reach the audit limit")
    coeff_err = 0.0
    for m in range(limit):
        coeff_err = max(coeff_err, abs(float_table.b(m) - float(exact_table.b(m).to_fraction())))
    entry_err = 0.0
    row_sums = []
    for n in range(deepest_row(limit) + 1):
        fl = float_table.row(n)
        ex = exact_table.row(n)
        k = limit - row_start(n) + 1
        row_sums.append(float(sum(abs(v.to_fraction()) for v in ex[:k])))
        for a, b in zip(fl[:k], ex[:k]):
            entry_err = max(entry_err, abs(float(a) - float(b.to_fraction())))
    finite = all(math.isfinite(x) for x in row_sums)
    return CheckRecord(
        "float_audit",
        f"m <= {limit}",
        coeff_err,
        coeff_err <= tol and finite,
        {"max_coeff_error": coeff_err, "max_entry_error": entry_err, "row_abs_sums": row_sums, "tolerance": tol},
    )


def table3_spot_check(stream: CoeffStream, positions: Iterable[int] | None = None) -> CheckRecord:
    if positions is None:
        positions = [m for m in SPOT_VALUES if m < len(stream)]
    positions = list(positions)
    for m in positions:
        if m not in SPOT_VALUES:
            raise OracleError(f"no reference value at m = {m}")
        _need(stream, m)
    worst = 0.0
    fails = []
    for m in positions:
        dev = abs(float(stream[m]) - SPOT_VALUES[m])
        worst = max(worst, dev)
        if dev > SPOT_VALUE_TOL:
            fails.append(m)
    return CheckRecord(
        "spot_values", f"positions {positions}", worst, not fails, {"failures": fails, "tolerance": SPOT_VALUE_TOL}
    )


# ---------------------------------------------------------------------------


CHECKS = ("zeros", "closed_forms", "valuations", "beta_valuations", "identities", "roundtrip", "sequential", "contour", "audit", "spot_values")


def run_suite(
    checks: Sequence[str] = CHECKS,
    *,
    limit: int = 1023,
    stream: CoeffStream | None = None,
    table: BetaTable | None = None,
    float_table: BetaTable | None = None,
) -> ValidationReport:
    """Run the selected checks.

    With no ``stream``/``table`` an exact table is computed to ``limit + 1``.
    Table-based checks are skipped (not failed) when only a stream is given.
    """
    unknown = set(checks) - set(CHECKS)
    if unknown:
        raise OracleError(f"unknown checks {sorted(unknown)}")
    if stream is None:
        if table is None:
            table = BetaTable(EXACT)
            run(table, limit + 1)
        stream = table.stream()
    report = ValidationReport()
    lim = min(limit, len(stream) - 1)
    exact = stream.mode == EXACT
    for name in checks:
        if name == "zeros":
            report.add(known_zero_check(stream, lim))
        elif name == "closed_forms":
            report.add(closed_form_check(stream, lim))
        elif name == "valuations" and exact:
            report.add(valuation_check(stream, lim))
        elif name == "contour" and exact:
            report.add(contour_check(stream, min(29, lim)))
        elif name == "spot_values":
            pos = [m for m in SPOT_VALUES if m <= lim]
            if pos:
                report.add(table3_spot_check(stream, pos))
        elif table is not None:
            if name == "beta_valuations" and table.mode == EXACT:
                report.add(beta_valuation_check(table))
            elif name == "identities":
                report.add(identity_check(table))
            elif name == "roundtrip":
                report.add(roundtrip_check(table))
            elif name == "sequential" and table.mode == EXACT:
                report.add(sequential_check(table, min(256, table.m_done)))
            elif name == "audit" and table.mode == EXACT:
                report.add(float_error_audit(min(1024, table.m_done), float_table, table))
    return report
