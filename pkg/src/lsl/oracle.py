"""Strategy-agnostic catch times by exact piecewise-linear intersection.

This module knows nothing about zigzag ledgers: a trajectory is just a
list of ``(t, x)`` vertices, and a catch is the earliest point where a
segment meets the target's world line ``x = (-1)**sigma * (d + v*t)``.
It is the independent route against which the closed-form engine is
validated.

All *decisions* (does this segment meet the line, is the crossing inside
the segment) are made with exact dyadic arithmetic: mpf values are
dyadic rationals, and with ``exact=True`` adds and multiplies the sign
of any polynomial in them is computed without rounding.  To keep the
denominator well-conditioned the world line is used in the multiplied-up
form ``u*x = (-1)**sigma * (u*d + (u-1)*t)``, so evasiveness values far
beyond ``2**bits`` (whose speed would round to exactly 1) still resolve
correctly.  Only the reported catch time and position are rounded.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Optional, TextIO, Union

import mpmath
from mpmath import mpf, workprec

from .errors import TrajectoryError
from .engine import Target
from .numerics import (
    DEFAULT_BITS,
    exact_add,
    exact_mul,
    exact_sub,
    render_real,
    require_bits,
    to_real,
)


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-linear path as time/position vertices.

    A valid trajectory starts at ``(0, 0)``, has strictly increasing
    times, and obeys the unit speed limit ``|dx| <= dt`` on every
    segment.  Construction does not validate (so malformed paths can be
    fed to :func:`verify_strategy_validity`); :func:`intersect` does.
    """

    vertices: tuple[tuple[mpf, mpf], ...]

    @property
    def segments(self) -> int:
        return max(0, len(self.vertices) - 1)

    @property
    def end_time(self) -> mpf:
        return self.vertices[-1][0]


@dataclass(frozen=True)
class Violation:
    segment_index: int
    kind: str  # "origin", "monotone-time", "speed-limit"
    detail: str


@dataclass(frozen=True)
class ValidityReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class CatchResult:
    """Earliest collocation of the path with a target's world line.

    ``time_num / time_den`` is the catch time as an exact dyadic ratio
    (``time_den > 0``); ``time`` is its rounded value and ``position``
    the world-line position at that time.
    """

    time: mpf
    segment_index: int
    position: mpf
    time_num: mpf
    time_den: mpf


def verify_strategy_validity(traj: Trajectory) -> ValidityReport:
    """Report structural violations; empty report means a valid strategy."""
    violations: list[Violation] = []
    if not traj.vertices:
        return ValidityReport((Violation(0, "origin", "no vertices"),))
    t0, x0 = traj.vertices[0]
    if t0 != 0 or x0 != 0:
        violations.append(
            Violation(0, "origin", f"first vertex must be (0, 0), got ({t0}, {x0})")
        )
    for j in range(len(traj.vertices) - 1):
        (ta, xa), (tb, xb) = traj.vertices[j], traj.vertices[j + 1]
        dt = exact_sub(tb, ta)
        dx = exact_sub(xb, xa)
        if dt <= 0:
            kind = "monotone-time"
            detail = "zero-duration segment" if dt == 0 else "time decreases"
            violations.append(Violation(j, kind, detail))
            continue
        if abs(dx) > dt:
            violations.append(
                Violation(j, "speed-limit", f"|dx| = {abs(dx)} exceeds dt = {dt}")
            )
    return ValidityReport(tuple(violations))


def intersect(
    traj: Trajectory,
    tgt: Target,
    bits: int = DEFAULT_BITS,
) -> Optional[CatchResult]:
    """Earliest catch of ``tgt`` along ``traj``, or ``None`` if the path
    ends before reaching the target (a horizon signal, not an error).

    A tangential touch at a vertex counts as a catch; a segment that is
    collinear with the world line catches at its start (infimum).
    Raises :class:`TrajectoryError` if the trajectory is invalid.
    """
    require_bits(bits)
    report = verify_strategy_validity(traj)
    if not report.ok:
        v = report.violations[0]
        raise TrajectoryError(
            f"invalid trajectory: {v.kind} at segment {v.segment_index} ({v.detail})"
        )

    sign = mpf(1) if tgt.side == 0 else mpf(-1)
    u = tgt.u
    d = tgt.d
    u_minus_1 = exact_sub(u, mpf(1))

    for j in range(len(traj.vertices) - 1):
        (ta, xa), (tb, xb) = traj.vertices[j], traj.vertices[j + 1]
        dt = exact_sub(tb, ta)
        dx = exact_sub(xb, xa)

        # world line multiplied by u:  u*x(t) = sign*(u*d + (u-1)*t)
        # segment multiplied by dt:    x(t)*dt = xa*dt + dx*(t - ta)
        # crossing:  t * (u*dx - sign*(u-1)*dt) = sign*u*d*dt - u*dt*xa + u*dx*ta
        den = exact_sub(exact_mul(u, dx), exact_mul(exact_mul(sign, u_minus_1), dt))
        if den == 0:
            # parallel; collinear iff the segment start lies on the line
            offset = exact_sub(
                exact_mul(u, xa),
                exact_mul(sign, exact_add(exact_mul(u, d), exact_mul(u_minus_1, ta))),
            )
            if offset == 0:
                return _result(ta, mpf(1), j, tgt, bits)
            continue

        num = exact_add(
            exact_sub(
                exact_mul(exact_mul(sign, u), exact_mul(d, dt)),
                exact_mul(exact_mul(u, dt), xa),
            ),
            exact_mul(exact_mul(u, dx), ta),
        )
        if den < 0:
            num, den = -num, -den
        # t* in [ta, tb]  <=>  num - ta*den >= 0  and  tb*den - num >= 0
        if exact_sub(num, exact_mul(ta, den)) >= 0 and exact_sub(
            exact_mul(tb, den), num
        ) >= 0:
            return _result(num, den, j, tgt, bits)
    return None


def _result(num: mpf, den: mpf, segment_index: int, tgt: Target, bits: int) -> CatchResult:
    sign = 1 if tgt.side == 0 else -1
    with workprec(bits):
        time = +mpmath.fdiv(num, den)
        position = +(sign * (tgt.d + (tgt.u - 1) / tgt.u * time))
    return CatchResult(
        time=time,
        segment_index=segment_index,
        position=position,
        time_num=num,
        time_den=den,
    )


def compare_catch_times(a: CatchResult, b: CatchResult) -> int:
    """Exact three-way comparison of two catch times (-1, 0, +1)."""
    diff = exact_sub(exact_mul(a.time_num, b.time_den), exact_mul(b.time_num, a.time_den))
    if diff < 0:
        return -1
    if diff > 0:
        return 1
    return 0


# --- CSV interchange --------------------------------------------------------

CSV_HEADER = ("t", "x")


def write_trajectory_csv(
    traj: Trajectory,
    dest: Union[str, TextIO],
    digits: int = 40,
) -> None:
    """Write vertices as ``t,x`` rows with ``digits`` significant digits."""
    close = False
    if isinstance(dest, str):
        handle: TextIO = open(dest, "w", newline="")
        close = True
    else:
        handle = dest
    try:
        writer = csv.writer(handle)
        writer.writerow(CSV_HEADER)
        for t, x in traj.vertices:
            writer.writerow((mpmath.nstr(t, digits), mpmath.nstr(x, digits)))
    finally:
        if close:
            handle.close()


def read_trajectory_csv(
    source: Union[str, TextIO],
    bits: int = DEFAULT_BITS,
) -> Trajectory:
    """Parse a ``t,x`` CSV back into a trajectory at ``bits`` precision.

    Values round-trip only to the exported digit count, so a re-imported
    path may carry hairline speed-limit violations; export with enough
    digits when validity matters downstream.
    """
    require_bits(bits)
    close = False
    if isinstance(source, str):
        handle: TextIO = open(source, "r", newline="")
        close = True
    else:
        handle = source
    try:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise TrajectoryError(f"expected header 't,x', got {header!r}")
        verts = []
        for row in reader:
            if not row:
                continue
            if len(row) != 2:
                raise TrajectoryError(f"malformed row {row!r}")
            verts.append((to_real(row[0], bits), to_real(row[1], bits)))
    finally:
        if close:
            handle.close()
    return Trajectory(vertices=tuple(verts))


def trajectory_csv_text(traj: Trajectory, digits: int = 40) -> str:
    buf = io.StringIO()
    write_trajectory_csv(traj, buf, digits)
    return buf.getvalue()
