"""Closed-form analysis of alternating-sweep (zigzag) search strategies.

A zigzag strategy is described by an evasiveness schedule ``i -> u_i``:
on round ``i`` the searcher runs from the origin to ``(-1)**i * x_i``
and back, where ``x_i`` is exactly the distance needed to catch a target
of evasiveness ``u_i`` that started at distance ``d``.  Everything the
analysis needs flows from the per-round ledger

    x_i = u_i*d + (2*u_i - 2)*s_{i-1},      s_i = x_i + s_{i-1},

with ``s_{-1} = 0``, equivalently ``s_i = u_i*d + (2*u_i - 1)*s_{i-1}``.
A target of evasiveness ``u`` on side ``sigma`` is caught on the first
round ``k`` of matching parity with ``u_k >= u``, at time

    T = u*d + 2*u*s_{k-1},

giving the per-side ratio ``T / (u*d) = 1 + (2/d)*s_{k-1}`` against the
offline optimum ``u*d``.

Ledger quantities explode doubly-exponentially (``log2 s_i`` grows like
``3 * 2**(i+1) * sqrt(i+1)``), so a ``Log2Real`` mirror of ``s`` is kept
alongside the linear values; consumers that only need magnitudes work
entirely in the log domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import mpmath
from mpmath import mpf, workprec

from .errors import DomainError, HorizonExhausted, SequenceError
from .numerics import (
    DEFAULT_BITS,
    Log2Real,
    RealLike,
    exact_add,
    log2,
    log2_two_u_minus_1,
    log_sum,
    pow2,
    require_bits,
    to_real,
)

#: default number of rounds explored when scanning for a catch; beyond
#: i ~ 24 the schedule exponents exceed 2e8 and consumers should stay in
#: the log domain anyway
DEFAULT_HORIZON = 24


@dataclass(frozen=True)
class Target:
    """An escaping target: evasiveness ``u >= 1``, start distance, side.

    ``side`` 0 is the positive half-line, 1 the negative one.  The speed
    is derived: ``v = 1 - 1/u``, so ``u = 1`` is a stationary target and
    ``u -> oo`` approaches the searcher's own speed.  ``d > 0`` is
    accepted here; the ledger operations additionally require ``d >= 1``
    while the geometric oracle tolerates any positive distance.
    """

    u: mpf
    d: mpf
    side: int

    def __post_init__(self):
        if self.side not in (0, 1):
            raise DomainError(f"side must be 0 or 1, got {self.side}")
        if not self.u >= 1:
            raise DomainError(f"evasiveness must be >= 1, got {self.u}")
        if not self.d > 0:
            raise DomainError(f"start distance must be positive, got {self.d}")

    def speed(self, bits: int = DEFAULT_BITS) -> mpf:
        """``v = 1 - 1/u`` (rounds to exactly 1 once ``u`` exceeds 2**bits)."""
        require_bits(bits)
        with workprec(bits):
            return +(1 - 1 / self.u)


def target(u: RealLike, d: RealLike, side: int, bits: int = DEFAULT_BITS) -> Target:
    return Target(to_real(u, bits), to_real(d, bits), side)


@dataclass(frozen=True)
class ZigzagSpec:
    """Evasiveness schedule ``i -> log2(u_i)`` defining a zigzag strategy.

    ``log2_u`` is invoked under the caller's working precision and must
    return an mpf; it may raise :class:`SequenceError` past a finite
    horizon.  Admissibility (``u_i >= 1`` and ``u_{i+2} > u_i``) is
    checked lazily on whatever prefix a consumer touches.
    """

    name: str
    log2_u: Callable[[int], mpf]

    def log2_u_at(self, i: int, bits: int = DEFAULT_BITS) -> mpf:
        require_bits(bits)
        with workprec(bits):
            w = +mpf(self.log2_u(i))
        if not w >= 0:
            raise SequenceError(
                f"{self.name}: u_{i} < 1 (log2 u = {w})", index=i
            )
        return w

    def u_at(self, i: int, bits: int = DEFAULT_BITS) -> mpf:
        return pow2(self.log2_u_at(i, bits), bits)

    def validate_prefix(self, n_rounds: int, bits: int = DEFAULT_BITS) -> list[mpf]:
        """Check admissibility on rounds ``0..n_rounds-1``; return the exponents."""
        ws = [self.log2_u_at(i, bits) for i in range(n_rounds)]
        for i in range(n_rounds - 2):
            if not ws[i + 2] > ws[i]:
                raise SequenceError(
                    f"{self.name}: u_{{i+2}} > u_i violated at i={i} "
                    f"(log2 u_{i} = {ws[i]}, log2 u_{i + 2} = {ws[i + 2]})",
                    index=i,
                )
        return ws


@dataclass(frozen=True)
class RoundLedger:
    """Per-round turn distances ``x_i`` and cumulative sums ``s_i``.

    ``s_at(-1)`` is exactly zero.  ``log2_s`` mirrors ``s`` in the log
    domain, built with :func:`log_sum` so it never leaves log space.
    """

    d: mpf
    x: tuple[mpf, ...]
    s: tuple[mpf, ...]
    log2_s: tuple[Log2Real, ...]
    bits: int

    @property
    def rounds(self) -> int:
        return len(self.x)

    def s_at(self, i: int) -> mpf:
        if i < -1:
            raise DomainError(f"round index must be >= -1, got {i}")
        return self.s[i] if i >= 0 else mpf(0)

    def log2_s_at(self, i: int) -> Log2Real:
        if i < -1:
            raise DomainError(f"round index must be >= -1, got {i}")
        return self.log2_s[i] if i >= 0 else Log2Real.zero()


def compute_rounds(
    spec: ZigzagSpec,
    d: RealLike,
    n_rounds: int,
    bits: int = DEFAULT_BITS,
) -> RoundLedger:
    """Run the ledger recurrence for ``n_rounds`` rounds at distance ``d``.

    ``x_i = u_i*d + (2*u_i - 2)*s_{i-1}`` and ``s_i = x_i + s_{i-1}``;
    the log-domain mirror follows
    ``log2 s_i = log_sum(log2(u_i*d), log2(2*u_i - 1) + log2 s_{i-1})``.
    """
    require_bits(bits)
    if n_rounds < 1:
        raise DomainError(f"n_rounds must be >= 1, got {n_rounds}")
    d = to_real(d, bits)
    if not d >= 1:
        raise DomainError(f"ledger distance must be >= 1, got {d}")
    ws = spec.validate_prefix(n_rounds, bits)

    xs: list[mpf] = []
    ss: list[mpf] = []
    log2_ss: list[Log2Real] = []
    log2_d = log2(d, bits)
    s_prev = mpf(0)
    log2_s_prev = Log2Real.zero()
    with workprec(bits):
        for i in range(n_rounds):
            u_i = pow2(ws[i], bits)
            x_i = +(u_i * d + (2 * u_i - 2) * s_prev)
            s_i = +(x_i + s_prev)
            xs.append(x_i)
            ss.append(s_i)

            lead = Log2Real.from_log2(ws[i] + log2_d, bits)
            if log2_s_prev.sign == 0:
                carried = Log2Real.zero()
            else:
                carried = Log2Real.from_log2(
                    log2_two_u_minus_1(ws[i], bits) + log2_s_prev.log2_magnitude,
                    bits,
                )
            log2_s_i = log_sum(lead, carried, bits)
            log2_ss.append(log2_s_i)

            s_prev = s_i
            log2_s_prev = log2_s_i

    return RoundLedger(d=d, x=tuple(xs), s=tuple(ss), log2_s=tuple(log2_ss), bits=bits)


@lru_cache(maxsize=128)
def cached_rounds(spec: ZigzagSpec, d: mpf, n_rounds: int, bits: int) -> RoundLedger:
    """Memoised :func:`compute_rounds`; safe because ledgers are immutable."""
    return compute_rounds(spec, d, n_rounds, bits)


def catch_round(
    spec: ZigzagSpec,
    u: RealLike,
    side: int,
    horizon: int = DEFAULT_HORIZON,
    bits: int = DEFAULT_BITS,
) -> int:
    """First round of parity ``side`` whose schedule value reaches ``u``.

    The boundary ``u == u_i`` counts as caught on round ``i``: the turn
    point is exactly far enough to touch that target.  Raises
    :class:`HorizonExhausted` when no round ``i <= horizon`` qualifies.
    """
    require_bits(bits)
    if side not in (0, 1):
        raise DomainError(f"side must be 0 or 1, got {side}")
    u = to_real(u, bits)
    if not u >= 1:
        raise DomainError(f"evasiveness must be >= 1, got {u}")
    log2_u = log2(u, bits)
    last_by_parity: dict[int, mpf] = {}
    for i in range(horizon + 1):
        w = spec.log2_u_at(i, bits)
        parity = i % 2
        if parity in last_by_parity and not w > last_by_parity[parity]:
            raise SequenceError(
                f"{spec.name}: u_{{i+2}} > u_i violated at i={i - 2}", index=i - 2
            )
        last_by_parity[parity] = w
        if parity == side and w >= log2_u:
            return i
    raise HorizonExhausted(
        f"no round of parity {side} with u_i >= {u} within horizon {horizon}",
        horizon=horizon,
    )


def catch_time(
    spec: ZigzagSpec,
    tgt: Target,
    horizon: int = DEFAULT_HORIZON,
    bits: int = DEFAULT_BITS,
) -> mpf:
    """Catch time ``u*d + 2*u*s_{k-1}`` with ``k`` the catch round.

    Requires ``d >= 1`` (ledger regime); equals the geometric oracle's
    intersection time for the strategy's own trajectory.
    """
    require_bits(bits)
    if not tgt.d >= 1:
        raise DomainError(f"ledger operations require d >= 1, got {tgt.d}")
    k = catch_round(spec, tgt.u, tgt.side, horizon, bits)
    if k == 0:
        s_prev = mpf(0)
    else:
        s_prev = cached_rounds(spec, tgt.d, k, bits).s_at(k - 1)
    with workprec(bits):
        return +(tgt.u * tgt.d + 2 * tgt.u * s_prev)


def side_ratio(
    spec: ZigzagSpec,
    u: RealLike,
    d: RealLike,
    side: int,
    horizon: int = DEFAULT_HORIZON,
    bits: int = DEFAULT_BITS,
) -> mpf:
    """Per-side ratio ``1 + (2/d) * s_{k-1}`` for the given side."""
    require_bits(bits)
    u = to_real(u, bits)
    d = to_real(d, bits)
    if not d >= 1:
        raise DomainError(f"ledger operations require d >= 1, got {d}")
    k = catch_round(spec, u, side, horizon, bits)
    if k == 0:
        s_prev = mpf(0)
    else:
        s_prev = cached_rounds(spec, d, k, bits).s_at(k - 1)
    with workprec(bits):
        return +(1 + 2 * s_prev / d)


def competitive_ratio(
    spec: ZigzagSpec,
    u: RealLike,
    d: RealLike,
    horizon: int = DEFAULT_HORIZON,
    bits: int = DEFAULT_BITS,
) -> mpf:
    """Worst side of ``1 + (2/d)*s_{k-1}``; invariant in ``d`` because
    the ledger scales linearly with it."""
    r0 = side_ratio(spec, u, d, 0, horizon, bits)
    r1 = side_ratio(spec, u, d, 1, horizon, bits)
    return r0 if r0 >= r1 else r1


def worst_side(
    spec: ZigzagSpec,
    u: RealLike,
    d: RealLike,
    horizon: int = DEFAULT_HORIZON,
    bits: int = DEFAULT_BITS,
) -> int:
    """Side achieving the competitive ratio (ties go to side 0)."""
    r0 = side_ratio(spec, u, d, 0, horizon, bits)
    r1 = side_ratio(spec, u, d, 1, horizon, bits)
    return 0 if r0 >= r1 else 1


def trajectory(
    spec: ZigzagSpec,
    d: RealLike,
    n_rounds: int,
    bits: int = DEFAULT_BITS,
):
    """Vertices of the robot path for ``n_rounds`` rounds.

    Per round ``i``: out to ``(-1)**i * x_i``, back to the origin, at
    unit speed throughout, so each round contributes the two vertices
    ``(t + x_i, (-1)**i * x_i)`` and ``(t + 2*x_i, 0)``.  Vertex times
    are accumulated *exactly* (the dyadic sums are not re-rounded), so
    every leg's slope is exactly +-1 and the geometric oracle can make
    exact sign decisions.  The exact mantissas grow with the exponent
    spread; building more than ~16 rounds gets expensive.
    """
    from .oracle import Trajectory  # deferred: oracle owns the type

    ledger = compute_rounds(spec, d, n_rounds, bits)
    verts: list[tuple[mpf, mpf]] = [(mpf(0), mpf(0))]
    t = mpf(0)
    for i, x_i in enumerate(ledger.x):
        t = exact_add(t, x_i)
        verts.append((t, x_i if i % 2 == 0 else -x_i))
        t = exact_add(t, x_i)
        verts.append((t, mpf(0)))
    return Trajectory(vertices=tuple(verts))


@lru_cache(maxsize=16)
def cached_trajectory(spec: ZigzagSpec, d: mpf, n_rounds: int, bits: int):
    return trajectory(spec, d, n_rounds, bits)
