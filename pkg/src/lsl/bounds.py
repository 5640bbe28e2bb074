"""Numerical certification of the growth bounds and their support lemmas.

Four families of checks live here:

* **Upper bound.**  For a strictly increasing schedule it suffices to
  verify ``1 + (2/d) s_{i+1} <= F(u_i)`` at the schedule's own points,
  where ``F(u) = c * u**(4 - h(u))`` is an increasing envelope; the
  key-point margins are computed in the log2 domain so the doubly
  exponential ledger never overflows anything.

* **Lower bound (refutation).**  Any claimed bound ``CR <= a * u**k``
  with ``k < 4`` is refuted by exhibiting a witness evasiveness
  ``u* = alpha_i * u_i`` with ``alpha_i = min(u_{i+2}/u_i, 2**(1/k))``
  where the certified lower bound ``1 + 2 * prod(u_n, n <= i+1)``
  already exceeds ``a * (u*)**k``.  The impossibility engine behind it
  (no positive sequence can sustain ``h z_i >= sum(z_n, n <= i+1)`` for
  ``h < 4``) is checked directly on concrete sequences via the
  ``y_i = 2**-i * sum(z_n)`` transform and its second difference.

* **Finite differences.**  The backward difference ``f^<n>`` of
  ``sqrt`` is sandwiched between shifted derivatives, stays sign-stable
  under mixed derivative/difference application, and satisfies the
  summation-by-parts identity used to telescope the key-point margins;
  all three are verified on grids, plus the curvature functional
  ``Phi(i)`` built from them.

* **Unknown distance.**  The plan-for-distance-1 strategy is measured
  with the geometric oracle against targets of arbitrary ``(u, d)`` and
  compared, via exact dyadic cross-multiplication, against both the
  reduction ``CR(u,d) <= 1 + (CR(ud,1) - 1)/d`` and the closed
  two-branch bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import mpmath
from mpmath import mpf, workprec

from .catalog import CatalogEntry, algorithm1, algorithm2
from .engine import (
    DEFAULT_HORIZON,
    Target,
    ZigzagSpec,
    cached_rounds,
    cached_trajectory,
    catch_round,
    competitive_ratio,
)
from .errors import DomainError, HorizonExhausted
from .numerics import (
    DEFAULT_BITS,
    Log2Real,
    RealLike,
    exact_add,
    exact_mul,
    log2,
    log_sum,
    pow2,
    render_real,
    require_bits,
    to_real,
)
from .oracle import CatchResult, compare_catch_times, intersect


# ---------------------------------------------------------------------------
# uniform check records (the JSON report unit)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckRecord:
    """One certified (or failed) inequality: id, inputs, log2 slack."""

    check_id: str
    params: dict
    margin_log2: Optional[mpf]
    passed: bool
    precision_bits: int


def all_passed(records: Sequence[CheckRecord]) -> bool:
    return all(r.passed for r in records)


# ---------------------------------------------------------------------------
# envelope F(u) = c * u**(4 - h(u))
# ---------------------------------------------------------------------------

def _inverse_square_loglog(w: mpf) -> mpf:
    # h(u) = (log2 log2 u)^-2 expressed in terms of w = log2 u
    return 1 / mpmath.log(w, 2) ** 2


@dataclass(frozen=True)
class BoundSpec:
    """Envelope ``F(u) = c * u**(4 - h(u))`` for ``u >= domain_min``.

    ``h_of_log2u`` receives ``w = log2 u`` (the natural variable once
    ``u`` stops fitting in linear space) and must be positive and
    decreasing for the envelope to be increasing.
    """

    c: mpf
    h_of_log2u: Callable[[mpf], mpf]
    domain_min: mpf

    def log2_at_log2u(self, w: RealLike, bits: int = DEFAULT_BITS) -> mpf:
        require_bits(bits)
        with workprec(bits):
            w = +mpf(w)
            w_min = mpmath.log(self.domain_min, 2)
            if w < w_min:
                raise DomainError(
                    f"envelope defined for u >= {self.domain_min} (log2 u >= {w_min}), "
                    f"got log2 u = {w}"
                )
            h = +mpf(self.h_of_log2u(w))
            return +(mpmath.log(self.c, 2) + (4 - h) * w)

    def value_at(self, u: RealLike, bits: int = DEFAULT_BITS) -> mpf:
        return pow2(self.log2_at_log2u(log2(u, bits), bits), bits)


def default_envelope(bits: int = DEFAULT_BITS) -> BoundSpec:
    """The certified envelope: c = 5618/100, h(u) = (log2 log2 u)^-2, u > 4.

    The constant is evaluated from its exact rational form at runtime
    precision; nothing is baked in as a rounded literal.
    """
    require_bits(bits)
    with workprec(bits):
        c = +(mpf(5618) / 100)
    return BoundSpec(c=c, h_of_log2u=_inverse_square_loglog, domain_min=mpf(4))


# ---------------------------------------------------------------------------
# upper bound: key-point margins in the log2 domain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KeyPointMargin:
    index: int
    lhs_log2: mpf      # log2(1 + (2/d) s_{i+1})
    rhs_log2: mpf      # log2 F(u_i)
    margin_log2: mpf   # rhs - lhs
    h_trace: mpf       # 4*log2(u_i) - lhs_log2, diagnostic only

    @property
    def passed(self) -> bool:
        return self.margin_log2 > 0


@dataclass(frozen=True)
class UpperBoundReport:
    margins: tuple[KeyPointMargin, ...]
    envelope_increasing: bool
    grid_size: int
    bits: int

    @property
    def passed(self) -> bool:
        return self.envelope_increasing and all(m.passed for m in self.margins)


def _require_strictly_increasing(spec: ZigzagSpec, ws: Sequence[mpf]) -> None:
    for i in range(len(ws) - 1):
        if not ws[i + 1] > ws[i]:
            raise DomainError(
                f"{spec.name}: key-point reduction needs a strictly increasing "
                f"schedule, violated at i={i}"
            )


def check_upper_bound(
    entry: CatalogEntry,
    bound: BoundSpec,
    i_max: int,
    bits: int = DEFAULT_BITS,
    d: RealLike = 1,
) -> UpperBoundReport:
    """Verify ``1 + (2/d) s_{i+1} <= F(u_i)`` for ``1 <= i <= i_max``.

    Also samples the envelope on a dense log2 grid to confirm it is
    increasing (which is what lets the key points cover every ``u``).
    All margins are log2-domain values; positive means certified.
    """
    require_bits(bits)
    if i_max < 1:
        raise DomainError(f"i_max must be >= 1, got {i_max}")
    spec = entry.spec
    d = to_real(d, bits)
    ws = spec.validate_prefix(i_max + 3, bits)
    _require_strictly_increasing(spec, ws)
    ledger = cached_rounds(spec, d, i_max + 2, bits)
    log2_d = log2(d, bits)
    one = Log2Real.from_log2(mpf(0), bits)

    margins = []
    with workprec(bits):
        for i in range(1, i_max + 1):
            s_log2 = ledger.log2_s_at(i + 1).log2_magnitude
            lhs = log_sum(
                one, Log2Real.from_log2(1 + s_log2 - log2_d, bits), bits
            ).log2_magnitude
            rhs = bound.log2_at_log2u(ws[i], bits)
            margins.append(
                KeyPointMargin(
                    index=i,
                    lhs_log2=lhs,
                    rhs_log2=+mpf(rhs),
                    margin_log2=+(rhs - lhs),
                    h_trace=+(4 * ws[i] - lhs),
                )
            )

    grid_size = 257
    increasing = _envelope_increasing_on_grid(bound, ws[i_max] + 2, grid_size, bits)
    return UpperBoundReport(
        margins=tuple(margins),
        envelope_increasing=increasing,
        grid_size=grid_size,
        bits=bits,
    )


def _envelope_increasing_on_grid(
    bound: BoundSpec, w_hi: mpf, grid_size: int, bits: int
) -> bool:
    with workprec(bits):
        w_lo = mpmath.log(bound.domain_min, 2)
        step = (w_hi - w_lo) / (grid_size - 1)
        prev = bound.log2_at_log2u(w_lo, bits)
        for j in range(1, grid_size):
            cur = bound.log2_at_log2u(w_lo + j * step, bits)
            if not cur > prev:
                return False
            prev = cur
    return True


def find_smallest_constant(
    entry: CatalogEntry,
    i_max: int,
    bits: int = DEFAULT_BITS,
) -> tuple[mpf, mpf]:
    """Exploratory, non-normative: smallest envelope constant that clears
    every key point up to ``i_max``, plus the smallest 0.01-grid value.
    """
    require_bits(bits)
    spec = entry.spec
    ws = spec.validate_prefix(i_max + 3, bits)
    _require_strictly_increasing(spec, ws)
    ledger = cached_rounds(spec, to_real(1, bits), i_max + 2, bits)
    one = Log2Real.from_log2(mpf(0), bits)
    with workprec(bits):
        needed = mpf("-inf")
        for i in range(1, i_max + 1):
            lhs = log_sum(
                one,
                Log2Real.from_log2(1 + ledger.log2_s_at(i + 1).log2_magnitude, bits),
                bits,
            ).log2_magnitude
            h = +mpf(_inverse_square_loglog(ws[i]))
            needed = max(needed, lhs - (4 - h) * ws[i])
        c_inf = pow2(needed, bits)
        c_grid = +(mpmath.ceil(c_inf * 100) / 100)
    return c_inf, c_grid


# ---------------------------------------------------------------------------
# lower bound: polynomial-bound refutation witnesses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RefutationWitness:
    """A concrete evasiveness where ``CR >= 1 + 2*prod(u_n) > a * u**k``.

    ``cr_log2`` is the log2 of the certified ratio lower bound at
    ``u_star`` obtained through the product route; ``exact_cr_log2`` is
    the sharper ledger route ``1 + 2*s_{i+1}`` at the same index.
    """

    round_index: int
    u_star: mpf
    cr_log2: mpf
    bound_log2: mpf
    exact_cr_log2: mpf


def refute_polynomial_bound(
    entry: CatalogEntry,
    a: RealLike,
    k: RealLike,
    i_max: int,
    bits: int = DEFAULT_BITS,
) -> Optional[RefutationWitness]:
    """Scan rounds ``0..i_max`` for a witness against ``CR <= a * u**k``.

    Requires ``0 < k < 4`` and ``a > 0``: for ``k >= 4`` there is nothing
    to refute (the machinery does not apply), and the test evasiveness
    ``alpha_i = min(u_{i+2}/u_i, 2**(1/k))`` needs a positive exponent.
    Everything runs in the log2 domain; the returned witness carries the
    linear ``u_star`` (its exponent is a plain integer, so even
    astronomically large witnesses are representable).
    """
    require_bits(bits)
    a = to_real(a, bits)
    k = to_real(k, bits)
    if not a > 0:
        raise DomainError(f"constant a must be positive, got {a}")
    if not k < 4:
        raise DomainError(f"exponent k must satisfy k < 4, got {k}")
    if not k > 0:
        raise DomainError(f"exponent k must be positive, got {k}")
    if i_max < 0:
        raise DomainError(f"i_max must be >= 0, got {i_max}")

    spec = entry.spec
    ws = spec.validate_prefix(i_max + 3, bits)
    ledger = cached_rounds(spec, to_real(1, bits), i_max + 2, bits)
    log2_a = log2(a, bits)
    one = Log2Real.from_log2(mpf(0), bits)

    with workprec(bits):
        inv_k = +(1 / k)
        w_running = ws[0] + ws[1]
        for i in range(i_max + 1):
            alpha_log2 = min(ws[i + 2] - ws[i], inv_k)
            u_star_log2 = +(ws[i] + alpha_log2)
            lower = log_sum(
                one, Log2Real.from_log2(1 + w_running, bits), bits
            ).log2_magnitude
            bound_log2 = +(log2_a + k * u_star_log2)
            if lower > bound_log2:
                exact_lower = log_sum(
                    one,
                    Log2Real.from_log2(
                        1 + ledger.log2_s_at(i + 1).log2_magnitude, bits
                    ),
                    bits,
                ).log2_magnitude
                return RefutationWitness(
                    round_index=i,
                    u_star=pow2(u_star_log2, bits),
                    cr_log2=lower,
                    bound_log2=bound_log2,
                    exact_cr_log2=exact_lower,
                )
            w_running = +(w_running + ws[i + 2])
    return None


# ---------------------------------------------------------------------------
# the impossibility engine: h*z_i >= sum(z_n, n <= i+1) for h < 4
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BeckNewmanState:
    """A candidate sequence and its ``y_i = 2**-i * sum(z_n, n<=i)`` transform."""

    z: tuple[mpf, ...]
    y: tuple[mpf, ...]
    h_param: mpf
    gamma: mpf
    bits: int


def beck_newman_state(
    z_values: Sequence[RealLike],
    h_param: RealLike,
    bits: int = DEFAULT_BITS,
) -> BeckNewmanState:
    """Validate and transform a sequence for the impossibility check.

    Needs ``0 < h < 4``, ``z_0, z_1 >= 0`` and ``z_i > 0`` for
    ``i >= 2``.
    """
    require_bits(bits)
    h = to_real(h_param, bits)
    if not h < 4:
        raise DomainError(f"h must be < 4, got {h}")
    if not h > 0:
        raise DomainError(f"h must be positive, got {h}")
    z = tuple(to_real(v, bits) for v in z_values)
    for i, v in enumerate(z):
        if i < 2:
            if not v >= 0:
                raise DomainError(f"z_{i} must be >= 0, got {v}")
        elif not v > 0:
            raise DomainError(f"z_{i} must be > 0 for i >= 2, got {v}")
    ys = []
    with workprec(bits):
        partial = mpf(0)
        for i, v in enumerate(z):
            partial = +(partial + v)
            ys.append(mpmath.ldexp(partial, -i))
        gamma = +((4 - h) / h)
    return BeckNewmanState(z=z, y=tuple(ys), h_param=h, gamma=gamma, bits=bits)


@dataclass(frozen=True)
class BeckNewmanRow:
    index: int
    condition_margin: mpf      # h*z_i - sum(z_n, n <= i+1); >= 0 means holds
    condition_holds: bool
    second_diff_margin: mpf    # -gamma*y_{i+2} - (y_{i+2} - 2y_{i+1} + y_i)
    second_diff_holds: bool


@dataclass(frozen=True)
class BeckNewmanReport:
    rows: tuple[BeckNewmanRow, ...]
    first_condition_failure: Optional[int]


def beck_newman_check(
    state: BeckNewmanState,
    m: int,
    i_max: int,
    bits: int = DEFAULT_BITS,
) -> BeckNewmanReport:
    """Evaluate both sides of the impossibility argument on ``[m, i_max]``.

    For each index: does ``h z_i >= sum(z_n, n <= i+1)`` hold, and does
    the concavity consequence
    ``y_{i+2} - 2 y_{i+1} + y_i <= -gamma * y_{i+2}`` hold.  The second
    follows from the first at index ``i+1``, which is what makes the
    condition impossible to sustain; the report records where each side
    holds and flags the first index where the condition fails.
    """
    require_bits(bits)
    if m < 0 or i_max < m:
        raise DomainError(f"need 0 <= m <= i_max, got m={m}, i_max={i_max}")
    if len(state.z) < i_max + 3:
        raise DomainError(
            f"sequence too short: checking up to i={i_max} needs "
            f"{i_max + 3} entries, got {len(state.z)}"
        )
    z, y, h, gamma = state.z, state.y, state.h_param, state.gamma
    rows = []
    first_failure: Optional[int] = None
    with workprec(bits):
        prefix = mpf(0)
        for n in range(m + 2):
            prefix = +(prefix + z[n])
        # prefix == sum(z_n, n <= m+1) from here on
        for i in range(m, i_max + 1):
            cond_margin = +(h * z[i] - prefix)
            cond_holds = cond_margin >= 0
            if not cond_holds and first_failure is None:
                first_failure = i
            sd = +(y[i + 2] - 2 * y[i + 1] + y[i])
            sd_margin = +(-gamma * y[i + 2] - sd)
            rows.append(
                BeckNewmanRow(
                    index=i,
                    condition_margin=cond_margin,
                    condition_holds=cond_holds,
                    second_diff_margin=sd_margin,
                    second_diff_holds=sd_margin >= 0,
                )
            )
            if i + 2 < len(z):
                prefix = +(prefix + z[i + 2])
    return BeckNewmanReport(rows=tuple(rows), first_condition_failure=first_failure)


# ---------------------------------------------------------------------------
# finite differences of sqrt and their derivative sandwiches
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiffOracle:
    """Backward-difference engine for a smooth scalar function.

    ``f`` is evaluated at the ambient precision; ``domain_min`` is the
    inclusive lower end of its domain; ``derivative(k, x)`` returns the
    exact k-th derivative where a closed form exists (k = 0 is ``f``).
    """

    f: Callable[[mpf], mpf]
    domain_min: mpf
    derivative: Optional[Callable[[int, mpf], mpf]] = None
    max_order: int = 8


def sqrt_derivative(k: int, x: mpf) -> mpf:
    """k-th derivative of sqrt: ``(-1)**(k+1) * (2k-2)! / ((k-1)! 2**(2k-1)) * x**(1/2-k)``."""
    if k < 0:
        raise DomainError(f"derivative order must be >= 0, got {k}")
    if k == 0:
        return mpmath.sqrt(x)
    if not x > 0:
        raise DomainError(f"sqrt derivatives need x > 0, got {x}")
    coeff = mpf(math.factorial(2 * k - 2)) / (
        math.factorial(k - 1) * (1 << (2 * k - 1))
    )
    sign = 1 if k % 2 == 1 else -1
    return sign * coeff * mpmath.power(x, mpf(1) / 2 - k)


def sqrt_oracle() -> DiffOracle:
    return DiffOracle(f=mpmath.sqrt, domain_min=mpf(0), derivative=sqrt_derivative)


def shifted_sqrt_oracle() -> DiffOracle:
    """``f(x) = sqrt(x + 1)``, so every integer ``x >= -1`` is in domain."""
    return DiffOracle(
        f=lambda x: mpmath.sqrt(x + 1),
        domain_min=mpf(-1),
        derivative=lambda k, x: sqrt_derivative(k, x + 1),
    )


def _backward_difference(fn: Callable[[mpf], mpf], n: int, x: mpf) -> mpf:
    # alternating binomial form of the n-fold backward difference;
    # evaluated at the ambient precision, caller supplies guard bits
    total = mpf(0)
    for j in range(n + 1):
        term = math.comb(n, j) * fn(x - j)
        total = total + (term if j % 2 == 0 else -term)
    return total


def finite_difference(
    oracle: DiffOracle,
    n: int,
    x: RealLike,
    bits: int = DEFAULT_BITS,
) -> mpf:
    """n-fold backward difference ``f^<n>(x)``.

    ``f^<0> = f`` and ``f^<n>(x) = f^<n-1>(x) - f^<n-1>(x-1)``; requires
    ``x - n`` to stay inside the oracle's domain.
    """
    require_bits(bits)
    if n < 0 or n > oracle.max_order:
        raise DomainError(
            f"difference order must be in [0, {oracle.max_order}], got {n}"
        )
    x = to_real(x, bits)
    if x - n < oracle.domain_min:
        raise DomainError(
            f"f^<{n}>({x}) needs f down to {x - n}, below domain minimum "
            f"{oracle.domain_min}"
        )
    with workprec(bits + 64):
        value = _backward_difference(oracle.f, n, +mpf(x))
    with workprec(bits):
        return +value


@dataclass(frozen=True)
class GridRow:
    x: mpf
    values: tuple[mpf, ...]
    passed: bool


@dataclass(frozen=True)
class GridReport:
    rows: tuple[GridRow, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def min_margin(self) -> Optional[mpf]:
        margins = [r.values[-1] for r in self.rows]
        return min(margins) if margins else None


def check_diff_bounds(
    oracle: DiffOracle,
    k: int,
    x_grid: Sequence[RealLike],
    bits: int = DEFAULT_BITS,
) -> GridReport:
    """Sandwich check: with ``sgn = (-1)**(k+1)``,

        sgn*f^(k)(x - k/2)  <=  sgn*f^<k>(x)  <=  sgn*f^(k)(x - k)

    for every grid point ``x > k``.  Row values are
    ``(lower, middle, upper, min(middle-lower, upper-middle))``.
    """
    require_bits(bits)
    if k < 1:
        raise DomainError(f"sandwich check needs k >= 1, got {k}")
    if oracle.derivative is None:
        raise DomainError("oracle carries no closed-form derivative")
    rows = []
    with workprec(bits):
        sgn = 1 if k % 2 == 1 else -1
        half_k = mpf(k) / 2
        for raw in x_grid:
            x = to_real(raw, bits)
            if not x > k:
                raise DomainError(f"grid point must exceed k={k}, got {x}")
            lower = +(sgn * oracle.derivative(k, x - half_k))
            middle = +(sgn * finite_difference(oracle, k, x, bits))
            upper = +(sgn * oracle.derivative(k, x - k))
            margin = +min(middle - lower, upper - middle)
            rows.append(
                GridRow(
                    x=x,
                    values=(lower, middle, upper, margin),
                    passed=lower <= middle <= upper,
                )
            )
    return GridReport(rows=tuple(rows))


def check_diff_positivity(
    oracle: DiffOracle,
    k: int,
    m: int,
    x_grid: Sequence[RealLike],
    bits: int = DEFAULT_BITS,
) -> GridReport:
    """Sign stability of mixed application: ``(-1)**(k+1) f^(k-m)<m>(x) >= 0``
    for ``1 <= k <= 4``, ``0 <= m <= k`` and grid points ``x > m``.

    The derivative is taken from the closed form, then differenced.
    Row values are ``(value,)`` with ``value`` also the margin.
    """
    require_bits(bits)
    if not 1 <= k <= 4:
        raise DomainError(f"k must be in [1, 4], got {k}")
    if not 0 <= m <= k:
        raise DomainError(f"m must be in [0, k], got {m}")
    if oracle.derivative is None:
        raise DomainError("oracle carries no closed-form derivative")
    rows = []
    sgn = 1 if k % 2 == 1 else -1

    def deriv_fn(x: mpf) -> mpf:
        return oracle.derivative(k - m, x)

    with workprec(bits):
        for raw in x_grid:
            x = to_real(raw, bits)
            if not x > m:
                raise DomainError(f"grid point must exceed m={m}, got {x}")
            with workprec(bits + 64):
                value = sgn * _backward_difference(deriv_fn, m, +mpf(x))
            value = +value
            rows.append(GridRow(x=x, values=(value,), passed=value >= 0))
    return GridReport(rows=tuple(rows))


# ---------------------------------------------------------------------------
# summation by parts (the telescoping identity)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AbelReport:
    lhs: mpf
    rhs: mpf
    abs_difference: mpf
    tolerance: mpf
    passed: bool


def check_abel_decomposition(
    g: Callable[[int], RealLike],
    oracle: DiffOracle,
    n: int,
    m: int,
    bits: int = DEFAULT_BITS,
) -> AbelReport:
    """Two-sided evaluation of the summation-by-parts identity

        sum_{j=0}^{n} g(j) f^<m>(j+m)
            = G(n) f^<m>(n+m) - sum_{j=0}^{n-1} G(j) f^<m+1>(j+m+1)

    with ``G`` the partial sums of ``g``.  The difference arguments are
    shifted by the order so every evaluation stays inside the domain
    (this is the form in which the identity is actually chained).  Both
    sides are evaluated with generous guard bits, so the reported
    difference reflects the identity itself, not base-precision noise;
    it must come out below ``2**-(bits-16)`` in absolute value.
    """
    require_bits(bits)
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    if m < 0 or m + 1 > oracle.max_order:
        raise DomainError(f"m must be in [0, {oracle.max_order - 1}], got {m}")
    guard = bits + 96
    with workprec(guard):
        g_vals = [+mpf(g(j)) for j in range(n + 1)]
        big_g = []
        running = mpf(0)
        for v in g_vals:
            running = +(running + v)
            big_g.append(running)

        lhs = mpf(0)
        for j in range(n + 1):
            lhs += g_vals[j] * _backward_difference(oracle.f, m, mpf(j + m))
        rhs = big_g[n] * _backward_difference(oracle.f, m, mpf(n + m))
        for j in range(n):
            rhs -= big_g[j] * _backward_difference(oracle.f, m + 1, mpf(j + m + 1))
        diff = abs(lhs - rhs)
    with workprec(bits):
        tolerance = mpmath.ldexp(mpf(1), -(bits - 16))
        return AbelReport(
            lhs=+lhs,
            rhs=+rhs,
            abs_difference=+diff,
            tolerance=tolerance,
            passed=diff <= tolerance,
        )


# ---------------------------------------------------------------------------
# the curvature functional Phi
# ---------------------------------------------------------------------------

def phi(i: int, bits: int = DEFAULT_BITS) -> mpf:
    """``Phi(i) = 3 f(i+1) - 3(i+3) f^<1>(i+1) + 3(i^2/2 + 5i/2 + 4) f^<2>(i+1)``
    with ``f(n) = sqrt(n+1)``; defined for integers ``i >= 1``.

    Its minimum over ``i >= 1`` is attained at ``i = 1`` with exact value
    ``12*sqrt(3) - 30*sqrt(2) + 21``.
    """
    require_bits(bits)
    if i < 1:
        raise DomainError(f"phi is defined for i >= 1, got {i}")
    oracle = shifted_sqrt_oracle()
    with workprec(bits):
        f0 = +mpmath.sqrt(i + 2)
        d1 = finite_difference(oracle, 1, i + 1, bits)
        d2 = finite_difference(oracle, 2, i + 1, bits)
        quad = mpf(i * i + 5 * i + 8) / 2
        return +(3 * f0 - 3 * (i + 3) * d1 + 3 * quad * d2)


def phi_lower_envelope(i: int, bits: int = DEFAULT_BITS) -> mpf:
    """Increasing lower envelope ``(9/8)sqrt(i) - (51/8)/sqrt(i) - 3*i^(-3/2)``;
    it crosses above the i=1 value by i = 5."""
    require_bits(bits)
    if i < 1:
        raise DomainError(f"envelope defined for i >= 1, got {i}")
    with workprec(bits):
        r = mpmath.sqrt(i)
        return +(mpf(9) / 8 * r - mpf(51) / 8 / r - 3 / (r * r * r))


def phi_exact_minimum(bits: int = DEFAULT_BITS) -> mpf:
    """``12*sqrt(3) - 30*sqrt(2) + 21``, evaluated at runtime precision."""
    require_bits(bits)
    with workprec(bits):
        return +(12 * mpmath.sqrt(3) - 30 * mpmath.sqrt(2) + 21)


# ---------------------------------------------------------------------------
# iterated partial sums of 2**n (the telescoping weights)
# ---------------------------------------------------------------------------

def iterated_power_sum(level: int, n: int) -> Fraction:
    """``g_0(n) = 2**n`` and ``g_k(n) = sum_{j<=n} g_{k-1}(j)``, exactly."""
    if level < 0 or n < 0:
        raise DomainError("level and n must be non-negative")
    vals = [Fraction(1 << j) for j in range(n + 1)]
    for _ in range(level):
        running = Fraction(0)
        out = []
        for v in vals:
            running += v
            out.append(running)
        vals = out
    return vals[n]


def iterated_power_sum_closed(level: int, n: int) -> Fraction:
    """Closed forms: ``2**(n+1) - 1``, ``2**(n+2) - n - 3``,
    ``2**(n+3) - n**2/2 - 7n/2 - 7``."""
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    if level == 0:
        return Fraction(1 << n)
    if level == 1:
        return Fraction((1 << (n + 1)) - 1)
    if level == 2:
        return Fraction((1 << (n + 2)) - n - 3)
    if level == 3:
        return Fraction(1 << (n + 3)) - Fraction(n * n + 7 * n + 14, 2)
    raise DomainError(f"closed form known for levels 0..3, got {level}")


# ---------------------------------------------------------------------------
# unknown start distance: oracle-measured ratios vs the two bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnknownDistanceReport:
    u: mpf
    d: mpf
    ud: mpf
    cr_measured: mpf           # worst-side oracle ratio of the plan-for-1 path
    cr_at_ud1: mpf             # closed-form ratio of the same path at (ud, 1)
    dominance_passed: bool     # CR(u,d) <= 1 + (CR(ud,1) - 1)/d, exact
    dominance_margin_log2: mpf
    branch: str                # "ud<=4" or "ud>4"
    branch_passed: bool
    branch_margin_log2: mpf

    @property
    def passed(self) -> bool:
        return self.dominance_passed and self.branch_passed


def _oracle_catch(
    spec: ZigzagSpec,
    tgt: Target,
    start_rounds: int,
    horizon: int,
    bits: int,
) -> CatchResult:
    rounds = max(1, start_rounds)
    while True:
        traj = cached_trajectory(spec, mpf(1), rounds, bits)
        res = intersect(traj, tgt, bits)
        if res is not None:
            return res
        if rounds > horizon + 2:
            raise HorizonExhausted(
                f"target (u={tgt.u}, d={tgt.d}, side={tgt.side}) not caught "
                f"within {rounds} rounds",
                horizon=horizon,
            )
        rounds += 2


def check_unknown_d_bound(
    u: RealLike,
    d: RealLike,
    bits: int = DEFAULT_BITS,
    horizon: int = DEFAULT_HORIZON,
    envelope: Optional[BoundSpec] = None,
) -> UnknownDistanceReport:
    """Measure the plan-for-distance-1 strategy against target ``(u, d)``
    and certify both the reduction to ``(ud, 1)`` and the closed bound.

    The measured ratio comes from the geometric oracle (true distance
    against the distance-1 path).  The reduction
    ``CR(u,d) <= 1 + (CR(ud,1) - 1)/d`` and the ``ud <= 4`` branch are
    decided with exact dyadic cross-multiplication because both hold
    with equality on parts of the grid; the ``ud > 4`` branch has real
    slack and is decided at working precision.
    """
    require_bits(bits)
    u = to_real(u, bits)
    d = to_real(d, bits)
    if not u >= 1:
        raise DomainError(f"evasiveness must be >= 1, got {u}")
    if not d >= 1:
        raise DomainError(f"distance must be >= 1, got {d}")
    if envelope is None:
        envelope = default_envelope(bits)
    entry = algorithm2()
    spec = entry.spec
    with workprec(bits):
        ud = +(u * d)

    k_sides = [catch_round(spec, ud, side, horizon, bits) for side in (0, 1)]
    start_rounds = max(k_sides) + 1
    res = [
        _oracle_catch(spec, Target(u, d, side), start_rounds, horizon, bits)
        for side in (0, 1)
    ]
    worst = res[0] if compare_catch_times(res[0], res[1]) >= 0 else res[1]

    ledger = cached_rounds(spec, mpf(1), max(k_sides) + 1, bits)
    cr_ud1 = competitive_ratio(spec, ud, 1, horizon, bits)
    s_worst = ledger.s_at(max(k_sides) - 1)  # s increases with the round

    with workprec(bits):
        cr_measured = +(worst.time / (u * d))

    # dominance, exact:  (num/den) / (u d) <= (d + 2 s) / d
    #                <=>  num * d <= den * u * d * (d + 2 s)
    num, den = worst.time_num, worst.time_den
    rhs_exact = exact_mul(
        exact_mul(den, exact_mul(u, d)),
        exact_add(d, exact_mul(mpf(2), s_worst)),
    )
    dominance_ok = exact_mul(num, d) <= rhs_exact
    with workprec(bits):
        dominance_rhs = +(1 + (cr_ud1 - 1) / d)
        dominance_margin = +(
            mpmath.log(dominance_rhs, 2) - mpmath.log(cr_measured, 2)
        )
        if dominance_ok and dominance_margin < 0:
            # the exact comparison proves the margin is >= 0; the rounded
            # log difference can dip below zero on equality boundaries
            dominance_margin = mpf(0)

    if ud <= 4:
        branch = "ud<=4"
        # CR <= 1 + 8/d  <=>  num * d <= den * u * d * (d + 8), exact
        branch_rhs = exact_mul(
            exact_mul(den, exact_mul(u, d)), exact_add(d, mpf(8))
        )
        branch_ok = exact_mul(num, d) <= branch_rhs
        with workprec(bits):
            branch_bound = +(1 + 8 / d)
            branch_margin = +(
                mpmath.log(branch_bound, 2) - mpmath.log(cr_measured, 2)
            )
            if branch_ok and branch_margin < 0:
                branch_margin = mpf(0)
    else:
        branch = "ud>4"
        with workprec(bits):
            f_ud = envelope.value_at(ud, bits)
            branch_bound = +(1 + (f_ud - 1) / d)
            branch_ok = cr_measured <= branch_bound
            branch_margin = +(
                mpmath.log(branch_bound, 2) - mpmath.log(cr_measured, 2)
            )

    return UnknownDistanceReport(
        u=u,
        d=d,
        ud=ud,
        cr_measured=cr_measured,
        cr_at_ud1=cr_ud1,
        dominance_passed=bool(dominance_ok),
        dominance_margin_log2=dominance_margin,
        branch=branch,
        branch_passed=bool(branch_ok),
        branch_margin_log2=branch_margin,
    )


# ---------------------------------------------------------------------------
# suite builders: map the checks above onto uniform records
# ---------------------------------------------------------------------------

def product_sandwich_records(
    bits: int = DEFAULT_BITS,
    i_max: int = 20,
    d: RealLike = 1,
) -> list[CheckRecord]:
    """``d*prod(u_n) <= s_i <= 2**(i+1)*d*prod(u_n)``, log2 margins."""
    entry = algorithm1()
    spec = entry.spec
    d = to_real(d, bits)
    ws = spec.validate_prefix(i_max + 1, bits)
    ledger = cached_rounds(spec, d, i_max + 1, bits)
    log2_d = log2(d, bits)
    records = []
    with workprec(bits):
        w_running = mpf(0)
        for i in range(i_max + 1):
            w_running = +(w_running + ws[i])
            s_log2 = ledger.log2_s_at(i).log2_magnitude
            lower_margin = +(s_log2 - (log2_d + w_running))
            upper_margin = +((i + 1) + log2_d + w_running - s_log2)
            records.append(
                CheckRecord(
                    check_id=f"engine.product_sandwich.lower.i={i:02d}",
                    params={"i": i},
                    margin_log2=lower_margin,
                    passed=lower_margin >= 0,
                    precision_bits=bits,
                )
            )
            records.append(
                CheckRecord(
                    check_id=f"engine.product_sandwich.upper.i={i:02d}",
                    params={"i": i},
                    margin_log2=upper_margin,
                    passed=upper_margin >= 0,
                    precision_bits=bits,
                )
            )
    return records


def plateau_records(bits: int = DEFAULT_BITS) -> list[CheckRecord]:
    """Spot checks of the two closed-form ratio plateaus."""
    entry = algorithm1()
    records = []
    with workprec(bits):
        nine = mpf(9)
        second = +(9 * pow2(6 * mpmath.sqrt(2), bits) - 7)
        rel_tol = mpmath.ldexp(mpf(1), -200)
        for u, expected, label in (
            (mpf(1), nine, "9"),
            (mpf(2), nine, "9"),
            (mpf(3), nine, "9"),
            (mpf(4), nine, "9"),
            (to_real("4.001", bits), second, "second"),
            (mpf(100), second, "second"),
            (mpf(179), second, "second"),
        ):
            cr = competitive_ratio(entry.spec, u, 1, DEFAULT_HORIZON, bits)
            rel = +(abs(cr - expected) / expected)
            margin = +(mpmath.log(rel_tol, 2) - mpmath.log(rel, 2)) if rel > 0 else None
            records.append(
                CheckRecord(
                    check_id=f"engine.plateau.{label}.u={render_real(u, bits, 8)}",
                    params={"u": render_real(u, bits), "expected": label},
                    margin_log2=margin,
                    passed=rel <= rel_tol,
                    precision_bits=bits,
                )
            )
    return records


def suite_upper(
    bits: int = DEFAULT_BITS,
    i_max: int = 12,
    find_c: bool = False,
) -> list[CheckRecord]:
    entry = algorithm1()
    envelope = default_envelope(bits)
    report = check_upper_bound(entry, envelope, i_max, bits)
    records = [
        CheckRecord(
            check_id=f"upper.keypoint.i={m.index:02d}",
            params={
                "i": m.index,
                "lhs_log2": render_real(m.lhs_log2, bits, 30),
                "rhs_log2": render_real(m.rhs_log2, bits, 30),
            },
            margin_log2=m.margin_log2,
            passed=m.passed,
            precision_bits=bits,
        )
        for m in report.margins
    ]
    records.append(
        CheckRecord(
            check_id="upper.envelope_increasing",
            params={"grid_size": report.grid_size},
            margin_log2=None,
            passed=report.envelope_increasing,
            precision_bits=bits,
        )
    )
    with workprec(bits):
        f4 = envelope.value_at(4, bits)
        window = mpf(1) / 100
        diff = abs(f4 - (mpf(359552) / 100))
        records.append(
            CheckRecord(
                check_id="upper.envelope_at_4",
                params={"value": render_real(f4, bits, 30)},
                margin_log2=None,
                passed=diff <= window,
                precision_bits=bits,
            )
        )
    if find_c:
        c_inf, c_grid = find_smallest_constant(entry, i_max, bits)
        records.append(
            CheckRecord(
                check_id="upper.find_c.exploratory",
                params={
                    "note": "non-normative: smallest constant clearing the key points",
                    "c_infimum": render_real(c_inf, bits, 30),
                    "c_grid_0.01": render_real(c_grid, bits, 30),
                },
                margin_log2=None,
                passed=True,
                precision_bits=bits,
            )
        )
    return sorted(records, key=lambda r: r.check_id)


REFUTATION_GRID_A = ("1", "1e3", "1e6")
REFUTATION_GRID_K = ("1", "2", "3", "3.5", "3.9")


def suite_lower(
    bits: int = DEFAULT_BITS,
    i_max: int = 40,
    pairs: Optional[Sequence[tuple[str, str]]] = None,
) -> list[CheckRecord]:
    entry = algorithm1()
    if pairs is None:
        pairs = [(a, k) for a in REFUTATION_GRID_A for k in REFUTATION_GRID_K]
    records = []
    for a_s, k_s in pairs:
        witness = refute_polynomial_bound(entry, a_s, k_s, i_max, bits)
        if witness is None:
            records.append(
                CheckRecord(
                    check_id=f"lower.refute.a={a_s}.k={k_s}",
                    params={"a": a_s, "k": k_s, "i_max": i_max},
                    margin_log2=None,
                    passed=False,
                    precision_bits=bits,
                )
            )
        else:
            with workprec(bits):
                margin = +(witness.cr_log2 - witness.bound_log2)
            records.append(
                CheckRecord(
                    check_id=f"lower.refute.a={a_s}.k={k_s}",
                    params={
                        "a": a_s,
                        "k": k_s,
                        "i_max": i_max,
                        "round_index": witness.round_index,
                        "u_star_log2": render_real(
                            log2(witness.u_star, bits), bits, 30
                        ),
                    },
                    margin_log2=margin,
                    passed=True,
                    precision_bits=bits,
                )
            )

    # the schedule's own exponents cannot satisfy the h < 4 condition
    depth = 15
    ws = entry.spec.validate_prefix(depth, bits)
    state = beck_newman_state(ws, "3.9", bits)
    report = beck_newman_check(state, 0, depth - 3, bits)
    fails_everywhere = all(
        not row.condition_holds for row in report.rows if row.index >= 1
    )
    with workprec(bits):
        worst = min(
            (-row.condition_margin for row in report.rows if row.index >= 1),
        )
    records.append(
        CheckRecord(
            check_id="lower.beck_newman.condition_fails",
            params={
                "h": "3.9",
                "z": "schedule log2 exponents",
                "first_failure": report.first_condition_failure,
            },
            margin_log2=worst,
            passed=fails_everywhere,
            precision_bits=bits,
        )
    )
    return sorted(records, key=lambda r: r.check_id)


ABEL_N_GRID = (0, 1, 2, 3, 5, 8, 13, 21, 32)


def suite_diff(bits: int = DEFAULT_BITS) -> list[CheckRecord]:
    records = []
    oracle = sqrt_oracle()
    for k in range(1, 5):
        grid = [k + j for j in range(1, 51)]
        report = check_diff_bounds(oracle, k, grid, bits)
        records.append(
            CheckRecord(
                check_id=f"diff.bounds.k={k}",
                params={"k": k, "grid": "x in (k, k+50], 50 integer points"},
                margin_log2=_safe_log2(report.min_margin, bits),
                passed=report.passed,
                precision_bits=bits,
            )
        )
    for k in range(1, 5):
        for m in range(0, k + 1):
            grid = [m + j for j in range(1, 51)]
            report = check_diff_positivity(oracle, k, m, grid, bits)
            records.append(
                CheckRecord(
                    check_id=f"diff.positivity.k={k}.m={m}",
                    params={"k": k, "m": m, "grid": "x in (m, m+50], 50 integer points"},
                    margin_log2=_safe_log2(report.min_margin, bits),
                    passed=report.passed,
                    precision_bits=bits,
                )
            )
    shifted = shifted_sqrt_oracle()
    for m in range(0, 3):
        for n in ABEL_N_GRID:
            report = check_abel_decomposition(lambda j: 1 << j, shifted, n, m, bits)
            margin = None
            if report.abs_difference > 0:
                with workprec(bits):
                    margin = +(
                        mpmath.log(report.tolerance, 2)
                        - mpmath.log(report.abs_difference, 2)
                    )
            records.append(
                CheckRecord(
                    check_id=f"diff.abel.m={m}.n={n:02d}",
                    params={"n": n, "m": m, "g": "2**j"},
                    margin_log2=margin,
                    passed=report.passed,
                    precision_bits=bits,
                )
            )

    with workprec(bits):
        value = phi(1, bits)
        exact = phi_exact_minimum(bits)
        rel = +(abs(value - exact) / abs(exact))
        rel_tol = mpmath.ldexp(mpf(1), -200)
        records.append(
            CheckRecord(
                check_id="diff.phi.exact_at_1",
                params={"value": render_real(value, bits, 30)},
                margin_log2=_safe_log2(rel_tol - rel, bits) if rel <= rel_tol else None,
                passed=rel <= rel_tol,
                precision_bits=bits,
            )
        )
        worst_gap = None
        ok = True
        base = phi(1, bits)
        for i in range(1, 101):
            gap = +(phi(i, bits) - base)
            if worst_gap is None or gap < worst_gap:
                worst_gap = gap
            if gap < 0:
                ok = False
        records.append(
            CheckRecord(
                check_id="diff.phi.global_minimum",
                params={"range": "1..100"},
                margin_log2=None,
                passed=ok,
                precision_bits=bits,
            )
        )

    sums_ok = all(
        iterated_power_sum_closed(level, n) == iterated_power_sum(level, n)
        for level in (1, 2, 3)
        for n in range(0, 65)
    )
    records.append(
        CheckRecord(
            check_id="diff.iterated_power_sums",
            params={"levels": "1..3", "n": "0..64", "arithmetic": "exact rational"},
            margin_log2=None,
            passed=sums_ok,
            precision_bits=bits,
        )
    )
    return sorted(records, key=lambda r: r.check_id)


def _safe_log2(x: Optional[mpf], bits: int) -> Optional[mpf]:
    if x is None or not x > 0:
        return None
    return log2(x, bits)


def _geometric_grid(lo: int, hi: int, points: int, bits: int) -> list[mpf]:
    with workprec(bits):
        lo_l, hi_l = mpmath.log(mpf(lo), 2), mpmath.log(mpf(hi), 2)
        step = (hi_l - lo_l) / (points - 1)
        return [pow2(lo_l + j * step, bits) for j in range(points)]


def suite_unknown_d(
    bits: int = DEFAULT_BITS,
    grid_points: int = 10,
    horizon: int = DEFAULT_HORIZON,
) -> list[CheckRecord]:
    grid = _geometric_grid(1, 16, grid_points, bits)
    records = []
    for i, u in enumerate(grid):
        for j, d in enumerate(grid):
            report = check_unknown_d_bound(u, d, bits, horizon)
            base_params = {
                "u": render_real(u, bits, 20),
                "d": render_real(d, bits, 20),
                "cr": render_real(report.cr_measured, bits, 20),
            }
            records.append(
                CheckRecord(
                    check_id=f"unknown_d.dominance.i={i}.j={j}",
                    params=base_params,
                    margin_log2=report.dominance_margin_log2,
                    passed=report.dominance_passed,
                    precision_bits=bits,
                )
            )
            records.append(
                CheckRecord(
                    check_id=f"unknown_d.branch.i={i}.j={j}",
                    params={**base_params, "branch": report.branch},
                    margin_log2=report.branch_margin_log2,
                    passed=report.branch_passed,
                    precision_bits=bits,
                )
            )
    return sorted(records, key=lambda r: r.check_id)


def suite_all(
    bits: int = DEFAULT_BITS,
    i_max: int = 12,
    horizon: int = DEFAULT_HORIZON,
    find_c: bool = False,
) -> list[CheckRecord]:
    records = []
    records.extend(suite_upper(bits, i_max, find_c))
    records.extend(suite_lower(bits))
    records.extend(suite_diff(bits))
    records.extend(suite_unknown_d(bits, horizon=horizon))
    records.extend(product_sandwich_records(bits))
    records.extend(plateau_records(bits))
    return sorted(records, key=lambda r: r.check_id)
