"""Concrete strategy constructors and the custom-sequence text format.

The two shipped strategies share the same schedule,

    log2(u_i) = 3 * 2**i * sqrt(i+1) - 1,

and differ only in which distance the path is planned for: the
known-distance variant plans with the target's actual distance, the
no-knowledge variant always plans as though the distance were 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import mpmath
from mpmath import mpf

from .errors import DomainError, SequenceError
from .numerics import DEFAULT_BITS, RealLike, to_real
from .engine import ZigzagSpec

#: sentinel for entries that plan with the target's true distance
TRUE_DISTANCE = "true-d"


@dataclass(frozen=True)
class CatalogEntry:
    """A strategy plus the distance assumption its path is built with.

    ``assumed_d`` is either a fixed planning distance (an mpf) or the
    :data:`TRUE_DISTANCE` marker meaning the strategy knows and uses the
    target's actual distance.
    """

    spec: ZigzagSpec
    assumed_d: Union[mpf, str]
    description: str

    def planning_distance(self, true_d: mpf) -> mpf:
        if isinstance(self.assumed_d, str):
            return true_d
        return self.assumed_d


def _doubling_sqrt_log2_u(i: int) -> mpf:
    # 3 * 2**i * sqrt(i+1) - 1, evaluated at the ambient precision
    return mpmath.ldexp(3 * mpmath.sqrt(i + 1), i) - 1


#: shared schedule instance so ledger/trajectory caches key on identity
DOUBLING_SQRT_SPEC = ZigzagSpec(name="doubling-sqrt", log2_u=_doubling_sqrt_log2_u)


def algorithm1(d: RealLike | None = None, bits: int = DEFAULT_BITS) -> CatalogEntry:
    """Known-distance searcher on the doubling-sqrt schedule.

    With ``d`` given it is validated (``d >= 1``) and becomes the fixed
    planning distance; with ``d=None`` the entry plans with whatever
    distance each target really has (equivalent, since the schedule does
    not depend on ``d``).
    """
    if d is None:
        return CatalogEntry(
            spec=DOUBLING_SQRT_SPEC,
            assumed_d=TRUE_DISTANCE,
            description="doubling-sqrt schedule, path planned with the true distance",
        )
    d = to_real(d, bits)
    if not d >= 1:
        raise DomainError(f"known start distance must be >= 1, got {d}")
    return CatalogEntry(
        spec=DOUBLING_SQRT_SPEC,
        assumed_d=d,
        description=f"doubling-sqrt schedule, known start distance d={d}",
    )


def algorithm2() -> CatalogEntry:
    """No-knowledge searcher: same schedule, path planned as though d=1.

    Catch times against targets with a different true distance come from
    the geometric oracle (the closed-form ledger only describes the
    planned path, which here is the d=1 path).
    """
    return CatalogEntry(
        spec=DOUBLING_SQRT_SPEC,
        assumed_d=mpf(1),
        description="doubling-sqrt schedule executed as though d=1",
    )


SequenceDescription = Union[str, Callable[[int], mpf], Sequence[RealLike]]


def custom_sequence(description: SequenceDescription) -> CatalogEntry:
    """Build an entry from a schedule description.

    Accepted forms:

    * text, one of::

        geometric:<base>,<ratio>     u_i = base * ratio**i
        log2poly:<c0>,<c1>,...       log2 u_i = sum_j c_j * i**j
        table:<w0>,<w1>,...          log2 u_i read from the list
                                     (finite horizon, no extrapolation)

    * a callable ``i -> log2(u_i)`` evaluated at the ambient precision;
    * a finite sequence of log2 values (same as ``table:``).

    Admissibility (``u_i >= 1``, ``u_{i+2} > u_i``) is checked lazily by
    whatever consumes the schedule, not here.
    """
    if isinstance(description, str):
        name = description
        fn = _parse_sequence_text(description)
    elif callable(description):
        name = getattr(description, "__name__", "custom")
        fn = description
    else:
        values = tuple(str(v) for v in description)
        name = "table:" + ",".join(values)
        fn = _table_evaluator(values)
    return CatalogEntry(
        spec=ZigzagSpec(name=name, log2_u=fn),
        assumed_d=TRUE_DISTANCE,
        description=f"custom schedule {name!r}",
    )


def _table_evaluator(values: tuple[str, ...]) -> Callable[[int], mpf]:
    def log2_u(i: int) -> mpf:
        if i < 0 or i >= len(values):
            raise SequenceError(
                f"table schedule has {len(values)} entries; round {i} requested "
                "(extrapolation is disabled)",
                index=i,
            )
        return mpf(values[i])

    return log2_u


def _parse_sequence_text(text: str) -> Callable[[int], mpf]:
    kind, sep, rest = text.partition(":")
    if not sep:
        raise SequenceError(
            f"schedule description {text!r} lacks a 'kind:' prefix "
            "(expected geometric:, log2poly: or table:)"
        )
    parts = [p.strip() for p in rest.split(",") if p.strip()]
    if not parts:
        raise SequenceError(f"schedule description {text!r} carries no values")

    if kind == "geometric":
        if len(parts) != 2:
            raise SequenceError("geometric: takes exactly base,ratio")
        base_s, ratio_s = parts

        def log2_u(i: int) -> mpf:
            base = mpf(base_s)
            ratio = mpf(ratio_s)
            if base <= 0 or ratio <= 0:
                raise SequenceError("geometric: base and ratio must be positive")
            return mpmath.log(base, 2) + i * mpmath.log(ratio, 2)

        return log2_u

    if kind == "log2poly":
        coeff_s = tuple(parts)

        def log2_u(i: int) -> mpf:
            total = mpf(0)
            for j, c in enumerate(coeff_s):
                total += mpf(c) * mpf(i) ** j
            return total

        return log2_u

    if kind == "table":
        return _table_evaluator(tuple(parts))

    raise SequenceError(f"unknown schedule kind {kind!r}")


def resolve_strategy(strategy_id: str) -> CatalogEntry:
    """Map a CLI strategy id to an entry.

    ``alg1`` / ``alg2`` name the shipped strategies; anything containing
    a colon is parsed as a custom schedule description.
    """
    if strategy_id == "alg1":
        return algorithm1()
    if strategy_id == "alg2":
        return algorithm2()
    if ":" in strategy_id:
        return custom_sequence(strategy_id)
    raise SequenceError(
        f"unknown strategy {strategy_id!r}; use alg1, alg2 or a "
        "geometric:/log2poly:/table: description"
    )


# --- reference curves (plot data only) -------------------------------------

def reference_cr_both_known(u: RealLike, bits: int = DEFAULT_BITS) -> mpf:
    """Best ratio when both speed and distance are known: ``1 + 2u``."""
    with mpmath.workprec(bits):
        return +(1 + 2 * mpf(u))


def reference_cr_distance_unknown(u: RealLike, bits: int = DEFAULT_BITS) -> mpf:
    """Best ratio with known speed, unknown distance:
    ``1 + 8(1+v)/(1-v)**2 = 1 + 8u**2*(2 - 1/u)``."""
    with mpmath.workprec(bits):
        u = mpf(u)
        return +(1 + 8 * u * u * (2 - 1 / u))
