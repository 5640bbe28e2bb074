"""Command-line front end: sweeps, verification suites, oracle cross-checks.

Exit codes: 0 on success / all checks passing, 1 when a verification
check fails (or a cross-check cannot complete), 2 on usage errors.
Output is deterministic for a fixed configuration: no timestamps, sorted
JSON keys, decimal rendering via shortest round-tripping strings.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import click
import mpmath
from mpmath import mpf, workprec

from . import bounds
from .catalog import CatalogEntry, resolve_strategy
from .engine import (
    DEFAULT_HORIZON,
    Target,
    cached_rounds,
    cached_trajectory,
    catch_round,
    side_ratio,
    trajectory as build_trajectory,
)
from .errors import HorizonExhausted, SearchError
from .numerics import DEFAULT_BITS, log2, pow2, render_real, require_bits, to_real
from .oracle import intersect, write_trajectory_csv

SWEEP_COLUMNS = (
    "u",
    "d",
    "side",
    "catch_round",
    "catch_time_log2",
    "opt_time_log2",
    "cr_log2",
    "bound_F_log2",
    "slack_log2",
)

#: linear-value columns are emitted only while the magnitude still has a
#: manageable decimal exponent
LINEAR_RENDER_LOG2_CAP = 1 << 20


@dataclass
class CliState:
    bits: int
    fmt: Optional[str]
    out: Optional[str]


def _emit(state: CliState, text: str) -> None:
    if state.out:
        try:
            with open(state.out, "w") as handle:
                handle.write(text)
        except OSError as exc:
            raise click.UsageError(f"cannot write to {state.out!r}: {exc}")
    else:
        click.echo(text, nl=False)


@click.group()
@click.option(
    "--precision-bits",
    type=int,
    default=DEFAULT_BITS,
    envvar="LSL_PRECISION_BITS",
    show_default=True,
    help="mantissa width for all arithmetic (>= 64)",
)
@click.option(
    "--format",
    "fmt",
    type=click.Choice(["csv", "json"]),
    default=None,
    help="output format where a command supports both",
)
@click.option("--out", type=str, default=None, help="write output to this path")
@click.pass_context
def main(ctx: click.Context, precision_bits: int, fmt: Optional[str], out: Optional[str]):
    """Escaping-target line search: simulate strategies and certify bounds."""
    if precision_bits < 64:
        raise click.UsageError("--precision-bits must be at least 64")
    ctx.obj = CliState(bits=precision_bits, fmt=fmt, out=out)


def _resolve(strategy_id: str) -> CatalogEntry:
    try:
        return resolve_strategy(strategy_id)
    except SearchError as exc:
        raise click.UsageError(str(exc))


@main.command()
@click.option("--strategy", default="alg1", show_default=True, help="alg1, alg2 or a schedule description")
@click.option("--d", "d_str", default="1", show_default=True, help="start distance (>= 1)")
@click.option("--u-min", default="1", show_default=True)
@click.option("--u-max", required=True)
@click.option("--samples", type=int, default=64, show_default=True)
@click.option("--scale", type=click.Choice(["log", "linear"]), default="log", show_default=True)
@click.option("--horizon", type=int, default=DEFAULT_HORIZON, show_default=True)
@click.option("--linear", "render_linear", is_flag=True, help="append linear-value columns where representable")
@click.pass_obj
def sweep(
    state: CliState,
    strategy: str,
    d_str: str,
    u_min: str,
    u_max: str,
    samples: int,
    scale: str,
    horizon: int,
    render_linear: bool,
):
    """Tabulate worst-side ratios over an evasiveness range (CSV rows)."""
    bits = state.bits
    entry = _resolve(strategy)
    try:
        d = to_real(d_str, bits)
        lo = to_real(u_min, bits)
        hi = to_real(u_max, bits)
    except Exception as exc:
        raise click.UsageError(f"bad numeric flag: {exc}")
    if samples < 2:
        raise click.UsageError("--samples must be at least 2")
    if not lo >= 1:
        raise click.UsageError("--u-min must be >= 1")
    if not hi > lo:
        raise click.UsageError("--u-max must exceed --u-min")
    if not d >= 1:
        raise click.UsageError("--d must be >= 1")

    envelope = bounds.default_envelope(bits)
    with workprec(bits):
        if scale == "log":
            lo_l, hi_l = log2(lo, bits), log2(hi, bits)
            step = (hi_l - lo_l) / (samples - 1)
            us = [pow2(lo_l + j * step, bits) for j in range(samples)]
        else:
            step = (hi - lo) / (samples - 1)
            us = [+(lo + j * step) for j in range(samples)]

    rows = []
    for u in us:
        row = _sweep_row(entry, u, d, horizon, bits, envelope, render_linear)
        rows.append(row)

    columns = SWEEP_COLUMNS + (("catch_time", "opt_time", "cr") if render_linear else ())
    if (state.fmt or "csv") == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(columns)
        writer.writerows(rows)
        _emit(state, buf.getvalue())
    else:
        payload = [dict(zip(columns, row)) for row in rows]
        _emit(state, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _sweep_row(
    entry: CatalogEntry,
    u: mpf,
    d: mpf,
    horizon: int,
    bits: int,
    envelope: bounds.BoundSpec,
    render_linear: bool,
) -> tuple:
    spec = entry.spec
    try:
        r0 = side_ratio(spec, u, d, 0, horizon, bits)
        r1 = side_ratio(spec, u, d, 1, horizon, bits)
    except HorizonExhausted:
        empty = ("",) * 7 if not render_linear else ("",) * 10
        return (render_real(u, bits), render_real(d, bits)) + empty
    side = 0 if r0 >= r1 else 1
    cr = r0 if side == 0 else r1
    k = catch_round(spec, u, side, horizon, bits)
    with workprec(bits):
        opt_log2 = log2(u * d, bits)
        cr_log2 = log2(cr, bits)
        time_log2 = +(cr_log2 + opt_log2)  # T = CR * u * d
        if u > envelope.domain_min:
            bound_log2 = envelope.log2_at_log2u(log2(u, bits), bits)
            slack = +(bound_log2 - cr_log2)
            bound_s, slack_s = render_real(bound_log2, bits), render_real(slack, bits)
        else:
            bound_s, slack_s = "", ""
    row = (
        render_real(u, bits),
        render_real(d, bits),
        side,
        k,
        render_real(time_log2, bits),
        render_real(opt_log2, bits),
        render_real(cr_log2, bits),
        bound_s,
        slack_s,
    )
    if render_linear:
        with workprec(bits):
            if abs(time_log2) < LINEAR_RENDER_LOG2_CAP:
                t_lin = render_real(pow2(time_log2, bits), bits)
                o_lin = render_real(+(u * d), bits)
                c_lin = render_real(cr, bits)
            else:
                t_lin = o_lin = c_lin = ""
        row = row + (t_lin, o_lin, c_lin)
    return row


@main.command()
@click.argument("suite", type=click.Choice(["all", "upper", "lower", "diff", "unknown_d"]))
@click.option("--i-max", type=int, default=12, show_default=True)
@click.option("--a", "a_str", default=None, help="lower suite: refute CR <= a*u^k (with --k)")
@click.option("--k", "k_str", default=None, help="lower: exponent; diff: difference order")
@click.option("--x", "x_str", default=None, help="diff suite: single sandwich check at this point")
@click.option("--horizon", type=int, default=DEFAULT_HORIZON, show_default=True)
@click.option("--find-c", is_flag=True, help="upper suite: include the exploratory smallest-constant scan")
@click.pass_obj
def verify(
    state: CliState,
    suite: str,
    i_max: int,
    a_str: Optional[str],
    k_str: Optional[str],
    x_str: Optional[str],
    horizon: int,
    find_c: bool,
):
    """Run a certification suite; exit 0 only if every check passes."""
    bits = state.bits
    try:
        records = _run_suite(suite, bits, i_max, a_str, k_str, x_str, horizon, find_c)
    except SearchError as exc:
        raise click.UsageError(str(exc))
    _emit_records(state, records)
    sys.exit(0 if bounds.all_passed(records) else 1)


def _run_suite(
    suite: str,
    bits: int,
    i_max: int,
    a_str: Optional[str],
    k_str: Optional[str],
    x_str: Optional[str],
    horizon: int,
    find_c: bool,
) -> list[bounds.CheckRecord]:
    if suite == "upper":
        return bounds.suite_upper(bits, i_max, find_c)
    if suite == "lower":
        if a_str is not None or k_str is not None:
            if a_str is None or k_str is None:
                raise click.UsageError("lower spot check needs both --a and --k")
            return bounds.suite_lower(bits, max(i_max, 40), pairs=[(a_str, k_str)])
        return bounds.suite_lower(bits)
    if suite == "diff":
        if k_str is not None or x_str is not None:
            if k_str is None or x_str is None:
                raise click.UsageError("diff spot check needs both --k and --x")
            try:
                k = int(k_str)
            except ValueError:
                raise click.UsageError(f"--k must be an integer order, got {k_str!r}")
            x = to_real(x_str, bits)
            if not x > k:
                raise click.UsageError(f"sandwich check needs x > k, got x={x_str}, k={k}")
            report = bounds.check_diff_bounds(bounds.sqrt_oracle(), k, [x], bits)
            return [
                bounds.CheckRecord(
                    check_id=f"diff.bounds.k={k}.x={x_str}",
                    params={"k": k, "x": x_str},
                    margin_log2=bounds._safe_log2(report.min_margin, bits),
                    passed=report.passed,
                    precision_bits=bits,
                )
            ]
        return bounds.suite_diff(bits)
    if suite == "unknown_d":
        return bounds.suite_unknown_d(bits, horizon=horizon)
    return bounds.suite_all(bits, i_max, horizon, find_c)


def _emit_records(state: CliState, records: Sequence[bounds.CheckRecord]) -> None:
    bits = state.bits
    payload = [
        {
            "check_id": r.check_id,
            "params": {k: _plain(v, bits) for k, v in sorted(r.params.items())},
            "margin_log2": None if r.margin_log2 is None else render_real(r.margin_log2, bits),
            "pass": r.passed,
            "precision_bits": r.precision_bits,
        }
        for r in records
    ]
    if state.fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(("check_id", "margin_log2", "pass", "precision_bits", "params"))
        for item in payload:
            writer.writerow(
                (
                    item["check_id"],
                    item["margin_log2"] or "",
                    item["pass"],
                    item["precision_bits"],
                    json.dumps(item["params"], sort_keys=True),
                )
            )
        _emit(state, buf.getvalue())
    else:
        _emit(state, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _plain(value, bits):
    if isinstance(value, mpf):
        return render_real(value, bits)
    return value


@main.command()
@click.option("--strategy", default="alg1", show_default=True)
@click.option("--u", "u_str", required=True)
@click.option("--d", "d_str", default="1", show_default=True)
@click.option("--side", type=click.Choice(["0", "1"]), default="0", show_default=True)
@click.option("--rounds", type=int, default=8, show_default=True)
@click.pass_obj
def oracle(state: CliState, strategy: str, u_str: str, d_str: str, side: str, rounds: int):
    """Cross-check the closed-form catch time against the geometric oracle."""
    bits = state.bits
    entry = _resolve(strategy)
    try:
        tgt = Target(to_real(u_str, bits), to_real(d_str, bits), int(side))
    except SearchError as exc:
        raise click.UsageError(str(exc))
    if rounds < 1:
        raise click.UsageError("--rounds must be >= 1")

    plan_d = entry.planning_distance(tgt.d)
    traj = cached_trajectory(entry.spec, plan_d, rounds, bits)
    res = intersect(traj, tgt, bits)
    if res is None:
        _emit(
            state,
            f"not caught within {rounds} rounds of the planned path; "
            "raise --rounds and retry\n",
        )
        sys.exit(1)

    k = res.segment_index // 2
    ledger = cached_rounds(entry.spec, plan_d, max(k, 1), bits)
    s_prev = ledger.s_at(k - 1)
    with workprec(bits):
        analytic = +(tgt.u * tgt.d + 2 * tgt.u * s_prev)
        rel = +(abs(res.time - analytic) / analytic)
    lines = [
        f"strategy:        {strategy} (planning distance {render_real(plan_d, bits, 20)})",
        f"target:          u={u_str} d={d_str} side={side}",
        f"catch round:     {k} (segment {res.segment_index})",
        f"analytic time:   {render_real(analytic, bits)}",
        f"oracle time:     {render_real(res.time, bits)}",
        f"relative diff:   {render_real(rel, bits, 10)}",
    ]
    _emit(state, "\n".join(lines) + "\n")


@main.command()
@click.option("--strategy", default="alg1", show_default=True)
@click.option("--d", "d_str", default="1", show_default=True)
@click.option("--rounds", type=int, required=True)
@click.option("--digits", type=int, default=40, show_default=True)
@click.pass_obj
def trajectory(state: CliState, strategy: str, d_str: str, rounds: int, digits: int):
    """Write the strategy's path as a t,x CSV (to --out or stdout)."""
    bits = state.bits
    entry = _resolve(strategy)
    if rounds < 1:
        raise click.UsageError("--rounds must be >= 1")
    try:
        d = to_real(d_str, bits)
    except Exception as exc:
        raise click.UsageError(f"bad --d: {exc}")
    plan_d = entry.planning_distance(d)
    try:
        traj = build_trajectory(entry.spec, plan_d, rounds, bits)
    except SearchError as exc:
        raise click.UsageError(str(exc))
    buf = io.StringIO()
    write_trajectory_csv(traj, buf, digits)
    _emit(state, buf.getvalue())


@main.command()
@click.option("--strategy", default="alg1", show_default=True)
@click.option("--a", "a_str", default="1", show_default=True)
@click.option("--k", "k_str", required=True)
@click.option("--i-max", type=int, default=40, show_default=True)
@click.pass_obj
def refute(state: CliState, strategy: str, a_str: str, k_str: str, i_max: int):
    """Search for a witness refuting CR <= a * u**k (needs 0 < k < 4)."""
    bits = state.bits
    entry = _resolve(strategy)
    try:
        witness = bounds.refute_polynomial_bound(entry, a_str, k_str, i_max, bits)
    except SearchError as exc:
        raise click.UsageError(str(exc))
    if witness is None:
        _emit(state, f"no witness up to round {i_max}\n")
        sys.exit(1)
    lines = [
        f"witness round:     {witness.round_index}",
        f"log2 u*:           {render_real(log2(witness.u_star, bits), bits, 30)}",
        f"log2 CR lower:     {render_real(witness.cr_log2, bits, 30)}",
        f"log2 claimed:      {render_real(witness.bound_log2, bits, 30)}",
        f"log2 CR (ledger):  {render_real(witness.exact_cr_log2, bits, 30)}",
    ]
    _emit(state, "\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
