#!/usr/bin/env python3
import functools
import itertools
import logging
import math
import sys
from collections.abc import Callable
from fractions import Fraction
from pathlib import Path
from typing import Any

import click
import numpy as np

from .attack import (
    AttackMode,
    AttackParams,
    bias_protocol,
    bias_protocol_multibit,
    family_common_set,
    kkl_greedy,
    round_lb_probe,
    semi_random_process,
)
from .boolfn import (
    BooleanFunction,
    bias_value,
    influences,
    load_function,
    prob,
    total_influence,
)
from .config import get_settings, override_settings
from .const import DEFAULT_BOOST, DEFAULT_CONFIDENCE, DEFAULT_SEED
from .construct import Pipeline, PipelineConfig
from .corpus import (
    describe,
    dump_protocol,
    one_round_protocol,
    parse_protocol,
    two_round_corpus,
)
from .exceptions import (
    CapacityError,
    CoinflipLabError,
    InvariantViolation,
    ScheduleError,
    SpecParseError,
)
from .models import AttackReport, ExperimentRow, ProcessTrace
from .protocol import (
    Domain,
    EvalMode,
    ProtocolSpec,
    draw_transcript,
    exact_adversary_value,
    induced_round_function,
    leader_coin_check,
    monte_carlo_value,
    resilience_check,
)
from .stats import as_fraction
from .utils.output import (
    format_coalition,
    format_value,
    output_json,
    print_error,
    print_heading,
    write_report,
    write_rows,
)
from .utils.table import print_row_table

_LOGGER = logging.getLogger(__name__)

#: Exit code per failure class; the first matching entry wins.
EXIT_CODES: tuple[tuple[type[CoinflipLabError], int], ...] = (
    (InvariantViolation, 3),
    (CapacityError, 4),
    (ScheduleError, 5),
    (CoinflipLabError, 2),
)


class FractionType(click.ParamType):
    """Accepts decimals (``0.25``) and exact fractions (``1/4``)."""

    name = "fraction"

    def convert(self, value: Any, param: click.Parameter | None, ctx: click.Context | None):
        if isinstance(value, Fraction):
            return value
        try:
            return as_fraction(value)
        except (TypeError, ValueError, ZeroDivisionError):
            self.fail(f"{value!r} is neither a decimal nor a p/q fraction", param, ctx)


FRACTION = FractionType()


def reports_errors(func: Callable) -> Callable:
    """Turn library errors into ``Error: ...`` on stderr and the matching exit code.

    An invariant violation still writes what it carries to ``--out`` (stdout when absent).
    """

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return func(*args, **kwargs)
        except CoinflipLabError as exc:
            if isinstance(exc, InvariantViolation):
                payload = {"error": str(exc), "report": exc.report, "trace": exc.trace}
                write_report(payload, kwargs.get("out") or "-")
            print_error(str(exc))
            code = next(code for kind, code in EXIT_CODES if isinstance(exc, kind))
            ctx.exit(code)

    return wrapper


@click.group()
@click.option(
    "-v",
    "--verbose",
    count=True,
    help="Increase verbosity: -v for WARNING, -vv for INFO, -vvv for DEBUG.",
)
@click.option("--exact-budget", type=int, help="Largest transcript size solved exactly.")
@click.option("--max-arity", type=int, help="Largest truth table arity.")
@click.option(
    "--threads",
    type=click.IntRange(min=1),
    envvar="COINFLIP_LAB_THREADS",
    help="Worker threads for Monte Carlo and candidate search.",
)
@click.option(
    "--format",
    "output_format",
    type=click.Choice(["text", "json", "csv"], case_sensitive=False),
    default="text",
    help="Summary format on standard output.",
)
@click.pass_context
def cli(
    ctx,
    verbose: int,
    exact_budget: int | None,
    max_arity: int | None,
    threads: int | None,
    output_format: str,
):
    """Attack and build collective coin-flipping protocols."""
    log_level = logging.ERROR
    if verbose == 1:
        log_level = logging.WARNING
    elif verbose == 2:
        log_level = logging.INFO
    elif verbose >= 3:
        log_level = logging.DEBUG

    # stderr keeps `--out -` a clean JSON stream
    logging.basicConfig(
        level=log_level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
        force=True,
    )

    ctx.ensure_object(dict)
    ctx.obj["OUTPUT_FORMAT"] = output_format.lower()
    ctx.with_resource(
        override_settings(exact_budget=exact_budget, max_arity=max_arity, threads=threads)
    )


def _load_function(spec: str) -> BooleanFunction:
    path = Path(spec)
    if path.is_file():
        try:
            return load_function(path.read_text())
        except OSError as exc:
            raise SpecParseError(f"cannot read {path}: {exc}") from exc
    return load_function(spec)


def _emit(ctx: click.Context, data: Any, out: str | None, show: Callable[[], None]) -> None:
    """Write the full report, then the summary unless the report went to stdout."""
    write_report(data, out)
    if out == "-":
        return
    if not output_json(ctx, data):
        show()


@cli.command()
@click.argument("spec")
@click.option("--out", help="Write the JSON report here; '-' for stdout.")
@click.pass_context
@reports_errors
def influence(ctx, spec: str, out: str | None):
    """Per-coordinate influences of a Boolean function (builtin id or truth-table file)."""
    f = _load_function(spec)
    values = influences(f)
    p1 = prob(f, 1)
    data = {
        "function": spec,
        "arity": f.arity,
        "prob": p1,
        "influences": values,
        "total_influence": total_influence(f),
    }

    def show() -> None:
        print_row_table(
            ["Coordinate", "Influence"],
            [(str(i), format_value(v)) for i, v in enumerate(values, start=1)],
            title=f"{spec}: Pr[f=1] = {format_value(p1)}",
        )
        click.echo(f"Total influence: {format_value(data['total_influence'])}")

    _emit(ctx, data, out, show)


@cli.command()
@click.pass_context
def protocols(ctx):
    """List the builtin protocols."""
    rows = describe()
    if output_json(ctx, [{"name": n, "kind": k, "summary": s} for n, k, s in rows]):
        return
    print_row_table(["Name", "Kind", "Summary"], rows)


# --- attacks ----------------------------------------------------------------------


def attack_options(func: Callable) -> Callable:
    """Options shared by every attack subcommand."""
    options = [
        click.option("--gamma", type=FRACTION, default="1/4", show_default=True),
        click.option("--h", "h", type=int, help="Heavy threshold parameter (influence >= 2/h)."),
        click.option("--c", "c", type=int, help="Chisel stops once every support has <= c."),
        click.option("--r", "r", type=int, help="Step budget of the heavy/random process."),
        click.option("--delta", type=FRACTION, default="1/3", show_default=True),
        click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True),
        click.option(
            "--mode",
            type=click.Choice(["paper", "formula", "desk"], case_sensitive=False),
            default="desk",
            show_default=True,
        ),
        click.option("--boost", type=FRACTION, default=DEFAULT_BOOST, show_default=True),
        click.option("--candidates", type=int, default=50, show_default=True),
        click.option("--out", help="Write the JSON report here; '-' for stdout."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _attack_params(arity: int, rounds: int, opts: dict[str, Any]) -> AttackParams:
    extra = {"boost": opts["boost"], "candidates": opts["candidates"]}
    if AttackMode(opts["mode"]) is AttackMode.FORMULA:
        return AttackParams.from_formula(arity, rounds, opts["gamma"], opts["delta"], **extra)
    return AttackParams.desk(
        arity, opts["gamma"], opts["delta"], h=opts["h"], c=opts["c"], r=opts["r"], **extra
    )


def _attack_row(report: AttackReport) -> ExperimentRow:
    assert report.verified_value is not None
    return ExperimentRow(
        protocol=report.protocol,
        players=report.players,
        k=report.rounds,
        coalition=report.coalition,
        outcome=str(report.outcome),
        value=report.verified_value,
        mode=report.verification,
        seed=report.seed,
    )


def _show_attack(ctx: click.Context, report: AttackReport) -> Callable[[], None]:
    def show() -> None:
        if ctx.obj["OUTPUT_FORMAT"] == "csv":
            write_rows([_attack_row(report)], None, "csv")
            return
        print_heading(f"Attack on {report.protocol} toward {report.outcome}")
        lines = [
            ("B_R", format_coalition(report.b_r)),
            ("B_H", format_coalition(report.b_h)),
            ("B_I", format_coalition(report.b_i)),
            ("Coalition", format_coalition(report.coalition)),
            ("Size", str(report.size)),
            ("Claimed value", format_value(report.claimed_value)),
            ("Verified value", format_value(report.verified_value)),
            ("Seed", str(report.seed)),
        ]
        if report.bit_coalition is not None:
            lines.insert(4, ("Bit coalition", format_coalition(report.bit_coalition)))
            lines.append(("Bit-level value", format_value(report.bit_value)))
        for label, value in lines:
            click.echo(f"  {label}: {value}")

    return show


def _function_report(
    spec: str, f: BooleanFunction, trace: ProcessTrace, gamma: Fraction, seed: int, params: dict
) -> AttackReport:
    verified = bias_value(f, trace.coalition, trace.outcome)
    oracle: Fraction | None = None
    if f.arity <= get_settings().exact_budget:
        oracle = exact_adversary_value(one_round_protocol(f), trace.coalition, trace.outcome)
    else:
        _LOGGER.info("Protocol oracle skipped: arity %d exceeds EXACT_BUDGET", f.arity)
    report = AttackReport(
        protocol=spec,
        players=f.arity,
        rounds=1,
        outcome=trace.outcome,
        gamma=gamma,
        seed=seed,
        b_r=trace.b_r,
        b_h=trace.b_h,
        coalition=trace.coalition,
        claimed_value=trace.final_prob,
        verified_value=verified,
        params=params,
        events=[dict(step) for step in trace.steps],
    )
    if verified != trace.final_prob or not trace.success:
        raise InvariantViolation(
            f"verified value {verified} (claimed {trace.final_prob}) misses {trace.target}",
            trace=report.events,
            report=report,
        )
    if oracle is not None and oracle != verified:
        raise InvariantViolation(
            f"one-round protocol oracle gives {oracle}, function oracle {verified}",
            trace=report.events,
            report=report,
        )
    return report


@cli.group()
def attack():
    """Find coalitions that bias functions and protocols."""


@attack.command("kkl")
@click.option("--fn", "fn_spec", required=True, help="Builtin id or truth-table file.")
@click.option("--outcome", type=click.IntRange(0, 1), default=1, show_default=True)
@attack_options
@click.pass_context
@reports_errors
def attack_kkl(ctx, fn_spec: str, outcome: int, **opts):
    """Greedy attack on a single Boolean function."""
    f = _load_function(fn_spec)
    trace = kkl_greedy(f, outcome, opts["gamma"])
    report = _function_report(
        fn_spec, f, trace, opts["gamma"], opts["seed"], {"gamma": opts["gamma"]}
    )
    _emit(ctx, report, opts["out"], _show_attack(ctx, report))


@attack.command("process")
@click.option("--fn", "fn_spec", required=True, help="Builtin id or truth-table file.")
@click.option("--outcome", type=click.IntRange(0, 1), default=1, show_default=True)
@attack_options
@click.pass_context
@reports_errors
def attack_process(ctx, fn_spec: str, outcome: int, **opts):
    """Heavy/random corruption process on a single Boolean function."""
    f = _load_function(fn_spec)
    params = _attack_params(f.arity, 1, opts)
    trace = semi_random_process(f, outcome, params, np.random.default_rng(opts["seed"]))
    report = _function_report(
        fn_spec, f, trace, params.gamma, opts["seed"], params.as_dict()
    )
    _emit(ctx, report, opts["out"], _show_attack(ctx, report))


@attack.command("family")
@click.option("--fn", "fn_specs", multiple=True, help="Family member; repeat for each.")
@click.option(
    "--from-protocol",
    "protocol_spec",
    help="Use the last-round functions of a two-round protocol as the family.",
)
@click.option("--outcome", type=click.IntRange(0, 1), default=1, show_default=True)
@attack_options
@click.pass_context
@reports_errors
def attack_family(ctx, fn_specs: tuple[str, ...], protocol_spec: str | None, outcome, **opts):
    """One common random set for a whole family of functions."""
    if protocol_spec:
        p = parse_protocol(protocol_spec)
        if p.rounds != 2:
            raise SpecParseError(f"{p.name} has {p.rounds} rounds; --from-protocol needs 2")
        prefixes = range(1 << p.widths[0])
        labels = [f"{p.name}|{alpha}" for alpha in prefixes]
        family = [(induced_round_function(p, (alpha,)), outcome) for alpha in prefixes]
    elif fn_specs:
        labels = list(fn_specs)
        family = [(_load_function(spec), outcome) for spec in fn_specs]
    else:
        raise SpecParseError("give at least one --fn or --from-protocol")

    params = _attack_params(family[0][0].arity, 1, opts)
    result = family_common_set(family, params, np.random.default_rng(opts["seed"]))
    data = {"seed": opts["seed"], "params": params.as_dict(), "labels": labels, **dict(result)}

    def show() -> None:
        if ctx.obj["OUTPUT_FORMAT"] == "csv":
            rows = [
                ExperimentRow(
                    protocol=labels[m.index],
                    players=family[m.index][0].arity,
                    k=1,
                    coalition=tuple(sorted(set(result.b_r) | set(m.b_h or ()))),
                    outcome=str(m.outcome),
                    value=m.value,
                    mode="exact",
                    seed=opts["seed"],
                )
                for m in result.members
            ]
            write_rows(rows, None, "csv")
            return
        print_heading(f"Common random set over {len(family)} functions")
        click.echo(f"  B_R: {format_coalition(result.b_r)}")
        click.echo(f"  Coverage: {format_value(result.coverage)}")
        click.echo(f"  Candidate: {result.candidate + 1} of {result.candidates}")
        print_row_table(
            ["Member", "Heavy set", "Value"],
            [
                (
                    labels[m.index],
                    "-" if m.b_h is None else format_coalition(m.b_h),
                    format_value(m.value),
                )
                for m in result.members
            ],
        )

    _emit(ctx, data, opts["out"], show)


@attack.command("protocol")
@click.option("--spec", "spec", required=True, help="Spec file, inline JSON or name:players[:k].")
@attack_options
@click.pass_context
@reports_errors
def attack_protocol(ctx, spec: str, **opts):
    """Bias a one-bit-per-round protocol toward 1."""
    p = parse_protocol(spec)
    params = _attack_params(p.widths[-1], p.rounds, opts)
    report = bias_protocol(p, opts["gamma"], params, opts["seed"])
    _emit(ctx, report, opts["out"], _show_attack(ctx, report))


@attack.command("multibit")
@click.option("--spec", "spec", required=True, help="Spec file, inline JSON or name:players[:k].")
@attack_options
@click.pass_context
@reports_errors
def attack_multibit(ctx, spec: str, **opts):
    """Bias a protocol at bit level, then map corrupted bits to their players."""
    p = parse_protocol(spec)
    params = _attack_params(p.widths[-1], p.rounds, opts)
    report = bias_protocol_multibit(p, opts["gamma"], params, opts["seed"])
    _emit(ctx, report, opts["out"], _show_attack(ctx, report))


@attack.command("probe")
@click.option("--spec", "specs", multiple=True, help="Protocol to probe; defaults to a corpus.")
@click.option("--budget-fraction", type=FRACTION, default="1/2", show_default=True)
@attack_options
@click.pass_context
@reports_errors
def attack_probe(ctx, specs: tuple[str, ...], budget_fraction: Fraction, **opts):
    """Attack a set of small protocols and report coalition sizes against a budget."""
    corpus = [parse_protocol(s) for s in specs] if specs else two_round_corpus()
    arity = min(p.widths[-1] for p in corpus)
    params = _attack_params(arity, max(p.rounds for p in corpus), opts)
    rows = round_lb_probe(corpus, opts["gamma"], params, budget_fraction, opts["seed"])
    fmt = "json" if ctx.obj["OUTPUT_FORMAT"] == "json" else "csv"
    if ctx.obj["OUTPUT_FORMAT"] == "text" and opts["out"] is None:
        print_row_table(
            ["Protocol", "Players", "k", "|B|", "Value", "Within budget"],
            [
                (
                    r.protocol,
                    str(r.players),
                    str(r.k),
                    str(len(r.coalition)),
                    format_value(r.value),
                    "yes" if r.within_budget else "no",
                )
                for r in rows
            ],
            right=(1, 2, 3),
        )
        return
    write_rows(rows, opts["out"], fmt)


# --- construction -----------------------------------------------------------------


def _parse_stage(text: str) -> dict[str, Any]:
    fields = text.split(":")
    if len(fields) not in (2, 3):
        raise SpecParseError(f"stage must be T:BETA[:DELTA], got {text!r}")
    try:
        stage: dict[str, Any] = {"t": int(fields[0]), "beta": int(fields[1])}
        if len(fields) == 3:
            stage["delta"] = float(fields[2])
    except ValueError:
        raise SpecParseError(f"stage {text!r}: T and BETA must be integers") from None
    return stage


@cli.command()
@click.option("--k", "rounds", type=int, default=2, show_default=True)
@click.option("--players", type=int, required=True)
@click.option("--gamma", type=FRACTION, default="1/4", show_default=True)
@click.option(
    "--stage",
    "stages",
    multiple=True,
    help="Explicit stage T:BETA[:DELTA]; repeat for k - 1 stages. Default: rounded schedule.",
)
@click.option("--resilient", default="auto", show_default=True, help="Last-round function id.")
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--simulate", type=int, help="Estimate Pr[coin = 1] from this many honest runs.")
@click.option("--bad", "bad_players", type=int, multiple=True, help="Bad player for the dump.")
@click.option("--dump-assemblies", type=click.Path(dir_okay=False), help="Assembly trace file.")
@click.option(
    "--out",
    help="Write the protocol spec here; '-' for stdout. Default: stdout, unless --simulate.",
)
@click.pass_context
@reports_errors
def build(
    ctx,
    rounds: int,
    players: int,
    gamma: Fraction,
    stages: tuple[str, ...],
    resilient: str,
    seed: int,
    simulate: int | None,
    bad_players: tuple[int, ...],
    dump_assemblies: str | None,
    out: str | None,
):
    """Build a lightest-bin pipeline protocol and optionally simulate it."""
    params: dict[str, Any] = {"gamma": str(gamma), "resilient": resilient}
    if stages:
        params["stages"] = [_parse_stage(s) for s in stages]
    pipeline = Pipeline(PipelineConfig.from_params(players, rounds, params), players)
    p = pipeline.protocol()
    document = dump_protocol(p)
    if out is None and simulate:
        click.echo("Spec document not written; pass --out PATH or --out - to keep it.", err=True)
    write_report(document, out if out is not None or simulate else "-")

    if dump_assemblies:
        transcript = draw_transcript(p, np.random.default_rng(seed))
        history = pipeline.trace_assemblies(transcript, bad_players)
        trace = {
            "seed": seed,
            "transcript": list(transcript),
            "output": pipeline.trace_output(transcript, bad_players),
            "assemblies": [a.snapshot() for a in history],
        }
        write_report(trace, dump_assemblies)

    if simulate:
        estimate = monte_carlo_value(p, None, 1, simulate, seed, DEFAULT_CONFIDENCE)
        row = ExperimentRow(
            protocol=p.name,
            players=players,
            k=rounds,
            coalition=(),
            outcome="1",
            value=estimate.fraction,
            mode="mc",
            trials=estimate.trials,
            seed=seed,
            ci=estimate.ci_halfwidth,
        )
        if ctx.obj["OUTPUT_FORMAT"] == "text":
            click.echo(
                f"Pr[coin=1] ~ {estimate.estimate:.6f} +/- {estimate.ci_halfwidth:.6f} "
                f"({estimate.trials} runs, seed {seed}, resilient {pipeline.fn_id})"
            )
        else:
            write_rows([row], None, ctx.obj["OUTPUT_FORMAT"])


@cli.command()
@click.option("--spec", "spec", required=True, help="Spec file, inline JSON or name:players[:k].")
@click.option("--b", "b", type=int, required=True, help="Coalition size.")
@click.option("--gamma", type=FRACTION, default="1/4", show_default=True)
@click.option(
    "--mode", type=click.Choice(["exact", "mc"], case_sensitive=False), default="exact"
)
@click.option("--trials", type=int, default=10_000, show_default=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--out", help="Write the JSON report here; '-' for stdout.")
@click.pass_context
@reports_errors
def verify(ctx, spec: str, b: int, gamma: Fraction, mode: str, trials: int, seed: int, out):
    """Worst coalition of size b and whether the protocol resists it."""
    p = parse_protocol(spec)
    report = resilience_check(p, b, gamma, EvalMode(mode.lower()), trials, seed)
    value = report.value
    exact = value if isinstance(value, Fraction) else Fraction(value).limit_denominator(trials)
    row = ExperimentRow(
        protocol=report.protocol,
        players=report.players,
        k=report.rounds,
        coalition=report.worst_coalition,
        outcome=report.worst_outcome,
        value=exact,
        mode=report.mode,
        trials=report.trials,
        seed=report.seed,
        ci=report.ci_halfwidth,
    )

    def show() -> None:
        if ctx.obj["OUTPUT_FORMAT"] == "csv":
            write_rows([row], None, "csv")
            return
        print_heading(f"Resilience of {report.protocol} against {report.b} players")
        click.echo(f"  Worst coalition: {format_coalition(report.worst_coalition)}")
        click.echo(f"  Outcome: {report.worst_outcome}")
        suffix = " (flooding lower bound)" if report.lower_bound else ""
        click.echo(f"  Value: {format_value(report.value)}{suffix}")
        if report.ci_halfwidth is not None:
            click.echo(f"  CI half-width: {report.ci_halfwidth:.6f}")
        click.echo(f"  Resilient at gamma={report.gamma}: {'yes' if report.resilient else 'no'}")

    _emit(ctx, report, out, show)


@cli.command()
@click.option("--spec", "spec", required=True, help="Leader election protocol.")
@click.option("--b", "b", type=int, required=True, help="Coalition size.")
@click.option("--out", help="Write the JSON report here; '-' for stdout.")
@click.pass_context
@reports_errors
def leader(ctx, spec: str, b: int, out: str | None):
    """Compare a leader election protocol with the coin protocol derived from it."""
    p: ProtocolSpec = parse_protocol(spec)
    if p.domain is not Domain.LEADER:
        raise SpecParseError(f"{p.name} is a {p.domain} protocol, not a leader election")
    limit = get_settings().max_coalitions
    if math.comb(p.players, b) > limit:
        raise CapacityError(
            f"{math.comb(p.players, b)} coalitions exceed MAX_COALITIONS={limit}",
            bound="MAX_COALITIONS",
            limit=limit,
        )

    checks = []
    for members in itertools.combinations(range(1, p.players + 1), b):
        check = leader_coin_check(p, members)
        checks.append({"coalition": members, **check._asdict()})
    rows = [
        ExperimentRow(
            protocol=p.name,
            players=p.players,
            k=p.rounds + 1,
            coalition=c["coalition"],
            outcome="coin",
            value=max(c["coin_values"]),
            mode="exact",
        )
        for c in checks
    ]
    data = {"protocol": p.name, "players": p.players, "b": b, "checks": checks}
    failed = [c for c in checks if not (c["coin_bound_holds"] and c["leader_failure_implied"])]
    if failed:
        raise InvariantViolation(
            f"leader/coin relation fails for {len(failed)} coalitions", report=data
        )

    def show() -> None:
        if ctx.obj["OUTPUT_FORMAT"] == "csv":
            write_rows(rows, None, "csv")
            return
        print_row_table(
            ["Coalition", "Good leader", "Coin to 0", "Coin to 1", "Bound"],
            [
                (
                    format_coalition(c["coalition"]),
                    format_value(c["good_leader"]),
                    format_value(c["coin_values"][0]),
                    format_value(c["coin_values"][1]),
                    format_value(c["bound"]),
                )
                for c in checks
            ],
            title=f"{p.name}: leader election against {b} players",
        )

    _emit(ctx, data, out, show)
