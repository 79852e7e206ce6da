"""Shared helpers for CLI output: headings, errors and report writers."""

import csv
import io
from collections.abc import Iterable
from fractions import Fraction
from pathlib import Path
from typing import Any

import click

from ..models import CSV_COLUMNS, ExperimentRow
from .json import to_json


def output_json(ctx: click.Context, data: Any) -> bool:
    """If ``--format json`` is active, emit JSON and return ``True``."""
    if ctx.obj.get("OUTPUT_FORMAT") == "json":
        click.echo(to_json(data, indent=2))
        return True
    return False


def format_heading_lines(title: str) -> list[str]:
    """Return heading lines with a title and matching underline."""
    normalized = title.strip()
    return [normalized, "=" * len(normalized)]


def print_heading(title: str) -> None:
    for line in format_heading_lines(title):
        click.echo(line)


def print_error(message: str) -> None:
    """Print the shared error sentence on standard error."""
    click.echo(f"Error: {message}", err=True)


def format_value(value: Fraction | float | None) -> str:
    """Exact values as ``p/q (decimal)``, estimates as plain decimals."""
    if value is None:
        return "-"
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value} ({float(value):.6f})"
    return f"{value:.6f}"


def format_coalition(members: Iterable[int]) -> str:
    members = list(members)
    return "{" + ", ".join(str(m) for m in members) + "}" if members else "{}"


def format_row(primary: str, *rest: str | None) -> str:
    """Format a row as 'primary | secondary | ...' while skipping blanks."""
    parts = [primary]
    parts.extend(value.strip() for value in rest if value and value.strip())
    return " | ".join(parts)


def csv_text(rows: Iterable[ExperimentRow]) -> str:
    """Summary rows as CSV text with the fixed column order."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.csv_cells())
    return buffer.getvalue()


def write_report(data: Any, out: str | None) -> None:
    """Write a JSON report to ``out``; ``-`` streams it to standard output."""
    if out is None:
        return
    text = to_json(data, indent=2) + "\n"
    if out == "-":
        click.echo(text, nl=False)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def write_rows(rows: list[ExperimentRow], out: str | None, fmt: str) -> None:
    """Summary rows as CSV or JSON, to ``out`` or standard output."""
    text = csv_text(rows) if fmt == "csv" else to_json([dict(r) for r in rows], indent=2) + "\n"
    if out is None or out == "-":
        click.echo(text, nl=False)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
