import sys
from collections.abc import Collection, Sequence

import click


def _print_rows_with_rich(
    headers: Sequence[str],
    rows: Sequence[Sequence[str]],
    title: str | None,
    right: Collection[int],
) -> bool:
    """Render with ``rich``; ``False`` when it is not installed."""
    try:
        from rich.console import Console  # type: ignore[import-not-found]
        from rich.table import Table  # type: ignore[import-not-found]
    except ImportError:
        return False

    table = Table(title=title, header_style="bold cyan")
    for index, header in enumerate(headers):
        table.add_column(header, justify="right" if index in right else "left", overflow="fold")
    for row in rows:
        table.add_row(*row)
    Console().print(table)
    return True


def plain_table_lines(
    headers: Sequence[str], rows: Sequence[Sequence[str]], right: Collection[int] = ()
) -> list[str]:
    """Fixed-width lines: header, dash rule, then one line per row, cells split by `` | ``."""
    for row in rows:
        if len(row) != len(headers):
            raise ValueError(f"row {list(row)} has {len(row)} cells, expected {len(headers)}")
    widths = [max(len(cell) for cell in column) for column in zip(headers, *rows, strict=True)]

    def render(cells: Sequence[str]) -> str:
        padded = [
            cell.rjust(width) if index in right else cell.ljust(width)
            for index, (cell, width) in enumerate(zip(cells, widths, strict=True))
        ]
        return " | ".join(padded).rstrip()

    header_line = render(headers)
    return [header_line, "-" * len(header_line), *(render(row) for row in rows)]


def print_row_table(
    headers: Sequence[str],
    rows: Sequence[Sequence[str]],
    title: str | None = None,
    plain: bool = False,
    right: Collection[int] = (),
) -> None:
    """Print a header + rows table, rich on a terminal and plain text otherwise.

    ``right`` holds the indices of right-aligned (numeric) columns. Captured and piped
    output is always plain so reports stay byte-stable.
    """
    if not rows:
        return
    plain = plain or not sys.stdout.isatty()
    if not plain and _print_rows_with_rich(headers, rows, title, right):
        return
    if title:
        click.echo(title)
    for line in plain_table_lines(headers, rows, right):
        click.echo(line)
