"""Tests for coinflip_lab.utils.output."""

import json
from fractions import Fraction

import click

from coinflip_lab.models import ExperimentRow
from coinflip_lab.utils.output import (
    csv_text,
    format_coalition,
    format_heading_lines,
    format_row,
    format_value,
    output_json,
    print_error,
    write_report,
    write_rows,
)


class TestFormatHeadingLines:
    def test_returns_title_and_underline(self):
        assert format_heading_lines("Influences") == ["Influences", "=========="]

    def test_strips_whitespace(self):
        assert format_heading_lines("  Attack  ") == ["Attack", "======"]


class TestFormatRow:
    def test_primary_only(self):
        assert format_row("B_R") == "B_R"

    def test_joins_non_empty_parts(self):
        assert format_row("B_R", "{1, 2}", "2 players") == "B_R | {1, 2} | 2 players"

    def test_ignores_blank_parts(self):
        assert format_row("B_R", "", "  ", None) == "B_R"


class TestFormatValue:
    def test_exact(self):
        assert format_value(Fraction(11, 16)) == "11/16 (0.687500)"

    def test_integral(self):
        assert format_value(Fraction(1)) == "1"

    def test_estimate(self):
        assert format_value(0.25) == "0.250000"

    def test_missing(self):
        assert format_value(None) == "-"


class TestFormatCoalition:
    def test_members(self):
        assert format_coalition((1, 4)) == "{1, 4}"

    def test_empty(self):
        assert format_coalition(()) == "{}"


def _rows():
    return [
        ExperimentRow("maj", 5, 1, (1,), "1", Fraction(11, 16), "exact"),
        ExperimentRow("maj", 5, 1, (1,), "1", Fraction(687, 1000), "mc", 1000, 3, 0.1),
    ]


class TestCsvText:
    def test_header_and_rows(self):
        lines = csv_text(_rows()).splitlines()
        assert lines[0] == (
            "protocol,players,k,coalition,outcome,value_num,value_den,mode,trials,seed,ci"
        )
        assert lines[1] == "maj,5,1,1,1,11,16,exact,,,"
        assert lines[2] == "maj,5,1,1,1,687,1000,mc,1000,3,0.1"


class TestWriters:
    def test_write_report_to_file(self, tmp_path):
        out = tmp_path / "nested" / "report.json"
        write_report({"value": Fraction(1, 2)}, str(out))
        assert json.loads(out.read_text()) == {"value": "1/2"}

    def test_write_report_to_stdout(self, capsys):
        write_report({"b": [1]}, "-")
        assert json.loads(capsys.readouterr().out) == {"b": [1]}

    def test_write_report_without_target(self, capsys):
        write_report({"b": [1]}, None)
        assert capsys.readouterr().out == ""

    def test_write_rows_csv_to_stdout(self, capsys):
        write_rows(_rows(), None, "csv")
        assert capsys.readouterr().out.startswith("protocol,players")

    def test_write_rows_json_to_file(self, tmp_path):
        out = tmp_path / "rows.json"
        write_rows(_rows(), str(out), "json")
        data = json.loads(out.read_text())
        assert data[0]["value"] == "11/16"
        assert data[1]["trials"] == 1000


class TestOutputJson:
    def test_emits_when_json_format(self, capsys):
        ctx = click.Context(click.Command("x"), obj={"OUTPUT_FORMAT": "json"})
        assert output_json(ctx, {"a": Fraction(1, 3)})
        assert json.loads(capsys.readouterr().out) == {"a": "1/3"}

    def test_skips_text_format(self, capsys):
        ctx = click.Context(click.Command("x"), obj={"OUTPUT_FORMAT": "text"})
        assert not output_json(ctx, {"a": 1})
        assert capsys.readouterr().out == ""


def test_print_error(capsys):
    print_error("boom")
    assert capsys.readouterr().err == "Error: boom\n"
