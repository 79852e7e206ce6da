"""Tests for coinflip_lab.utils.table."""

from unittest.mock import patch

import pytest

from coinflip_lab.utils.table import plain_table_lines, print_row_table


class TestPrintRowTable:
    def test_plain_output(self, capsys):
        print_row_table(["Coordinate", "Influence"], [["1", "1/2"], ["2", "3/8"]], plain=True)
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "Coordinate | Influence"
        assert lines[1] == "-" * len(lines[0])
        assert lines[2] == "1          | 1/2"

    def test_title(self, capsys):
        print_row_table(["a"], [["x"]], title="Influences", plain=True)
        assert capsys.readouterr().out.splitlines()[0] == "Influences"

    def test_empty_rows_print_nothing(self, capsys):
        print_row_table(["a"], [], plain=True)
        assert capsys.readouterr().out == ""

    def test_piped_output_is_plain(self, capsys):
        with patch("coinflip_lab.utils.table._print_rows_with_rich") as rich:
            print_row_table(["a"], [["x"]])
        rich.assert_not_called()
        assert "x" in capsys.readouterr().out

    def test_falls_back_without_rich(self, capsys):
        with (
            patch("sys.stdout.isatty", return_value=True),
            patch("coinflip_lab.utils.table._print_rows_with_rich", return_value=False),
        ):
            print_row_table(["a"], [["x"]])
        assert capsys.readouterr().out.splitlines() == ["a", "-", "x"]

    def test_right_aligned_columns(self, capsys):
        print_row_table(
            ["Protocol", "Players"],
            [["parity-all", "4"], ["first-bit", "12"]],
            plain=True,
            right=(1,),
        )
        lines = capsys.readouterr().out.splitlines()
        assert lines[2] == "parity-all |       4"
        assert lines[3] == "first-bit  |      12"


class TestPlainTableLines:
    def test_widths_follow_the_longest_cell(self):
        lines = plain_table_lines(["k", "Value"], [["2", "7/8 (0.875000)"]])
        assert lines == ["k | Value", "-" * 9, "2 | 7/8 (0.875000)"]

    def test_ragged_row(self):
        with pytest.raises(ValueError, match="expected 2"):
            plain_table_lines(["a", "b"], [["x"]])
