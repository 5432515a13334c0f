import json
import math

import numpy as np
import pytest

from spinbus import __version__
from spinbus.exceptions.errors import StorageError
from spinbus.serialize import (
    ResultBundle,
    ResultTable,
    format_table,
    format_value,
    metadata,
    parse_table,
    read_table,
    write_bundle,
)
from spinbus.storage import RunStorage


def _table():
    table = ResultTable("spectrum", [("level", ""), ("energy", "GHz"), ("label", "")],
                        provenance="eigensolver.solve_chain")
    table.add_row(0, -1.25, "ground")
    table.add_row(1, 0.5, "first")
    return table


class TestFormatValue:
    """Cell formatting"""

    def test_integers_and_bools(self):
        assert format_value(3) == "3"
        assert format_value(np.int64(7)) == "7"
        assert format_value(True) == "1"
        assert format_value(np.bool_(False)) == "0"

    def test_floats(self):
        assert format_value(0.0) == "0.0"
        assert format_value(-0.0) == "-0.0"
        assert format_value(0.1) == "0.1"
        assert format_value(1 / 3) == "0.3333333333333333"
        assert format_value(np.float64(2.5e-9)) == "2.5e-09"

    def test_floats_read_back_exactly(self):
        for value in (1 / 3, 0.1 + 0.2, 2.0 ** -1074, 1.7976931348623157e308, -123456.78901234567):
            assert float(format_value(value)) == value

    def test_non_finite(self):
        assert format_value(math.nan) == "nan"
        assert format_value(math.inf) == "inf"

    def test_delimiter_rejected(self):
        with pytest.raises(StorageError):
            format_value("a,b")
        with pytest.raises(StorageError):
            format_value("a\nb")


class TestTables:
    """CSV form of result tables"""

    def test_header_carries_units(self):
        text = format_table(_table())
        assert text.splitlines()[0] == "level,energy[GHz],label"
        assert text.endswith("\n")

    def test_parse(self):
        parsed = parse_table(format_table(_table()), "spectrum")
        assert parsed == _table()
        assert parsed.column("energy") == [-1.25, 0.5]

    def test_round_trip_is_exact(self):
        table = ResultTable("sweep", [("x", "Phi0"), ("y", "")])
        table.add_row(1 / 3, 0.1 + 0.2)
        table.add_row(np.float64(2.0) ** 0.5, -1e-300)
        parsed = parse_table(format_table(table), "sweep")
        assert parsed.rows == [(1 / 3, 0.1 + 0.2), (2.0 ** 0.5, -1e-300)]

    def test_nan_cells_compare_equal(self):
        table = ResultTable("noise", [("linewidth", "GHz"), ("runs", "")])
        table.add_row(math.nan, 3)
        assert parse_table(format_table(table), "noise") == table
        other = ResultTable("noise", [("linewidth", "GHz"), ("runs", "")])
        other.add_row(0.0, 3)
        assert other != table

    def test_numeric_looking_text_kept(self):
        table = ResultTable("members", [("member", ""), ("slope", "")])
        table.add_row("0.5", 1.25)
        table.add_row("007", 2.5)
        assert table.text_columns() == ["member"]
        parsed = parse_table(format_table(table), "members", text_columns=["member"])
        assert parsed == table
        assert parse_table(format_table(table), "members").column("member") == [0.5, 7]

    def test_extra_cells_rejected(self):
        with pytest.raises(StorageError):
            parse_table("a,b\n1,2,3\n")

    def test_row_length_checked(self):
        with pytest.raises(StorageError):
            _table().add_row(2, 1.0)

    def test_unknown_column(self):
        with pytest.raises(StorageError):
            _table().column("width")

    def test_malformed_header(self):
        with pytest.raises(StorageError):
            parse_table("level,energy[GHz\n0,1\n")

    def test_empty(self):
        with pytest.raises(StorageError):
            parse_table("")

    def test_same_table_same_bytes(self):
        assert format_table(_table()) == format_table(_table())


class TestBundle:
    """Tables plus metadata in a run directory"""

    def _bundle(self):
        bundle = ResultBundle("spectrum", "ab" * 32, 5, started="t0", finished="t1")
        bundle.add(_table())
        bundle.notes["character_cache"] = "0 hits / 2 misses"
        return bundle

    def test_lookup(self):
        bundle = self._bundle()
        assert bundle.table("spectrum").name == "spectrum"
        with pytest.raises(StorageError):
            bundle.table("noise_levels")

    def test_metadata(self):
        doc = metadata(self._bundle())
        assert doc["tool"] == "spinbus"
        assert doc["version"] == __version__
        assert doc["config_hash"] == "ab" * 32
        assert doc["seed"] == 5
        assert doc["tables"][0] == {
            "name": "spectrum",
            "file": "spectrum.csv",
            "columns": ["level", "energy[GHz]", "label"],
            "rows": 2,
            "text_columns": ["label"],
            "provenance": "eigensolver.solve_chain",
        }
        assert doc["notes"] == {"character_cache": "0 hits / 2 misses"}
        assert "numpy" in doc and "scipy" in doc

    def test_write_and_read_back(self, tmp_path):
        storage = RunStorage(str(tmp_path))
        paths = write_bundle(self._bundle(), storage)
        assert [p.rsplit("/", 1)[-1] for p in paths] == ["spectrum.csv", "metadata.json"]
        assert read_table(storage, "spectrum") == _table()
        doc = json.loads((tmp_path / "metadata.json").read_text())
        assert doc["experiment"] == "spectrum"

    def test_text_columns_recorded_in_metadata(self, tmp_path):
        bundle = ResultBundle("members", "cd" * 32, 1)
        table = bundle.add(ResultTable("members", [("member", ""), ("slope", "")]))
        table.add_row("1.5", 0.25)
        storage = RunStorage(str(tmp_path))
        write_bundle(bundle, storage)
        assert read_table(storage, "members").column("member") == ["1.5"]
        assert read_table(storage, "members", text_columns=[]).column("member") == [1.5]

    def test_missing_table(self, tmp_path):
        with pytest.raises(StorageError):
            read_table(RunStorage(str(tmp_path)), "spectrum")
