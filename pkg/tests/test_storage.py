import json
import os

import pytest

import spinbus.storage as storage_module
from spinbus.exceptions.errors import ConvergenceError, StorageError
from spinbus.storage import ERROR_REPORT, MARKER, RunStorage


class TestAtomicWrite:
    """Writes go through a temp file and os.replace"""

    def test_write_and_read(self, tmp_path):
        storage = RunStorage(str(tmp_path / "run"))
        storage.write("table.csv", "a,b\n1,2\n")
        assert storage.read("table.csv") == "a,b\n1,2\n"

    def test_read_missing(self, tmp_path):
        assert RunStorage(str(tmp_path)).read("absent.csv") == ""

    def test_no_temp_files_left(self, tmp_path):
        storage = RunStorage(str(tmp_path))
        storage.write("one.csv", "x\n")
        storage.write("one.csv", "y\n")
        assert os.listdir(tmp_path) == ["one.csv"]
        assert storage.read("one.csv") == "y\n"

    def test_failed_replace_keeps_old_content(self, tmp_path, monkeypatch):
        storage = RunStorage(str(tmp_path))
        storage.write("one.csv", "old\n")

        def _fail(src, dst):
            raise OSError("disk full")

        monkeypatch.setattr(storage_module.os, "replace", _fail)
        with pytest.raises(StorageError, match="one.csv"):
            storage.write("one.csv", "new\n")
        monkeypatch.undo()

        assert storage.read("one.csv") == "old\n"
        assert sorted(os.listdir(tmp_path)) == ["one.csv"]

    def test_json_is_sorted(self, tmp_path):
        storage = RunStorage(str(tmp_path))
        storage.write_json("meta.json", {"b": 1, "a": 2})
        assert storage.read("meta.json") == '{\n  "a": 2,\n  "b": 1\n}\n'


class TestRunLifecycle:
    """RUN_INCOMPLETE marker and error report"""

    def test_begin_and_complete(self, tmp_path):
        storage = RunStorage(str(tmp_path))
        storage.begin("hash")
        assert storage.is_incomplete()
        assert (tmp_path / MARKER).read_text() == "hash\n"
        storage.complete()
        assert not storage.is_incomplete()

    def test_complete_without_begin(self, tmp_path):
        storage = RunStorage(str(tmp_path))
        storage.complete()
        assert not storage.is_incomplete()

    def test_fail_keeps_marker(self, tmp_path):
        storage = RunStorage(str(tmp_path))
        storage.begin()
        report = storage.fail(ConvergenceError("basis did not converge"), 3)
        assert storage.is_incomplete()
        written = json.loads((tmp_path / ERROR_REPORT).read_text())
        assert written["error"] == "ConvergenceError"
        assert written["exit_code"] == 3
        assert written == report

    def test_begin_drops_stale_report(self, tmp_path):
        storage = RunStorage(str(tmp_path))
        storage.fail(StorageError("earlier"), 4)
        storage.begin()
        assert not (tmp_path / ERROR_REPORT).exists()

    def test_uncreatable_folder(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(StorageError):
            RunStorage(str(blocker / "run"))
