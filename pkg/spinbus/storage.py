"""
Result directory I/O with atomic writes and an incomplete-run marker
"""

import json
import os
import tempfile
import time

from .exceptions.errors import StorageError

MARKER = "RUN_INCOMPLETE"
ERROR_REPORT = "error.json"


class RunStorage:
    """
    One output directory per run.

    begin() drops a RUN_INCOMPLETE marker before anything else is written;
    complete() removes it once every table and the metadata are in place.
    A directory that still holds the marker never counts as a finished
    result, and fail() leaves an error.json report next to it.
    """

    def __init__(self, folder):
        self.folder = folder
        self.marker_path = os.path.join(folder, MARKER)
        try:
            os.makedirs(folder, exist_ok=True)
        except OSError as e:
            raise StorageError(f"Cannot create output directory {folder}: {e}") from e

    def path(self, name):
        return os.path.join(self.folder, name)

    def read(self, name):
        path = self.path(name)
        if not os.path.exists(path):
            return ""
        try:
            with open(path, 'r', encoding='utf-8') as f:
                return f.read()
        except OSError as e:
            raise StorageError(f"Cannot read {path}: {e}") from e

    def write(self, name, content):
        """
        Atomic write: temp file in the same folder, then os.replace.

        Raises:
            StorageError: with the target path on any OS failure
        """
        target = self.path(name)
        folder = os.path.dirname(target)
        try:
            os.makedirs(folder, exist_ok=True)
            temp_fd, temp_path = tempfile.mkstemp(dir=folder, prefix='.tmp_')
        except OSError as e:
            raise StorageError(f"Cannot write {target}: {e}") from e

        try:
            with os.fdopen(temp_fd, 'w', encoding='utf-8', newline='') as f:
                f.write(content)
            os.replace(temp_path, target)
        except OSError as e:
            try:
                os.unlink(temp_path)
            except OSError:
                pass
            raise StorageError(f"Cannot write {target}: {e}") from e
        return target

    def write_json(self, name, data):
        return self.write(name, json.dumps(data, indent=2, sort_keys=True) + "\n")

    # ----------- Run lifecycle ------------

    def begin(self, config_hash=""):
        """Mark the run as in progress and drop any stale error report."""
        self.write(MARKER, f"{config_hash}\n")
        stale = self.path(ERROR_REPORT)
        if os.path.exists(stale):
            os.unlink(stale)

    def complete(self):
        try:
            if os.path.exists(self.marker_path):
                os.unlink(self.marker_path)
        except OSError as e:
            raise StorageError(f"Cannot remove {self.marker_path}: {e}") from e

    def fail(self, error, exit_code):
        """Write error.json; the marker stays in place."""
        report = {
            "error": type(error).__name__,
            "message": str(error),
            "exit_code": exit_code,
            "timestamp": time.strftime('%Y-%m-%dT%H:%M:%S'),
        }
        try:
            self.write_json(ERROR_REPORT, report)
        except StorageError:
            pass
        return report

    def is_incomplete(self):
        return os.path.exists(self.marker_path)
