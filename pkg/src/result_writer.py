"""
Result Writer

Writes sweep rows to CSV and the run manifest to JSON. Every analytic row is
re-checked against the report invariants before it reaches the file. Rows go
to a sibling .part file that replaces the CSV only when the run succeeds, so a
failed run never leaves a truncated or header-only result behind.
"""

import csv
import json
import os

from .errors import ValidationError
from .result_formatter import ResultFormatter


class ResultWriter:
    """CSV + manifest sink for one run."""

    def __init__(self, csv_path, manifest_path, columns):
        """Initialize the writer; nothing is opened until open()."""
        self.csv_path = csv_path
        self.manifest_path = manifest_path
        self.columns = list(columns)
        self.partial_path = f"{csv_path}.part"
        self.file = None
        self.writer = None
        self.rows_written = 0

    @staticmethod
    def _ensure_directory(path):
        directory = os.path.dirname(path)
        if directory and not os.path.exists(directory):
            os.makedirs(directory)

    def open(self):
        """Create the partial CSV file and write the header."""
        try:
            self._ensure_directory(self.csv_path)
            self.file = open(self.partial_path, 'w', newline='')
        except OSError as e:
            raise ValidationError(f"cannot write output {self.csv_path}: {e}")
        self.writer = csv.writer(self.file)
        self.writer.writerow(self.columns)
        print(f"📝 Writing results to: {self.csv_path}")
        return self

    def write_row(self, row, report=None):
        """Write one grid row, re-validating the analytical report first."""
        if self.writer is None:
            raise RuntimeError("ResultWriter.open() must be called before write_row()")
        if report is not None:
            problems = report.invariant_errors()
            if problems:
                raise ValidationError([f"row {self.rows_written}: {p}" for p in problems])
        self.writer.writerow(ResultFormatter.csv_values(row, self.columns))
        self.rows_written += 1

    def write_manifest(self, manifest):
        try:
            self._ensure_directory(self.manifest_path)
            with open(self.manifest_path, 'w') as f:
                json.dump(manifest, f, indent=2)
        except OSError as e:
            raise ValidationError(f"cannot write manifest {self.manifest_path}: {e}")
        print(f"📝 Run manifest saved to: {self.manifest_path}")

    def close(self):
        if self.file:
            self.file.close()
            self.file = None
            self.writer = None

    def commit(self):
        """Close and move the finished rows onto the CSV path."""
        self.close()
        try:
            os.replace(self.partial_path, self.csv_path)
        except OSError as e:
            raise ValidationError(f"cannot write output {self.csv_path}: {e}")

    def discard(self):
        """Close and drop the partial rows; an existing CSV is left untouched."""
        self.close()
        if os.path.exists(self.partial_path):
            os.remove(self.partial_path)
            print(f"🗑️  Discarded partial results: {self.partial_path}")

    def __enter__(self):
        return self.open()

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.commit()
        else:
            self.discard()
        return False
