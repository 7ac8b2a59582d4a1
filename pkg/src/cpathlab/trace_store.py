"""CSV trace store class for central path traces in cpathlab.

Provides the CSVTraceStore class for writing the per-point metrics of a traced path to a CSV file
and reading them back. Floats are written with their shortest round-trip representation.
"""

import csv
import logging
import os
from typing import Any, Dict, List, Optional, Sequence

INT_COLUMNS = ("step", "newton_iters")


class CSVTraceStore:
    """Store for trace rows in CSV format."""

    def __init__(self, logger: Optional[logging.Logger] = None):
        """Initialize the trace store with an optional logger.

        Args:
            logger (Optional[logging.Logger]): Logger instance to use. If None, a default logger is created.

        """
        if logger is not None and not isinstance(logger, logging.Logger):
            raise TypeError("logger must be an instance of logging.Logger or None")
        self.logger = logger or logging.getLogger(self.__class__.__name__)

    def save(self, rows: List[Dict[str, Any]], path: str, columns: Optional[Sequence[str]] = None) -> None:
        """Write trace rows to a CSV file.

        Args:
            rows (List[Dict[str, Any]]): One dict per path point.
            path (str): The path to the CSV file to write.
            columns (Optional[Sequence[str]]): Header; defaults to the keys of the first row.

        Raises:
            ValueError: If neither rows nor columns are given.
            RuntimeError: If the file cannot be written.

        """
        if columns is None:
            if not rows:
                raise ValueError("cannot infer the CSV header of an empty trace")
            columns = list(rows[0])

        dir_name = os.path.dirname(path)
        if dir_name:
            os.makedirs(dir_name, exist_ok=True)

        try:
            with open(path, "w", encoding="utf-8", newline="") as csv_file:
                writer = csv.DictWriter(csv_file, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
                writer.writeheader()
                for row in rows:
                    writer.writerow({key: self._render(row.get(key)) for key in columns})
            self.logger.info(f"Trace with {len(rows)} points saved as CSV to {path}")
        except OSError as e:
            raise RuntimeError(f"Failed to write CSV file {path}: {e}") from e

    def load(self, path: str) -> List[Dict[str, Any]]:
        """Read trace rows from a CSV file.

        ``step`` and ``newton_iters`` are returned as int, every other column as float.

        Raises:
            RuntimeError: If the file cannot be read or a value is not numeric.

        """
        try:
            with open(path, "r", encoding="utf-8", newline="") as csv_file:
                rows = list(csv.DictReader(csv_file))
        except OSError as e:
            raise RuntimeError(f"Failed to read CSV file {path}: {e}") from e
        try:
            return [{key: int(value) if key in INT_COLUMNS else float(value) for key, value in row.items()}
                    for row in rows]
        except (TypeError, ValueError) as e:
            raise RuntimeError(f"Invalid value in CSV file {path}: {e}") from e

    @staticmethod
    def _render(value: Any) -> str:
        if value is None:
            return "nan"
        if isinstance(value, bool):
            return str(int(value))
        if isinstance(value, int):
            return str(value)
        return repr(float(value))
