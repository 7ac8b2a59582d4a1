"""JSON report store class for verification reports in cpathlab.

Provides the JSONReportStore class for saving verification reports deterministically and loading
them back as plain dicts. Non-finite floats are written as null.
"""

import json
import logging
import math
import os
from typing import Any, Dict, Optional, Union

import numpy as np

from cpathlab.verification import VerificationReport


def to_json_ready(value: Any) -> Any:
    """Convert numpy scalars and arrays to Python values and non-finite floats to None, recursively."""
    if isinstance(value, dict):
        return {str(k): to_json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_json_ready(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_json_ready(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


class JSONReportStore:
    """Store for verification reports in JSON format."""

    def __init__(self, logger: Optional[logging.Logger] = None):
        """Initialize the report store with an optional logger.

        Args:
            logger (Optional[logging.Logger]): Logger instance to use. If None, a default logger is created.

        """
        if logger is not None and not isinstance(logger, logging.Logger):
            raise TypeError("logger must be an instance of logging.Logger or None")
        self.logger = logger or logging.getLogger(self.__class__.__name__)

    @staticmethod
    def dumps(report: Union[VerificationReport, Dict[str, Any]]) -> str:
        """Return the JSON text of a report."""
        doc = report.to_dict() if isinstance(report, VerificationReport) else report
        return json.dumps(to_json_ready(doc), indent=2, sort_keys=False, allow_nan=False) + "\n"

    def save(self, report: Union[VerificationReport, Dict[str, Any]], path: str) -> None:
        """Save a verification report to a JSON file.

        Args:
            report (Union[VerificationReport, Dict[str, Any]]): The report or its dict form.
            path (str): The path to the JSON file to write.

        Raises:
            RuntimeError: If the file cannot be written.

        """
        text = self.dumps(report)

        dir_name = os.path.dirname(path)
        if dir_name:
            os.makedirs(dir_name, exist_ok=True)

        try:
            with open(path, "w", encoding="utf-8", newline="\n") as json_file:
                json_file.write(text)
            self.logger.info(f"Verification report saved as JSON to {path}")
        except OSError as e:
            raise RuntimeError(f"Failed to write JSON file {path}: {e}") from e

    def load(self, path: str) -> Dict[str, Any]:
        """Load a verification report as a dict.

        Raises:
            RuntimeError: If the file cannot be read or parsed, or lacks the report keys.

        """
        try:
            with open(path, "r", encoding="utf-8") as json_file:
                doc = json.load(json_file)
        except OSError as e:
            raise RuntimeError(f"Failed to read report data from JSON file {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise RuntimeError(f"Failed to parse JSON file {path}: {e}") from e
        if not isinstance(doc, dict) or not {"instance", "schedule", "experiments", "overall"} <= set(doc):
            raise RuntimeError(f"Invalid report structure in JSON file {path}")
        return doc
