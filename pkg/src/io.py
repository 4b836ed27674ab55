import json
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from src.errors import ValidationError
from src.functions import FunctionModel, model_from_json

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"


def load_json_object(source: str) -> dict[str, Any]:
    """
    Load a JSON object from inline text or from a file path.

    Args:
        source (str): Either a JSON object literal (starting with '{') or a path.

    Returns:
        dict: The parsed object.
    """
    text = source
    if not source.lstrip().startswith("{"):
        try:
            text = Path(source).read_text(encoding="utf-8")
            logger.info("Configuration successfully loaded from %s", source)
        except FileNotFoundError as e:
            logger.error("File not found at %s", source)
            raise ValidationError(f"File not found: {source}") from e
        except PermissionError as e:
            logger.error("Unable to read %s: permission denied", source)
            raise ValidationError(f"Permission denied: {source}") from e
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        logger.error("Unable to parse JSON from %s", source)
        raise ValidationError(
            f"Invalid JSON ({e.msg} at line {e.lineno}, column {e.colno})"
        ) from e
    if not isinstance(obj, dict):
        raise ValidationError("Expected a JSON object")
    return obj


def load_family(source: str) -> FunctionModel:
    """Build a FunctionModel from inline family JSON or a JSON file."""
    return model_from_json(load_json_object(source))


def _clean(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def to_json_text(obj: Any) -> str:
    """
    Serialize with non-finite floats as null; floats keep their shortest
    round-trip repr.
    """
    return json.dumps(_clean(obj), indent=2) + "\n"


def to_csv_text(df: pd.DataFrame) -> str:
    return df.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")


def write_text(text: str, filename: str) -> None:
    """
    Write a payload to disk with error handling.

    Args:
        text (str): Payload.
        filename (str): Destination file path.
    """
    try:
        Path(filename).write_text(text, encoding="utf-8", newline="\n")
        logger.info("Output successfully written to '%s'", filename)
    except PermissionError as e:
        logger.error("Unable to save '%s': permission denied", filename)
        raise ValidationError(f"Permission denied: {filename}") from e
    except FileNotFoundError as e:
        logger.error("Directory for '%s' not found", filename)
        raise ValidationError(f"Directory not found for {filename}") from e


def save_dataframe_to_csv(df: pd.DataFrame, filename: str) -> None:
    """Save a DataFrame as CSV with 17 significant digits and LF line endings."""
    write_text(to_csv_text(df), filename)
