"""File I/O utility functions."""

from pathlib import Path
from typing import Callable, TextIO

import pandas as pd

from src.core.errors import InputFormatError


def ensure_directory(path: Path) -> Path:
    """
    Ensure a directory exists, create if it doesn't.

    Args:
        path: Directory path

    Returns:
        Path object
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def open_input(filepath: Path, label: str) -> TextIO:
    """
    Open an input file for reading as UTF-8 text.

    Args:
        filepath: Input file path
        label: What the file holds, used in the error message

    Returns:
        Open text stream (caller closes it)

    Raises:
        InputFormatError: the file cannot be opened
    """
    try:
        return open(filepath, "r", encoding="utf-8", newline="")
    except OSError as e:
        raise InputFormatError(f"cannot read {label} file {filepath}: {e.strerror}") from e


def save_text(text: str, filepath: Path) -> Path:
    filepath = Path(filepath)
    ensure_directory(filepath.parent)
    with open(filepath, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    return filepath


def save_with(writer: Callable[[TextIO], None], filepath: Path) -> Path:
    """Open ``filepath`` for writing and hand the stream to ``writer``."""
    filepath = Path(filepath)
    ensure_directory(filepath.parent)
    with open(filepath, "w", encoding="utf-8", newline="") as f:
        writer(f)
    return filepath


def save_frame(df: pd.DataFrame, filepath: Path) -> Path:
    """Save a DataFrame as CSV with ``\\n`` line endings and no index."""
    filepath = Path(filepath)
    ensure_directory(filepath.parent)
    df.to_csv(filepath, index=False, lineterminator="\n", encoding="utf-8")
    return filepath


def load_frame(filepath: Path, label: str) -> pd.DataFrame:
    """Load a CSV written by save_frame; keys stay strings."""
    try:
        return pd.read_csv(filepath, dtype=str, keep_default_na=False)
    except FileNotFoundError as e:
        raise InputFormatError(f"cannot read {label} file {filepath}: not found") from e
