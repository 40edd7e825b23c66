"""Helper functions and utilities"""

import re
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

from utils.constants import MAX_PROGRAM_FILE_SIZE_BYTES, PROGRAM_FILE_EXTENSION

_RATIONAL = re.compile(r"^\s*(\d+)\s*(?:/\s*(\d+))?\s*$")


def validate_program_file(file_path: str) -> tuple[bool, Optional[str]]:
    """
    Validate a program file before parsing

    Args:
        file_path: Path to the .cpl file

    Returns:
        Tuple of (is_valid, error_message)
    """
    path = Path(file_path)

    if not path.exists():
        return False, f"File not found: {file_path}"

    if not path.is_file():
        return False, f"Path is not a file: {file_path}"

    if path.suffix.lower() != PROGRAM_FILE_EXTENSION:
        return False, f"Unsupported file type: {path.suffix}. Expected: {PROGRAM_FILE_EXTENSION}"

    file_size = path.stat().st_size
    if file_size > MAX_PROGRAM_FILE_SIZE_BYTES:
        return False, f"File too large: {file_size / 1024:.1f}KB. Max: {MAX_PROGRAM_FILE_SIZE_BYTES // 1024}KB"

    if file_size == 0:
        return False, "File is empty"

    return True, None


def parse_rational(text: Union[str, int, Fraction]) -> Fraction:
    """
    Parse a probability written as "p/q", an integer or a decimal

    Args:
        text: Rational text such as "1/16", "0", "0.25"

    Returns:
        Exact fraction in [0, 1]

    Raises:
        ValueError: If the text is not a rational in [0, 1]
    """
    if isinstance(text, (int, Fraction)):
        value = Fraction(text)
    else:
        match = _RATIONAL.match(text)
        if match:
            numerator, denominator = match.group(1), match.group(2) or "1"
            if int(denominator) == 0:
                raise ValueError(f"Zero denominator in {text!r}")
            value = Fraction(int(numerator), int(denominator))
        else:
            try:
                value = Fraction(text.strip())
            except (ValueError, ZeroDivisionError):
                raise ValueError(f"Not a rational number: {text!r}") from None
    if value < 0 or value > 1:
        raise ValueError(f"Probability must lie in [0, 1], got {value}")
    return value


def format_rational(value: Fraction) -> str:
    """
    Format a fraction as "p/q" (integers keep a "/1" denominator)

    Args:
        value: Exact fraction

    Returns:
        Rational text
    """
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def to_decimal(value: Fraction, places: int = 12) -> float:
    """
    Round a fraction to a float with the given number of decimal places

    Args:
        value: Exact fraction
        places: Decimal places kept

    Returns:
        Rounded float
    """
    with localcontext() as context:
        context.prec = max(28, places + 10)
        exact = Decimal(value.numerator) / Decimal(value.denominator)
        return float(round(exact, places))
