"""
Centralized validation utilities
"""
from typing import Any, List, Optional, Sequence

import numpy as np


class ValidationError(Exception):
    """Custom validation error"""
    pass


class ConfigurationError(ValidationError):
    """Malformed dynamics, score table or experiment file"""
    pass


class EmptyInputError(ValidationError):
    """An operation that needs data received none"""
    pass


class Validator:
    """Utility class for input validation"""

    @staticmethod
    def validate_number(
        value: Any,
        field_name: str = "value",
        min_val: float = None,
        max_val: float = None,
        exclusive_min: bool = False
    ) -> float:
        """Validate numeric input"""
        if isinstance(value, bool):
            raise ValidationError(f"{field_name} must be a number, got bool")
        try:
            num = float(value)
        except (TypeError, ValueError):
            raise ValidationError(
                f"{field_name} must be a number, got {type(value).__name__}"
            )

        if not np.isfinite(num):
            raise ValidationError(f"{field_name} must be finite")

        if min_val is not None:
            if exclusive_min and num <= min_val:
                raise ValidationError(f"{field_name} must be > {min_val}")
            if num < min_val:
                raise ValidationError(f"{field_name} must be >= {min_val}")

        if max_val is not None and num > max_val:
            raise ValidationError(f"{field_name} must be <= {max_val}")

        return num

    @staticmethod
    def validate_integer(
        value: Any,
        field_name: str = "value",
        min_val: Optional[int] = None,
        max_val: Optional[int] = None
    ) -> int:
        """Validate integral input (floats with no fractional part are accepted)"""
        num = Validator.validate_number(value, field_name, min_val, max_val)
        if num != int(num):
            raise ValidationError(f"{field_name} must be an integer")
        return int(num)

    @staticmethod
    def validate_choice(
        value: Any,
        choices: List[str],
        field_name: str = "value"
    ) -> str:
        """Validate value is in allowed choices"""
        if value not in choices:
            raise ValidationError(
                f"{field_name} must be one of: {', '.join(choices)}"
            )
        return value

    @staticmethod
    def validate_positive_vector(
        values: Any,
        size: int,
        field_name: str = "vector"
    ) -> np.ndarray:
        """Validate a vector of strictly positive finite entries"""
        arr = Validator._as_float_array(values, field_name)
        if arr.shape != (size,):
            raise ValidationError(f"{field_name} must have {size} entries, got shape {arr.shape}")
        if np.any(arr <= 0):
            raise ValidationError(f"{field_name} entries must be > 0")
        return arr

    @staticmethod
    def validate_probability_vector(
        values: Any,
        size: int,
        field_name: str = "distribution",
        tolerance: float = 1e-12
    ) -> np.ndarray:
        """Validate a non-negative vector summing to one"""
        arr = Validator._as_float_array(values, field_name)
        if arr.shape != (size,):
            raise ValidationError(f"{field_name} must have {size} entries, got shape {arr.shape}")
        if np.any(arr < 0):
            raise ValidationError(f"{field_name} entries must be >= 0")
        if abs(arr.sum() - 1.0) > tolerance:
            raise ValidationError(f"{field_name} must sum to 1 (got {arr.sum():.15f})")
        return arr

    @staticmethod
    def validate_stochastic_matrix(
        values: Any,
        size: int,
        field_name: str = "matrix",
        tolerance: float = 1e-12,
        zero_diagonal: bool = True
    ) -> np.ndarray:
        """Validate a square row-stochastic matrix"""
        arr = Validator._as_float_array(values, field_name)
        if arr.shape != (size, size):
            raise ValidationError(
                f"{field_name} must be {size}x{size}, got shape {arr.shape}"
            )
        if np.any(arr < 0):
            raise ValidationError(f"{field_name} entries must be >= 0")
        row_sums = arr.sum(axis=1)
        bad_rows = np.flatnonzero(np.abs(row_sums - 1.0) > tolerance)
        if bad_rows.size:
            raise ValidationError(
                f"{field_name} rows {bad_rows.tolist()} do not sum to 1"
            )
        if zero_diagonal and np.any(np.diag(arr) != 0):
            raise ValidationError(f"{field_name} must have a zero diagonal")
        return arr

    @staticmethod
    def validate_names(values: Sequence[Any], field_name: str = "names") -> List[str]:
        """Validate a non-empty list of unique, non-blank names"""
        if not values:
            raise ValidationError(f"{field_name} cannot be empty")
        names = []
        for value in values:
            if not isinstance(value, str) or not value.strip():
                raise ValidationError(f"{field_name} entries must be non-empty strings")
            names.append(value.strip())
        if len(set(names)) != len(names):
            raise ValidationError(f"{field_name} contains duplicates")
        return names

    @staticmethod
    def _as_float_array(values: Any, field_name: str) -> np.ndarray:
        try:
            arr = np.array(values, dtype=float)
        except (TypeError, ValueError):
            raise ValidationError(f"{field_name} must be numeric")
        if not np.all(np.isfinite(arr)):
            raise ValidationError(f"{field_name} must be finite")
        return arr
