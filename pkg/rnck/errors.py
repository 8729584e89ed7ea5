"""
Exception hierarchy for rnck.

Every failure raised by the codecs, the index and the schema parser derives
from RnckError, so outer surfaces (CLI, MCP tools) can catch one type and map
it to an exit status or an error payload.
"""


class RnckError(ValueError):
    """Base class for all rnck errors."""


class SchemaError(RnckError):
    """A schema is not usable for encoding (failed validation)."""

    def __init__(self, message: str, violations: list[str] | None = None):
        super().__init__(message)
        self.violations = violations or []


class DegenerateFieldError(SchemaError):
    """A field with fewer than two distinct values carries no information."""


class SchemaParseError(SchemaError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class FieldOverflowError(RnckError):
    def __init__(self, field: str, value: int, limit: int):
        super().__init__(f"field '{field}': value {value} out of range [0, {limit})")
        self.field = field
        self.value = value
        self.limit = limit


class UnknownValueError(RnckError):
    def __init__(self, field: str, value: str):
        super().__init__(f"field '{field}': unknown value {value!r}")
        self.field = field
        self.value = value


class InvalidKeyError(RnckError):
    """A decoded section is outside its field's domain."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class MalformedKeyError(RnckError):
    """A key violates the structural rules of its layout (padding, lengths)."""


class HexParseError(RnckError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class NormalizationError(RnckError):
    pass


class AmbiguityError(RnckError):
    def __init__(self, colliders: dict[str, list[str]]):
        listed = "; ".join(f"{canon!r} <- {sorted(raw)!r}" for canon, raw in sorted(colliders.items()))
        super().__init__(f"distinct inputs normalize to the same entry: {listed}")
        self.colliders = colliders


class InvalidOrdinalError(RnckError):
    pass


class InvalidVariantError(RnckError):
    pass


class PositionOverflowError(RnckError):
    pass


class InvalidRangeError(RnckError):
    pass


class CountryError(RnckError):
    pass


class NumberError(RnckError):
    pass


class EmptyNumberError(NumberError):
    pass


class InconsistentKeyError(InvalidKeyError):
    pass


class IndexFormatError(RnckError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class LookupCollisionError(RnckError):
    pass
