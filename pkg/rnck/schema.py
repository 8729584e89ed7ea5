"""
Key schemas, bit layouts and the generic bijective codec.

A KeySchema is an ordered list of fields. The first field is packed against
the most significant bit, so numeric order of encoded keys equals
lexicographic order of the field ordinals. When the widths sum to less than
64 bits the unused least significant bits are padding and must be zero.

Schema files are line oriented:

    # comment
    schema <name>
    field <name> <kind> <cardinality> [exact]
        value <canonical-string>

<kind> is one of enumeration, unsigned-integer or reserved-zero; cardinality
may be written as a decimal count or as 2^N. Enumeration fields list their
values in canonical sorted order; a bare `value` line is the empty string.
`exact` turns off case folding for an enumeration.
"""

import logging
import operator
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from rnck.errors import (
    DegenerateFieldError,
    FieldOverflowError,
    HexParseError,
    InvalidKeyError,
    InvalidRangeError,
    MalformedKeyError,
    RnckError,
    SchemaError,
    SchemaParseError,
    UnknownValueError,
)
from rnck.normalization import EnumTable, enum_encode

logger = logging.getLogger(__name__)

KEY_BITS = 64
KEY_MASK = (1 << KEY_BITS) - 1
MAX_FIELD_BITS = 63
HEX_DIGITS = frozenset("0123456789abcdefABCDEF")

_IDENTIFIER = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*$")

FieldValue = int | str


class FieldKind(str, Enum):
    ENUMERATION = "enumeration"
    UNSIGNED_INTEGER = "unsigned-integer"
    RESERVED_ZERO = "reserved-zero"


def compute_width(cardinality: int) -> int:
    """
    Number of bits needed to store `cardinality` distinct values.

    Raises:
        DegenerateFieldError: cardinality < 2.
    """
    if cardinality < 2:
        raise DegenerateFieldError(f"cardinality {cardinality} < 2: a field needs at least two values")
    # ceil(log2(n)) without floating point
    return (cardinality - 1).bit_length()


@dataclass(frozen=True)
class FieldSpec:
    name: str
    kind: FieldKind
    cardinality: int
    enum_table: EnumTable | None = None

    @property
    def width(self) -> int:
        """Derived bit width; 0 for degenerate cardinalities (reported by validate_schema)."""
        return (self.cardinality - 1).bit_length() if self.cardinality >= 2 else 0

    @property
    def mask(self) -> int:
        return (1 << self.width) - 1

    def to_ordinal(self, value: FieldValue) -> int:
        """Resolve a field value (ordinal, raw integer or text) to its ordinal and range-check it."""
        if isinstance(value, str):
            if self.kind is FieldKind.ENUMERATION:
                return enum_encode(self.enum_table, value, self.name)
            text = value.strip()
            if not text.isascii() or not text.isdigit():
                raise UnknownValueError(self.name, value)
            ordinal = int(text)
        else:
            ordinal = operator.index(value)
        if self.kind is FieldKind.RESERVED_ZERO and ordinal != 0:
            raise FieldOverflowError(self.name, ordinal, 1)
        if not 0 <= ordinal < self.cardinality:
            raise FieldOverflowError(self.name, ordinal, self.cardinality)
        return ordinal

    def to_text(self, ordinal: int) -> str:
        if self.kind is FieldKind.ENUMERATION:
            return self.enum_table.entries[ordinal]
        return str(ordinal)


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        return "ok" if self.ok else "; ".join(self.violations)


@dataclass(frozen=True)
class KeySchema:
    """
    Immutable key layout. Fields are ordered by sorting priority, first = most significant.
    """

    name: str
    fields: tuple[FieldSpec, ...]
    total_bits: int = field(init=False)
    shifts: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        shifts = []
        used = 0
        for spec in self.fields:
            used += spec.width
            shifts.append(KEY_BITS - used)
        object.__setattr__(self, "total_bits", used)
        object.__setattr__(self, "shifts", tuple(shifts))

    @property
    def padding_bits(self) -> int:
        return max(KEY_BITS - self.total_bits, 0)

    @property
    def padding_mask(self) -> int:
        return (1 << self.padding_bits) - 1

    @property
    def data_fields(self) -> tuple[FieldSpec, ...]:
        """Fields that carry data, i.e. everything except reserved-zero sections."""
        return tuple(f for f in self.fields if f.kind is not FieldKind.RESERVED_ZERO)

    def field_position(self, name: str) -> int:
        for i, spec in enumerate(self.fields):
            if spec.name == name:
                return i
        raise KeyError(f"schema '{self.name}' has no field '{name}'")

    def section_mask(self, position: int) -> int:
        """Bitmask of one field's section within the 64-bit key."""
        spec = self.fields[position]
        return spec.mask << self.shifts[position]

    @cached_property
    def report(self) -> "ValidationReport":
        return validate_schema(self)


def validate_schema(schema: KeySchema) -> ValidationReport:
    """
    Check every field and layout rule. Violations are returned, never raised.
    """
    violations = []
    if not _IDENTIFIER.match(schema.name or ""):
        violations.append(f"schema name {schema.name!r} is not an identifier")
    if not schema.fields:
        violations.append("schema has no fields")

    seen = set()
    for spec in schema.fields:
        prefix = f"field '{spec.name}'"
        if not _IDENTIFIER.match(spec.name or ""):
            violations.append(f"{prefix}: name is not an identifier")
        if spec.name in seen:
            violations.append(f"{prefix}: duplicate field name")
        seen.add(spec.name)

        if spec.cardinality < 2:
            violations.append(f"{prefix}: cardinality {spec.cardinality} < 2 (degenerate field)")
        elif spec.width > MAX_FIELD_BITS:
            violations.append(f"{prefix}: width {spec.width} > {MAX_FIELD_BITS}")

        if spec.kind is FieldKind.ENUMERATION:
            if spec.enum_table is None:
                violations.append(f"{prefix}: enumeration without a value table")
            else:
                if len(spec.enum_table) != spec.cardinality:
                    violations.append(
                        f"{prefix}: enumeration has {len(spec.enum_table)} values but cardinality {spec.cardinality}"
                    )
                violations.extend(f"{prefix}: {problem}" for problem in spec.enum_table.problems())
        elif spec.enum_table is not None:
            violations.append(f"{prefix}: value table given for a {spec.kind.value} field")

    if schema.total_bits > KEY_BITS:
        violations.append(f"total_bits {schema.total_bits} > {KEY_BITS}")

    return ValidationReport(tuple(violations))


def require_valid(schema: KeySchema) -> None:
    """Raise SchemaError when the schema fails validation."""
    report = schema.report
    if not report.ok:
        raise SchemaError(f"schema '{schema.name}' is invalid: {report}", list(report.violations))


def encode(schema: KeySchema, values: Sequence[FieldValue]) -> int:
    """
    Pack one value per field into a 64-bit key.

    Raises:
        SchemaError: The schema is invalid.
        FieldOverflowError: A value is outside its field's range.
        UnknownValueError: Enumeration text is not in the field's table.
    """
    require_valid(schema)
    if len(values) != len(schema.fields):
        raise RnckError(f"schema '{schema.name}' expects {len(schema.fields)} values, got {len(values)}")
    key = 0
    for spec, shift, value in zip(schema.fields, schema.shifts, values):
        key |= spec.to_ordinal(value) << shift
    return key


def _check_key(key: int) -> int:
    key = operator.index(key)
    if not 0 <= key <= KEY_MASK:
        raise MalformedKeyError(f"key {key} is not a 64-bit unsigned integer")
    return key


def decode(schema: KeySchema, key: int) -> tuple[int, ...]:
    """
    Unpack a key into one ordinal per field.

    Raises:
        MalformedKeyError: Padding bits are set.
        InvalidKeyError: A section holds a value outside its field's domain.
    """
    require_valid(schema)
    key = _check_key(key)
    if key & schema.padding_mask:
        raise MalformedKeyError(f"key {to_hex(key)} has nonzero padding bits for schema '{schema.name}'")
    return tuple(_extract(spec, shift, key) for spec, shift in zip(schema.fields, schema.shifts))


def _extract(spec: FieldSpec, shift: int, key: int) -> int:
    ordinal = (key >> shift) & spec.mask
    if ordinal >= spec.cardinality or (spec.kind is FieldKind.RESERVED_ZERO and ordinal):
        raise InvalidKeyError(
            f"field '{spec.name}': section value {ordinal} outside cardinality {spec.cardinality}", spec.name
        )
    return ordinal


def decode_field(schema: KeySchema, key: int, name: str) -> int:
    """Extract the ordinal of a single field without decoding the whole key."""
    require_valid(schema)
    position = schema.field_position(name)
    return _extract(schema.fields[position], schema.shifts[position], _check_key(key))


def render(schema: KeySchema, ordinals: Sequence[int]) -> list[str]:
    """Text form of decoded ordinals for the data fields (reserved-zero sections omitted)."""
    return [
        spec.to_text(ordinal)
        for spec, ordinal in zip(schema.fields, ordinals)
        if spec.kind is not FieldKind.RESERVED_ZERO
    ]


def encode_row(schema: KeySchema, values: Sequence[FieldValue]) -> int:
    """Encode data-field values only; reserved-zero sections are filled in."""
    data_fields = schema.data_fields
    if len(values) != len(data_fields):
        raise RnckError(f"schema '{schema.name}' expects {len(data_fields)} columns, got {len(values)}")
    supplied = iter(values)
    full = [0 if spec.kind is FieldKind.RESERVED_ZERO else next(supplied) for spec in schema.fields]
    return encode(schema, full)


def to_hex(key: int) -> str:
    """16-character, zero-padded, upper-case hexadecimal form of a key."""
    return f"{_check_key(key):016X}"


def from_hex(text: str) -> int:
    """
    Parse a 16-character hexadecimal key (case-insensitive).

    Raises:
        HexParseError: Wrong length or a non-hex character; the position is 0-based.
    """
    for position, char in enumerate(text):
        if char not in HEX_DIGITS:
            raise HexParseError(f"non-hexadecimal character {char!r}", position)
        if position >= 16:
            raise HexParseError("key longer than 16 characters", position)
    if len(text) != 16:
        raise HexParseError(f"key has {len(text)} characters, expected 16", len(text))
    return int(text, 16)


def parse_key(text: str, decimal: bool = False) -> int:
    """
    Parse a key given as 16 hex characters or as a decimal number.

    Exactly 16 characters are read as hex unless decimal is set; other
    all-digit strings are decimal.
    """
    text = text.strip()
    if decimal or (len(text) != 16 and text.isascii() and text.isdigit()):
        if not (text.isascii() and text.isdigit()):
            raise MalformedKeyError(f"malformed decimal key {text!r}")
        return _check_key(int(text))
    return from_hex(text)


def prefix_range(schema: KeySchema, leading_values: Sequence[FieldValue]) -> tuple[int, int]:
    """
    Smallest and largest keys sharing the given leading field values.

    lo has every lower data bit clear, hi every lower data bit set; padding
    stays zero in both, so lo <= key <= hi holds exactly for well-formed keys
    with that prefix and a full prefix gives lo == hi.
    """
    require_valid(schema)
    k = len(leading_values)
    if not 0 < k <= len(schema.fields):
        raise InvalidRangeError(f"prefix length {k} outside [1, {len(schema.fields)}]")
    lo = 0
    for spec, shift, value in zip(schema.fields, schema.shifts, leading_values):
        lo |= spec.to_ordinal(value) << shift
    hi = lo | (((1 << schema.shifts[k - 1]) - 1) & ~schema.padding_mask)
    return lo, hi


def encode_array(schema: KeySchema, columns: Sequence[Sequence[int]]) -> np.ndarray:
    """
    Vectorized encode: one column of ordinals per field, returns a uint64 array of keys.

    Raises:
        FieldOverflowError: Naming the field and the first offending value.
    """
    require_valid(schema)
    if len(columns) != len(schema.fields):
        raise RnckError(f"schema '{schema.name}' expects {len(schema.fields)} columns, got {len(columns)}")
    if len({len(column) for column in columns}) > 1:
        raise RnckError("columns have different lengths")
    keys = np.zeros(len(columns[0]), dtype=np.uint64)
    for spec, shift, column in zip(schema.fields, schema.shifts, columns):
        raw = np.asarray(column)
        if raw.dtype.kind == "i" and raw.size and raw.min() < 0:
            bad = int(raw[np.argmax(raw < 0)])
            raise FieldOverflowError(spec.name, bad, spec.cardinality)
        values = raw.astype(np.uint64)
        limit = 1 if spec.kind is FieldKind.RESERVED_ZERO else spec.cardinality
        over = values >= np.uint64(limit)
        if over.any():
            raise FieldOverflowError(spec.name, int(values[np.argmax(over)]), limit)
        keys |= values << np.uint64(shift)
    return keys


def decode_array(schema: KeySchema, keys) -> list[np.ndarray]:
    """
    Vectorized decode of a uint64 key array into one ordinal column per field.

    Raises:
        MalformedKeyError / InvalidKeyError: As decode, naming the first offending row.
    """
    require_valid(schema)
    keys = np.asarray(keys, dtype=np.uint64)
    if schema.padding_bits:
        dirty = (keys & np.uint64(schema.padding_mask)) != 0
        if dirty.any():
            row = int(np.argmax(dirty))
            raise MalformedKeyError(f"row {row}: key {to_hex(int(keys[row]))} has nonzero padding bits")
    columns = []
    for spec, shift in zip(schema.fields, schema.shifts):
        column = (keys >> np.uint64(shift)) & np.uint64(spec.mask)
        limit = 1 if spec.kind is FieldKind.RESERVED_ZERO else spec.cardinality
        over = column >= np.uint64(limit)
        if over.any():
            row = int(np.argmax(over))
            raise InvalidKeyError(
                f"row {row}: field '{spec.name}' section value {int(column[row])} outside cardinality {spec.cardinality}",
                spec.name,
            )
        columns.append(column)
    return columns


def _parse_cardinality(token: str, line: int) -> int:
    match = re.fullmatch(r"(\d+)|2\^(\d+)", token)
    if not match:
        raise SchemaParseError(f"bad cardinality {token!r}", line)
    return int(match.group(1)) if match.group(1) else 1 << int(match.group(2))


def parse_schema(text: str, source: str = "<string>") -> KeySchema:
    """
    Parse the line-oriented schema format described in the module docstring.

    The result is not validated; call validate_schema to check it.

    Raises:
        SchemaParseError: Unknown directive or malformed line, with its 1-based number.
    """
    name = None
    fields = []
    pending = None  # [name, kind, cardinality, case_fold, values]

    def flush():
        if pending is None:
            return
        field_name, kind, cardinality, case_fold, values = pending
        table = EnumTable(tuple(values), case_fold) if kind is FieldKind.ENUMERATION else None
        fields.append(FieldSpec(field_name, kind, cardinality, table))

    for number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        directive = stripped.split(None, 1)[0]

        if directive == "schema":
            tokens = stripped.split()
            if name is not None:
                raise SchemaParseError("duplicate 'schema' line", number)
            if len(tokens) != 2:
                raise SchemaParseError("expected 'schema <name>'", number)
            name = tokens[1]
        elif directive == "field":
            if name is None:
                raise SchemaParseError("'field' before 'schema'", number)
            tokens = stripped.split()
            if len(tokens) not in (4, 5) or (len(tokens) == 5 and tokens[4] != "exact"):
                raise SchemaParseError("expected 'field <name> <kind> <cardinality> [exact]'", number)
            try:
                kind = FieldKind(tokens[2])
            except ValueError:
                raise SchemaParseError(f"unknown field kind {tokens[2]!r}", number) from None
            flush()
            pending = [tokens[1], kind, _parse_cardinality(tokens[3], number), len(tokens) == 4, []]
        elif directive == "value":
            if pending is None or pending[1] is not FieldKind.ENUMERATION:
                raise SchemaParseError("'value' outside an enumeration field", number)
            pending[4].append(stripped[len("value"):].strip())
        else:
            raise SchemaParseError(f"unknown directive {directive!r}", number)

    flush()
    if name is None:
        raise SchemaParseError(f"{source}: missing 'schema <name>' line", 1)
    schema = KeySchema(name, tuple(fields))
    logger.debug("Parsed schema '%s' from %s: %d fields, %d bits", name, source, len(fields), schema.total_bits)
    return schema


def load_schema(path: str | Path) -> KeySchema:
    """Read and parse a UTF-8 schema file."""
    path = Path(path)
    return parse_schema(path.read_text(encoding="utf-8"), str(path))


def bundled_schema(name: str) -> KeySchema:
    """Load one of the schema files shipped with the package (`numkey`, `variantkey`)."""
    resource = resources.files("rnck").joinpath("schemas", f"{name}.schema")
    if not resource.is_file():
        raise KeyError(f"no bundled schema named '{name}'")
    return parse_schema(resource.read_text(encoding="utf-8"), f"bundled:{name}")


def bundled_schemas() -> list[KeySchema]:
    folder = resources.files("rnck").joinpath("schemas")
    return [
        parse_schema(entry.read_text(encoding="utf-8"), f"bundled:{entry.name}")
        for entry in sorted(folder.iterdir(), key=lambda e: e.name)
        if entry.name.endswith(".schema")
    ]
