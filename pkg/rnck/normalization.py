"""
Canonicalization of attribute text and the small lookup tables that enumerate
bounded attribute sets.

Canonical form is Unicode NFC, optionally upper-cased. Enumeration ordinals are
assigned by canonical (UTF-8 byte) sort order, so the same multiset of inputs
always produces the same table.
"""

import logging
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from rnck.errors import AmbiguityError, InvalidOrdinalError, NormalizationError, UnknownValueError

logger = logging.getLogger(__name__)


def _byte_order(text: str) -> bytes:
    return text.encode("utf-8")


def normalize_text(value: str | bytes, case_fold: bool = True) -> str:
    """
    Normalize a string to canonical composed form.

    Args:
        value (str | bytes): Input text; bytes must be UTF-8.
        case_fold (bool): Upper-case the result.

    Returns:
        str: The canonical string. Idempotent.

    Raises:
        NormalizationError: The input is not valid Unicode.
    """
    if isinstance(value, bytes):
        try:
            value = value.decode("utf-8")
        except UnicodeDecodeError as e:
            raise NormalizationError(f"invalid UTF-8 input: {e}") from e
    if not isinstance(value, str):
        raise NormalizationError(f"expected text, got {type(value).__name__}")
    try:
        # lone surrogates cannot be encoded
        value.encode("utf-8")
    except UnicodeEncodeError as e:
        raise NormalizationError(f"invalid Unicode input: {e}") from e

    text = unicodedata.normalize("NFC", value)
    if case_fold:
        text = unicodedata.normalize("NFC", text.upper())
    return text


@dataclass(frozen=True)
class EnumTable:
    """
    Ordered lookup table: entries[i] has ordinal i.

    Construction does not validate; use build_enum_table for untrusted input
    or check is_canonical() before relying on the reverse mapping.
    """

    entries: tuple[str, ...]
    case_fold: bool = True
    reverse: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "reverse", {entry: i for i, entry in enumerate(self.entries)})

    def __len__(self) -> int:
        return len(self.entries)

    def problems(self) -> list[str]:
        """Return the canonical-form violations of this table (empty when canonical)."""
        found = []
        seen = set()
        for entry in self.entries:
            if entry in seen:
                found.append(f"duplicate entry {entry!r}")
            seen.add(entry)
            if normalize_text(entry, self.case_fold) != entry:
                found.append(f"entry {entry!r} is not in canonical form")
        ordered = [_byte_order(e) for e in self.entries]
        if any(a > b for a, b in zip(ordered, ordered[1:])):
            found.append("entries are not in canonical sorted order")
        return found

    def is_canonical(self) -> bool:
        return not self.problems()


def build_enum_table(values: Iterable[str], case_fold: bool = True) -> EnumTable:
    """
    Build an enumeration table from raw values.

    Values are normalized, deduplicated and sorted in canonical byte order.

    Raises:
        NormalizationError: No values were given, or a value is not valid Unicode.
        AmbiguityError: Two distinct inputs normalize to the same entry.
    """
    sources: dict[str, set[str]] = {}
    for raw in values:
        sources.setdefault(normalize_text(raw, case_fold), set()).add(raw)
    if not sources:
        raise NormalizationError("cannot build an enumeration table from no values")

    colliders = {canon: sorted(raw) for canon, raw in sources.items() if len(raw) > 1}
    if colliders:
        raise AmbiguityError(colliders)

    table = EnumTable(tuple(sorted(sources, key=_byte_order)), case_fold)
    logger.debug("Built enumeration table with %d entries", len(table))
    return table


def enum_encode(table: EnumTable, value: str, field_name: str = "enum") -> int:
    """Return the ordinal of the normalized value."""
    canonical = normalize_text(value, table.case_fold)
    try:
        return table.reverse[canonical]
    except KeyError:
        raise UnknownValueError(field_name, value) from None


def enum_decode(table: EnumTable, ordinal: int) -> str:
    """Return the canonical string with the given ordinal."""
    if not 0 <= ordinal < len(table.entries):
        raise InvalidOrdinalError(f"ordinal {ordinal} out of range for table of size {len(table.entries)}")
    return table.entries[ordinal]


def write_enum_table(table: EnumTable, path: str | Path) -> None:
    """Write one entry per line in ordinal order (line number - 1 is the ordinal)."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for entry in table.entries:
            f.write(entry + "\n")


def read_enum_table(path: str | Path, case_fold: bool = True) -> EnumTable:
    """
    Read a table written by write_enum_table.

    Raises:
        NormalizationError: The file content is not a canonical table.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    table = EnumTable(tuple(lines), case_fold)
    problems = table.problems()
    if problems:
        raise NormalizationError(f"{path}: " + "; ".join(problems))
    return table
