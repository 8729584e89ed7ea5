"""
Immutable sorted key column with binary search, range scans and merge joins.

Index files (`.rnck`) are a 16-byte header followed by the keys:

    offset 0   magic  b"RNCK"
    offset 4   format version, uint32 little-endian (1)
    offset 8   key count, uint64 little-endian
    offset 16  count x uint64 little-endian keys, ascending
"""

import logging
import os
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator

import numpy as np

from rnck.errors import IndexFormatError, InvalidRangeError, MalformedKeyError
from rnck.schema import KEY_MASK

logger = logging.getLogger(__name__)

MAGIC = b"RNCK"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sIQ")
KEY_DTYPE = np.dtype("<u8")
FILE_SUFFIX = ".rnck"


class JoinKind(str, Enum):
    INNER = "inner"
    LEFT = "left"
    RIGHT = "right"
    FULL = "full"


@dataclass(frozen=True)
class JoinResult:
    """Position pairs of a join; None marks the absent side of an outer row."""

    kind: JoinKind
    pairs: list[tuple[int | None, int | None]]

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


def _as_key(key: int) -> np.uint64:
    key = int(key)
    if not 0 <= key <= KEY_MASK:
        raise MalformedKeyError(f"key {key} is not a 64-bit unsigned integer")
    return np.uint64(key)


class KeyIndex:
    """
    Sorted uint64 keys, duplicates allowed.

    Instances are read-only once built; concurrent readers need no locking.
    """

    def __init__(self, keys: np.ndarray, source: str | None = None):
        keys.flags.writeable = False
        self._keys = keys
        self.source = source

    @property
    def keys(self) -> np.ndarray:
        return self._keys

    @property
    def count(self) -> int:
        return int(self._keys.size)

    def __len__(self) -> int:
        return self.count

    def __getitem__(self, position: int) -> int:
        return int(self._keys[position])

    def __iter__(self) -> Iterator[int]:
        return iter(self._keys.tolist())

    def __repr__(self) -> str:
        return f"KeyIndex(count={self.count}, source={self.source!r})"

    def find_first(self, key: int) -> int | None:
        """Smallest position holding key, or None."""
        probe = _as_key(key)
        i = int(np.searchsorted(self._keys, probe, side="left"))
        if i < self.count and self._keys[i] == probe:
            return i
        return None

    def find_last(self, key: int) -> int | None:
        """Largest position holding key, or None."""
        probe = _as_key(key)
        i = int(np.searchsorted(self._keys, probe, side="right")) - 1
        if i >= 0 and self._keys[i] == probe:
            return i
        return None

    def range_scan(self, lo: int, hi: int) -> tuple[int, int]:
        """
        (start, count) of the run with lo <= key <= hi; count is 0 when empty.

        Raises:
            InvalidRangeError: lo > hi.
        """
        if int(lo) > int(hi):
            raise InvalidRangeError(f"range lower bound {lo} > upper bound {hi}")
        start = int(np.searchsorted(self._keys, _as_key(lo), side="left"))
        end = int(np.searchsorted(self._keys, _as_key(hi), side="right"))
        return start, max(end - start, 0)

    def keys_in(self, lo: int, hi: int) -> np.ndarray:
        start, count = self.range_scan(lo, hi)
        return self._keys[start:start + count]


def build_index(keys: Iterable[int] | np.ndarray) -> KeyIndex:
    """
    Sort keys ascending (stable) into a new index.

    Raises:
        MalformedKeyError: A key is negative, does not fit 64 bits, or the
            array is not of an integer dtype.
    """
    if isinstance(keys, np.ndarray):
        if keys.dtype.kind not in "iu":
            raise MalformedKeyError(f"key array has non-integer dtype {keys.dtype}")
        if keys.dtype.kind == "i" and keys.size and keys.min() < 0:
            raise MalformedKeyError(f"key {int(keys[np.argmax(keys < 0)])} is not a 64-bit unsigned integer")
        array = keys.astype(np.uint64, copy=True)
    else:
        values = [int(key) for key in keys]
        negative = next((key for key in values if key < 0), None)
        if negative is not None:
            raise MalformedKeyError(f"key {negative} is not a 64-bit unsigned integer")
        try:
            array = np.array(values, dtype=np.uint64)
        except OverflowError as e:
            raise MalformedKeyError(f"key is not a 64-bit unsigned integer: {e}") from e
    array.sort(kind="stable")
    logger.debug("Built key index with %d keys", array.size)
    return KeyIndex(array)


def _runs(keys: np.ndarray) -> tuple[list[int], list[int], list[int]]:
    """Distinct values of a sorted array with the start and end position of each run."""
    if keys.size == 0:
        return [], [], []
    boundaries = np.flatnonzero(keys[1:] != keys[:-1]) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [keys.size]))
    return keys[starts].tolist(), starts.tolist(), ends.tolist()


def merge_join(left: KeyIndex, right: KeyIndex, kind: JoinKind | str = JoinKind.INNER) -> JoinResult:
    """
    Equality join of two indexes in one coordinated pass over their key runs.

    Matching runs produce their cross product (left-major). Rows come out in
    key order; unmatched rows appear only for the outer side(s) of the kind.
    """
    kind = JoinKind(kind)
    keep_left = kind in (JoinKind.LEFT, JoinKind.FULL)
    keep_right = kind in (JoinKind.RIGHT, JoinKind.FULL)

    lvalues, lstarts, lends = _runs(left.keys)
    rvalues, rstarts, rends = _runs(right.keys)
    pairs: list[tuple[int | None, int | None]] = []
    i = j = 0
    while i < len(lvalues) and j < len(rvalues):
        lv, rv = lvalues[i], rvalues[j]
        if lv < rv:
            if keep_left:
                pairs.extend((p, None) for p in range(lstarts[i], lends[i]))
            i += 1
        elif lv > rv:
            if keep_right:
                pairs.extend((None, q) for q in range(rstarts[j], rends[j]))
            j += 1
        else:
            for p in range(lstarts[i], lends[i]):
                pairs.extend((p, q) for q in range(rstarts[j], rends[j]))
            i += 1
            j += 1
    if keep_left and i < len(lvalues):
        pairs.extend((p, None) for p in range(lstarts[i], left.count))
    if keep_right and j < len(rvalues):
        pairs.extend((None, q) for q in range(rstarts[j], right.count))

    logger.debug("%s join of %d x %d keys produced %d rows", kind.value, left.count, right.count, len(pairs))
    return JoinResult(kind, pairs)


def write_index(index: KeyIndex, destination: str | Path | BinaryIO) -> None:
    """Write the index in the `.rnck` format."""
    header = HEADER.pack(MAGIC, FORMAT_VERSION, index.count)
    payload = index.keys.astype(KEY_DTYPE, copy=False).tobytes()
    if hasattr(destination, "write"):
        destination.write(header)
        destination.write(payload)
        return
    with open(destination, "wb") as f:
        f.write(header)
        f.write(payload)
    logger.debug("Wrote %d keys to %s", index.count, destination)


def _parse_header(header: bytes) -> int:
    if len(header) < HEADER.size:
        raise IndexFormatError(f"truncated header: {len(header)} of {HEADER.size} bytes", len(header))
    magic, version, count = HEADER.unpack(header[:HEADER.size])
    if magic != MAGIC:
        raise IndexFormatError(f"bad magic {magic!r}", 0)
    if version != FORMAT_VERSION:
        raise IndexFormatError(f"unsupported format version {version}", 4)
    return count


def _check_payload_size(count: int, available: int) -> None:
    expected = HEADER.size + count * KEY_DTYPE.itemsize
    if available < expected:
        raise IndexFormatError(f"truncated payload: header declares {count} keys", available)
    if available > expected:
        raise IndexFormatError("trailing bytes after the last key", expected)


def _check_sorted(keys: np.ndarray) -> None:
    descending = np.flatnonzero(keys[1:] < keys[:-1])
    if descending.size:
        position = int(descending[0]) + 1
        raise IndexFormatError(
            f"keys out of order at position {position}", HEADER.size + position * KEY_DTYPE.itemsize
        )


def read_index(source: str | Path | BinaryIO, mmap: bool = False) -> KeyIndex:
    """
    Read a `.rnck` file, validating header, size and sort order.

    With mmap=True and a path source, keys stay file-backed through a
    read-only numpy memmap.

    Raises:
        IndexFormatError: Bad magic, version, truncation or unsorted payload, with the byte offset.
    """
    if hasattr(source, "read"):
        data = source.read()
        count = _parse_header(data[:HEADER.size])
        _check_payload_size(count, len(data))
        keys = np.frombuffer(data, dtype=KEY_DTYPE, count=count, offset=HEADER.size).astype(np.uint64)
        name = getattr(source, "name", None)
    else:
        name = str(source)
        with open(source, "rb") as f:
            count = _parse_header(f.read(HEADER.size))
        _check_payload_size(count, os.path.getsize(source))
        if mmap and count:
            keys = np.memmap(source, dtype=KEY_DTYPE, mode="r", offset=HEADER.size, shape=(count,))
        else:
            keys = np.fromfile(source, dtype=KEY_DTYPE, count=count, offset=HEADER.size).astype(np.uint64)

    _check_sorted(keys)
    logger.debug("Read %d keys from %s", count, name)
    return KeyIndex(keys, source=name)
