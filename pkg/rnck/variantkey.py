"""
VariantKey: 64-bit keys for human genetic variants.

Layout, most significant first:

    [ 5 bit CHROM ][ 28 bit POS ][ 31 bit REF+ALT ]

The REF+ALT section is reversible when the two alleles hold at most 11 bases
over {A, C, G, T}:

    [4 bit len(REF)][4 bit len(ALT)][11 x 2 bit bases, REF then ALT][flag = 0]

Anything else is stored as a 30-bit hash with the flag bit set; the alleles of
those keys can only be recovered through a RefAltLookup.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from rnck.errors import (
    InvalidRangeError,
    InvalidVariantError,
    LookupCollisionError,
    MalformedKeyError,
    PositionOverflowError,
    RnckError,
)
from rnck.schema import KEY_MASK, from_hex, to_hex

logger = logging.getLogger(__name__)

CHROM_SHIFT = 59
POS_SHIFT = 31
POS_BITS = 28
POS_LIMIT = 1 << POS_BITS
POS_MASK = POS_LIMIT - 1
REFALT_MASK = (1 << 31) - 1
REFALT_HASH_MASK = (1 << 30) - 1
MAX_REVERSIBLE_BASES = 11

BASE_CODES = {"A": 0, "C": 1, "G": 2, "T": 3}
BASES = "ACGT"

_CHROM_ORDINALS = {str(n): n for n in range(1, 23)} | {"X": 23, "Y": 24, "MT": 25, "M": 25}
_CHROM_LABELS = {n: str(n) for n in range(1, 23)} | {23: "X", 24: "Y", 25: "MT"}
UNKNOWN_CHROM = "NA"

# refalt_hash mixing constants
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MIX_1 = 0xFF51AFD7ED558CCD
_MIX_2 = 0xC4CEB9FE1A85EC53


@dataclass(frozen=True)
class Variant:
    chrom: str
    pos: int
    ref: str
    alt: str


@dataclass(frozen=True)
class HashedVariant:
    """A decoded key whose alleles were hashed and are not in the lookup."""

    chrom: str
    pos: int
    refalt_hash: int


def normalize_chrom(label: str) -> str:
    label = label.strip().upper()
    if label.startswith("CHR"):
        label = label[3:]
    return "MT" if label == "M" else label


def normalize_variant(chrom: str, pos: int, ref: str, alt: str) -> Variant:
    """
    Canonical form of a variant.

    The chromosome loses any "chr" prefix and is upper-cased; alleles are
    upper-cased, then the common suffix and afterwards the common prefix are
    trimmed while both alleles keep at least one base. pos moves forward by
    the number of prefix bases removed.

    Raises:
        InvalidVariantError: An allele is empty.
    """
    ref = ref.strip().upper()
    alt = alt.strip().upper()
    if not ref or not alt:
        raise InvalidVariantError(f"empty allele (ref={ref!r}, alt={alt!r})")
    if pos < 0:
        raise InvalidVariantError(f"negative position {pos}")

    while len(ref) > 1 and len(alt) > 1 and ref[-1] == alt[-1]:
        ref, alt = ref[:-1], alt[:-1]

    trimmed = 0
    while len(ref) - trimmed > 1 and len(alt) - trimmed > 1 and ref[trimmed] == alt[trimmed]:
        trimmed += 1

    return Variant(normalize_chrom(chrom), pos + trimmed, ref[trimmed:], alt[trimmed:])


def encode_chrom(label: str) -> int:
    """Chromosome ordinal: 1-22, X=23, Y=24, MT/M=25; anything else is 0 (not available)."""
    return _CHROM_ORDINALS.get(label, 0)


def decode_chrom(ordinal: int) -> str:
    return _CHROM_LABELS.get(ordinal, UNKNOWN_CHROM)


def _is_reversible(ref: str, alt: str) -> bool:
    return len(ref) + len(alt) <= MAX_REVERSIBLE_BASES and all(b in BASE_CODES for b in ref + alt)


def refalt_hash(ref: str, alt: str) -> int:
    """
    30-bit hash of an allele pair.

    FNV-1a style byte folding over ref, a 0x00 separator and alt, then a
    64-bit multiply-xorshift finalizer; the top 30 bits are kept.
    """
    h = _FNV_OFFSET
    for byte in ref.encode("utf-8") + b"\x00" + alt.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & KEY_MASK
    h ^= h >> 33
    h = (h * _MIX_1) & KEY_MASK
    h ^= h >> 33
    h = (h * _MIX_2) & KEY_MASK
    h ^= h >> 33
    return h >> 34


def encode_refalt(ref: str, alt: str) -> int:
    """31-bit REF+ALT section for normalized alleles."""
    if not _is_reversible(ref, alt):
        return (refalt_hash(ref, alt) << 1) | 1
    section = (len(ref) << 27) | (len(alt) << 23)
    shift = 21
    for base in ref + alt:
        section |= BASE_CODES[base] << shift
        shift -= 2
    return section


def decode_refalt(section: int) -> tuple[str, str] | None:
    """
    Alleles of a reversible section, or None for a hashed one.

    Raises:
        MalformedKeyError: The length fields are inconsistent, or a base slot
            past the last allele base is not zero.
    """
    if section & 1:
        return None
    ref_len = (section >> 27) & 0xF
    alt_len = (section >> 23) & 0xF
    if ref_len == 0 or alt_len == 0 or ref_len + alt_len > MAX_REVERSIBLE_BASES:
        raise MalformedKeyError(f"REF+ALT lengths {ref_len}+{alt_len} are not a valid reversible encoding")
    # slots after the last base, down to bit 1
    unused = ((1 << (23 - 2 * (ref_len + alt_len))) - 1) & ~1
    if section & unused:
        raise MalformedKeyError(f"REF+ALT section {section:08X} has bits set past its {ref_len + alt_len} bases")
    bases = [BASES[(section >> (21 - 2 * i)) & 0x3] for i in range(ref_len + alt_len)]
    return "".join(bases[:ref_len]), "".join(bases[ref_len:])


def variant_key(chrom: str, pos: int, ref: str, alt: str) -> int:
    """
    Normalize a variant and encode it.

    Raises:
        PositionOverflowError: The normalized position does not fit 28 bits.
        InvalidVariantError: An allele is empty.
    """
    variant = normalize_variant(chrom, pos, ref, alt)
    return encode_variant(variant)


def encode_variant(variant: Variant) -> int:
    """Encode an already normalized variant."""
    if not 0 <= variant.pos < POS_LIMIT:
        raise PositionOverflowError(f"position {variant.pos} does not fit in {POS_BITS} bits")
    return (
        (encode_chrom(variant.chrom) << CHROM_SHIFT)
        | (variant.pos << POS_SHIFT)
        | encode_refalt(variant.ref, variant.alt)
    )


def extract_chrom(key: int) -> int:
    return key >> CHROM_SHIFT


def extract_pos(key: int) -> int:
    return (key >> POS_SHIFT) & POS_MASK


def extract_refalt(key: int) -> int:
    return key & REFALT_MASK


def is_hashed(key: int) -> bool:
    return bool(key & 1)


def _check_lookup_entry(key: int, ref: str, alt: str, where: str) -> None:
    if not ref or not alt:
        raise RnckError(f"{where}: empty allele")
    variant = Variant(decode_chrom(extract_chrom(key)), extract_pos(key), ref, alt)
    if normalize_variant(variant.chrom, variant.pos, ref, alt) != variant:
        raise RnckError(f"{where}: alleles {ref}/{alt} are not normalized")
    if encode_variant(variant) != key:
        raise RnckError(f"{where}: alleles {ref}/{alt} do not hash to key {to_hex(key)}")


@dataclass(frozen=True)
class RefAltLookup:
    """
    Alleles of hashed-path keys, keyed by the full 64-bit key.

    Build once per dataset; immutable afterwards.
    """

    entries: dict[int, tuple[str, str]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, key: int) -> tuple[str, str] | None:
        return self.entries.get(key)

    @classmethod
    def build(cls, variants: Iterable[Variant]) -> "RefAltLookup":
        """
        Collect the hashed-path variants of a dataset.

        Raises:
            LookupCollisionError: Two different allele pairs share chrom, pos and hash.
        """
        entries: dict[int, tuple[str, str]] = {}
        for variant in variants:
            if _is_reversible(variant.ref, variant.alt):
                continue
            key = encode_variant(variant)
            alleles = (variant.ref, variant.alt)
            previous = entries.setdefault(key, alleles)
            if previous != alleles:
                raise LookupCollisionError(
                    f"key {to_hex(key)} collides: {previous[0]}/{previous[1]} vs {alleles[0]}/{alleles[1]}"
                )
        logger.debug("Built REF+ALT lookup with %d entries", len(entries))
        return cls(entries)

    def write(self, path: str | Path) -> None:
        """Tab-separated `hex-key ref alt` lines sorted by key."""
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for key in sorted(self.entries):
                ref, alt = self.entries[key]
                f.write(f"{to_hex(key)}\t{ref}\t{alt}\n")

    @classmethod
    def read(cls, path: str | Path) -> "RefAltLookup":
        """
        Load a lookup file written by write.

        Raises:
            RnckError: A line is malformed, out of key order, holds a reversible
                key, or its alleles are not the normalized pair that hashes to the key.
            LookupCollisionError: One key is listed with two allele pairs.
        """
        entries: dict[int, tuple[str, str]] = {}
        previous_key = -1
        with open(path, encoding="utf-8") as f:
            for number, line in enumerate(f, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise RnckError(f"{path}:{number}: expected 'hex-key<TAB>ref<TAB>alt'")
                key = from_hex(parts[0])
                if not is_hashed(key):
                    raise RnckError(f"{path}:{number}: key {parts[0]} is not a hashed-path key")
                if key < previous_key:
                    raise RnckError(f"{path}:{number}: key {parts[0]} is out of order")
                previous_key = key
                ref, alt = parts[1], parts[2]
                if key in entries and entries[key] != (ref, alt):
                    raise LookupCollisionError(f"{path}:{number}: conflicting alleles for key {parts[0]}")
                _check_lookup_entry(key, ref, alt, f"{path}:{number}")
                entries[key] = (ref, alt)
        logger.debug("Read REF+ALT lookup with %d entries from %s", len(entries), path)
        return cls(entries)


def decode_variant_key(key: int, lookup: RefAltLookup | None = None) -> Variant | HashedVariant:
    """
    Decode a VariantKey.

    Hashed-path keys resolve through the lookup when it holds them and come
    back as HashedVariant otherwise.

    Raises:
        MalformedKeyError: The key is out of range, its chromosome ordinal is
            unassigned (26-31) or its reversible section is not canonical.
    """
    if not 0 <= key <= KEY_MASK:
        raise MalformedKeyError(f"key {key} is not a 64-bit unsigned integer")
    ordinal = extract_chrom(key)
    if ordinal != 0 and ordinal not in _CHROM_LABELS:
        raise MalformedKeyError(f"key {to_hex(key)} has unassigned chromosome ordinal {ordinal}")
    chrom = decode_chrom(ordinal)
    pos = extract_pos(key)
    section = extract_refalt(key)
    alleles = decode_refalt(section)
    if alleles is None and lookup is not None:
        alleles = lookup.get(key)
    if alleles is None:
        return HashedVariant(chrom, pos, section >> 1)
    return Variant(chrom, pos, *alleles)


def variant_range(chrom: str | int, pos_min: int, pos_max: int) -> tuple[int, int]:
    """
    Key range covering every variant of a chromosome with pos_min <= pos <= pos_max.

    Raises:
        InvalidRangeError: pos_min > pos_max.
        PositionOverflowError: pos_max does not fit 28 bits.
    """
    if pos_min > pos_max or pos_min < 0:
        raise InvalidRangeError(f"invalid position range [{pos_min}, {pos_max}]")
    if pos_max >= POS_LIMIT:
        raise PositionOverflowError(f"position {pos_max} does not fit in {POS_BITS} bits")
    ordinal = chrom if isinstance(chrom, int) else encode_chrom(normalize_chrom(chrom))
    if not 0 <= ordinal < 32:
        raise InvalidRangeError(f"chromosome ordinal {ordinal} does not fit in 5 bits")
    base = ordinal << CHROM_SHIFT
    return base | (pos_min << POS_SHIFT), base | (pos_max << POS_SHIFT) | REFALT_MASK
