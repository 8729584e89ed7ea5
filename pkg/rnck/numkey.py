"""
NumKey: 64-bit keys for short codes and E.164 local numbers.

    [ 5 bit letter ][ 5 bit letter ][ 50 bit NUMBER ][ 4 bit LENGTH ]

Country letters are 1-based (A=1 ... Z=26, 0 is invalid). LENGTH keeps the
digit count so numbers that differ only in leading zeros stay distinct.
"""

from dataclasses import dataclass

from rnck.errors import CountryError, EmptyNumberError, InconsistentKeyError, InvalidKeyError, MalformedKeyError, NumberError
from rnck.schema import KEY_MASK

LETTER_1_SHIFT = 59
LETTER_2_SHIFT = 54
NUMBER_SHIFT = 4
LETTER_MASK = 0x1F
NUMBER_MASK = (1 << 50) - 1
LENGTH_MASK = 0xF
MAX_DIGITS = 15

_DIGITS = frozenset("0123456789")


@dataclass(frozen=True)
class PhoneNumber:
    country: str
    digits: str


def _letter_ordinal(letter: str) -> int:
    if len(letter) != 1 or not ("A" <= letter <= "Z"):
        raise CountryError(f"invalid country letter {letter!r}")
    return ord(letter) - ord("A") + 1


def num_key(country: str, digits: str) -> int:
    """
    Encode a two-letter country code and a digit string.

    Raises:
        CountryError: country is not two ASCII letters.
        EmptyNumberError: digits is empty.
        NumberError: more than 15 digits or a non-digit character.
    """
    if not country.isascii():
        raise CountryError(f"country code {country!r} is not ASCII")
    country = country.upper()
    if len(country) != 2:
        raise CountryError(f"country code {country!r} must be two letters")
    first, second = (_letter_ordinal(c) for c in country)

    if not digits:
        raise EmptyNumberError("number has no digits")
    if len(digits) > MAX_DIGITS:
        raise NumberError(f"number has {len(digits)} digits, at most {MAX_DIGITS} allowed")
    bad = next((c for c in digits if c not in _DIGITS), None)
    if bad is not None:
        raise NumberError(f"non-digit character {bad!r} in number {digits!r}")

    return (first << LETTER_1_SHIFT) | (second << LETTER_2_SHIFT) | (int(digits) << NUMBER_SHIFT) | len(digits)


def extract_country(key: int) -> str:
    """Country letters of a key; raises InvalidKeyError on ordinals outside 1..26."""
    letters = []
    for shift in (LETTER_1_SHIFT, LETTER_2_SHIFT):
        ordinal = (key >> shift) & LETTER_MASK
        if not 1 <= ordinal <= 26:
            raise InvalidKeyError(f"letter section value {ordinal} outside 1..26", "country")
        letters.append(chr(ord("A") + ordinal - 1))
    return "".join(letters)


def extract_number(key: int) -> int:
    return (key >> NUMBER_SHIFT) & NUMBER_MASK


def extract_length(key: int) -> int:
    return key & LENGTH_MASK


def decode_num_key(key: int) -> PhoneNumber:
    """
    Decode a NumKey.

    Raises:
        InvalidKeyError: A letter section is 0 or above 26.
        InconsistentKeyError: LENGTH is 0 or too short for NUMBER.
    """
    if not 0 <= key <= KEY_MASK:
        raise MalformedKeyError(f"key {key} is not a 64-bit unsigned integer")
    country = extract_country(key)
    value = extract_number(key)
    length = extract_length(key)
    if length == 0:
        raise InconsistentKeyError("length section is 0", "length")
    if value >= 10**length:
        raise InconsistentKeyError(f"number {value} has more than {length} digits", "number")
    return PhoneNumber(country, str(value).zfill(length))
