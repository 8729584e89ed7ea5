import random
import tempfile
import unittest
from pathlib import Path

import pytest
from hypothesis import given
import hypothesis.strategies as st

from rnck import schema as codec
from rnck.errors import (
    InvalidRangeError,
    InvalidVariantError,
    LookupCollisionError,
    MalformedKeyError,
    PositionOverflowError,
    RnckError,
)
from rnck.variantkey import (
    HashedVariant,
    RefAltLookup,
    Variant,
    decode_chrom,
    decode_refalt,
    decode_variant_key,
    encode_chrom,
    encode_refalt,
    encode_variant,
    extract_chrom,
    extract_pos,
    extract_refalt,
    is_hashed,
    normalize_variant,
    refalt_hash,
    variant_key,
    variant_range,
)

GOLDEN = 0x98DF12F988B00000
HASHED = 0x0800003217DBAF43

alleles = st.text(alphabet="ACGT", min_size=1, max_size=10)


class TestNormalizeVariant(unittest.TestCase):

    def test_prefix_trim_moves_position(self):
        """
        Test that the shared leading base is dropped and pos advances.
        """
        self.assertEqual(normalize_variant("chr19", 29238770, "TC", "TG"), Variant("19", 29238771, "C", "G"))

    def test_suffix_then_prefix(self):
        """
        Test that the common suffix is trimmed before the prefix.
        """
        self.assertEqual(normalize_variant("1", 100, "GAT", "GAC"), Variant("1", 102, "T", "C"))
        self.assertEqual(normalize_variant("1", 100, "CAA", "CA"), Variant("1", 100, "CA", "C"))

    def test_single_base_alleles_are_kept(self):
        """
        Test that trimming never empties an allele.
        """
        self.assertEqual(normalize_variant("X", 5000, "G", "GA"), Variant("X", 5000, "G", "GA"))
        self.assertEqual(normalize_variant("X", 5000, "A", "A"), Variant("X", 5000, "A", "A"))

    def test_chromosome_labels(self):
        """
        Test prefix removal, upper-casing and the M alias.
        """
        self.assertEqual(normalize_variant("chrM", 73, "a", "n").chrom, "MT")
        self.assertEqual(normalize_variant("chrx", 1, "A", "C").chrom, "X")
        self.assertEqual(normalize_variant("Un_gl000220", 1, "A", "C").chrom, "UN_GL000220")

    def test_invalid_variants(self):
        """
        Test empty alleles and negative positions.
        """
        with self.assertRaises(InvalidVariantError):
            normalize_variant("1", 100, "", "C")
        with self.assertRaises(InvalidVariantError):
            normalize_variant("1", -1, "A", "C")


class TestChromosome(unittest.TestCase):

    def test_ordinals(self):
        """
        Test the fixed chromosome ordinals and the unknown label.
        """
        self.assertEqual([encode_chrom(str(n)) for n in (1, 22)], [1, 22])
        self.assertEqual([encode_chrom(c) for c in ("X", "Y", "MT", "M")], [23, 24, 25, 25])
        self.assertEqual(encode_chrom("UN"), 0)
        self.assertEqual([decode_chrom(o) for o in (1, 23, 24, 25)], ["1", "X", "Y", "MT"])
        self.assertEqual([decode_chrom(o) for o in (0, 26, 31)], ["NA", "NA", "NA"])


class TestRefAlt(unittest.TestCase):

    def test_reversible_layout(self):
        """
        Test the length nibbles, base codes and clear flag of a reversible section.
        """
        self.assertEqual(encode_refalt("A", "C"), 0x08880000)
        self.assertEqual(encode_refalt("C", "G"), 0x08B00000)
        self.assertEqual(decode_refalt(0x08B00000), ("C", "G"))

    def test_hash_vectors(self):
        """
        Test the 30-bit hash against fixed values and that it separates REF from ALT.
        """
        self.assertEqual(refalt_hash("AAAAAAAAAAAA", "C"), 0x0BEDD7A1)
        self.assertEqual(refalt_hash("AB", "C"), 562004077)
        self.assertEqual(refalt_hash("A", "BC"), 358969149)
        self.assertEqual(refalt_hash("ACGTN", "A"), 556071370)

    def test_hashed_sections(self):
        """
        Test that long or non-ACGT alleles take the hashed path.
        """
        self.assertEqual(encode_refalt("AAAAAAAAAAAA", "C"), (0x0BEDD7A1 << 1) | 1)
        self.assertTrue(encode_refalt("ACGTN", "A") & 1)
        self.assertIsNone(decode_refalt(encode_refalt("ACGTN", "A")))
        # 11 bases still fit
        self.assertFalse(encode_refalt("AAAAAA", "CCCCC") & 1)

    def test_inconsistent_lengths(self):
        """
        Test that zero lengths and overlong totals are malformed.
        """
        for section in (0, 0x00800000, (6 << 27) | (6 << 23)):
            with self.assertRaises(MalformedKeyError):
                decode_refalt(section)

    def test_unused_base_slots_must_be_clear(self):
        """
        Test that a stray bit in any slot past the last base is malformed, not ignored.
        """
        clean = encode_refalt("C", "G")
        for bit in range(1, 19):
            with self.assertRaises(MalformedKeyError):
                decode_refalt(clean | (1 << bit))
        with self.assertRaises(MalformedKeyError):
            decode_variant_key(GOLDEN | 0x20)
        # 11 bases leave no unused slot
        self.assertEqual(decode_refalt(encode_refalt("TTTTTT", "GGGGG")), ("TTTTTT", "GGGGG"))

    @given(alleles, alleles)
    def test_reversible_roundtrip(self, ref, alt):
        """
        Test that every ACGT pair of at most 11 bases decodes exactly.
        """
        if len(ref) + len(alt) > 11:
            self.assertTrue(encode_refalt(ref, alt) & 1)
        else:
            self.assertEqual(decode_refalt(encode_refalt(ref, alt)), (ref, alt))


class TestVariantKey(unittest.TestCase):

    def test_golden_vectors(self):
        """
        Test the reference keys for reversible and hashed variants.
        """
        self.assertEqual(variant_key("chr19", 29238770, "TC", "TG"), GOLDEN)
        self.assertEqual(variant_key("1", 100, "A", "C"), 0x0800003208880000)
        self.assertEqual(variant_key("1", 100, "GAT", "GAC"), 0x0800003308E80000)
        self.assertEqual(variant_key("1", 100, "AAAAAAAAAAAA", "C"), HASHED)

    def test_sections_match_schema_layout(self):
        """
        Test that the key decodes through the bundled 5/28/31 schema.
        """
        schema = codec.bundled_schema("variantkey")
        self.assertEqual(codec.decode(schema, GOLDEN), (19, 29238771, 0x08B00000))
        self.assertEqual((extract_chrom(GOLDEN), extract_pos(GOLDEN), extract_refalt(GOLDEN)), (19, 29238771, 0x08B00000))
        self.assertFalse(is_hashed(GOLDEN))
        self.assertTrue(is_hashed(HASHED))

    def test_decode(self):
        """
        Test decoding reversible and hashed keys.
        """
        self.assertEqual(decode_variant_key(GOLDEN), Variant("19", 29238771, "C", "G"))
        self.assertEqual(decode_variant_key(HASHED), HashedVariant("1", 100, 0x0BEDD7A1))
        with self.assertRaises(MalformedKeyError):
            decode_variant_key(1 << 64)

    def test_unassigned_chromosome_ordinals(self):
        """
        Test that ordinals 26-31 are malformed while ordinal 0 decodes as NA.
        """
        for ordinal in (26, 31):
            with self.assertRaises(MalformedKeyError):
                decode_variant_key((ordinal << 59) | (100 << 31) | 0x08880000)
        self.assertEqual(decode_variant_key((100 << 31) | 0x08880000), Variant("NA", 100, "A", "C"))

    @pytest.mark.slow
    def test_short_variant_roundtrip(self):
        """
        Test 10^5 random short variants through variant_key and decode_variant_key.
        """
        rng = random.Random(31)
        labels = [str(n) for n in range(1, 23)] + ["X", "Y", "MT"]
        for _ in range(100_000):
            chrom = rng.choice(labels)
            pos = rng.randrange((1 << 28) - 5)
            ref = "".join(rng.choice("ACGT") for _ in range(rng.randint(1, 5)))
            alt = "".join(rng.choice("ACGT") for _ in range(rng.randint(1, 5)))
            expected = normalize_variant(chrom, pos, ref, alt)
            self.assertEqual(decode_variant_key(variant_key(chrom, pos, ref, alt)), expected, (chrom, pos, ref, alt))

    def test_position_overflow(self):
        """
        Test the largest position that fits and the first one that does not.
        """
        self.assertEqual(extract_pos(variant_key("1", (1 << 28) - 1, "A", "C")), (1 << 28) - 1)
        with self.assertRaises(PositionOverflowError):
            variant_key("1", 1 << 28, "A", "C")
        with self.assertRaises(PositionOverflowError):
            encode_variant(Variant("1", 1 << 28, "A", "C"))

    def test_key_order_follows_chrom_then_pos(self):
        """
        Test that sorting keys sorts variants by chromosome ordinal, then position.
        """
        rng = random.Random(19)
        variants = [
            Variant(rng.choice(["1", "2", "10", "X", "MT"]), rng.randrange(1 << 28), rng.choice("ACGT"), rng.choice("ACGT"))
            for _ in range(2000)
        ]
        by_key = sorted(variants, key=encode_variant)
        sections = [(encode_chrom(v.chrom), v.pos) for v in by_key]
        self.assertEqual(sections, sorted(sections))


class TestVariantRange(unittest.TestCase):

    def test_range_bounds(self):
        """
        Test the bounds of a chromosome 1 position window.
        """
        lo, hi = variant_range("chr1", 100, 102)
        self.assertEqual(lo, 0x0800003200000000)
        self.assertEqual(hi, 0x080000337FFFFFFF)
        for key in (0x0800003208880000, 0x0800003308E80000, HASHED):
            self.assertTrue(lo <= key <= hi)
        self.assertGreater(variant_key("1", 103, "A", "C"), hi)
        self.assertLess(variant_key("1", 99, "A", "C"), lo)
        self.assertEqual(variant_range(1, 100, 102), (lo, hi))

    def test_invalid_ranges(self):
        """
        Test reversed bounds and out-of-range positions.
        """
        with self.assertRaises(InvalidRangeError):
            variant_range("1", 5, 4)
        with self.assertRaises(PositionOverflowError):
            variant_range("1", 0, 1 << 28)
        with self.assertRaises(InvalidRangeError):
            variant_range(32, 0, 1)


class TestRefAltLookup(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = Path(self.tmp.name) / "refalt.tsv"

    def tearDown(self):
        self.tmp.cleanup()

    def test_build_keeps_only_hashed_variants(self):
        """
        Test that reversible variants are not stored and hashed ones resolve.
        """
        variants = [
            normalize_variant("1", 100, "AAAAAAAAAAAA", "C"),
            normalize_variant("1", 100, "A", "C"),
            normalize_variant("MT", 73, "A", "N"),
        ]
        lookup = RefAltLookup.build(variants)
        self.assertEqual(len(lookup), 2)
        self.assertEqual(lookup.get(HASHED), ("AAAAAAAAAAAA", "C"))
        self.assertEqual(decode_variant_key(HASHED, lookup), Variant("1", 100, "AAAAAAAAAAAA", "C"))

    def test_write_then_read(self):
        """
        Test the tab-separated lookup file.
        """
        lookup = RefAltLookup.build([Variant("1", 100, "AAAAAAAAAAAA", "C")])
        lookup.write(self.path)
        self.assertEqual(self.path.read_text(encoding="utf-8"), "0800003217DBAF43\tAAAAAAAAAAAA\tC\n")
        self.assertEqual(RefAltLookup.read(self.path), lookup)

    def test_read_rejects_reversible_keys(self):
        """
        Test that a lookup file may only hold hashed-path keys.
        """
        self.path.write_text("98DF12F988B00000\tC\tG\n", encoding="utf-8")
        with self.assertRaises(RnckError):
            RefAltLookup.read(self.path)

    def test_duplicate_variant_is_not_a_collision(self):
        """
        Test that the same variant seen twice is stored once.
        """
        variant = Variant("1", 100, "AAAAAAAAAAAA", "C")
        self.assertEqual(len(RefAltLookup.build([variant, variant])), 1)

    @given(
        st.sampled_from(["1", "chr7", "X", "Y", "chrM"]),
        st.integers(0, (1 << 27) - 1),
        st.text(alphabet="ACGTN", min_size=1, max_size=15),
        st.text(alphabet="ACGTN", min_size=1, max_size=15),
    )
    def test_hash_fallback_property(self, chrom, pos, ref, alt):
        """
        Test that long or non-ACGT alleles hash, and decode exactly only through the lookup.
        """
        variant = normalize_variant(chrom, pos, ref, alt)
        key = encode_variant(variant)
        long_or_ambiguous = len(variant.ref) + len(variant.alt) > 11 or "N" in variant.ref + variant.alt
        self.assertEqual(is_hashed(key), long_or_ambiguous)
        if not long_or_ambiguous:
            self.assertEqual(decode_variant_key(key), variant)
            return
        self.assertIsInstance(decode_variant_key(key), HashedVariant)
        self.assertEqual(decode_variant_key(key, RefAltLookup.build([variant])), variant)

    def test_read_rejects_unsorted_lines(self):
        """
        Test that lookup lines must be in ascending key order.
        """
        lookup = RefAltLookup.build([Variant("1", 100, "AAAAAAAAAAAA", "C"), Variant("2", 5, "ACGTN", "A")])
        lookup.write(self.path)
        lines = self.path.read_text(encoding="utf-8").splitlines()
        self.path.write_text("\n".join(reversed(lines)) + "\n", encoding="utf-8")
        with self.assertRaises(RnckError) as ctx:
            RefAltLookup.read(self.path)
        self.assertIn(":2:", str(ctx.exception))

    def test_read_rejects_bad_alleles(self):
        """
        Test empty, non-normalized and non-matching alleles, each reported with its line.
        """
        for alleles in ("\tC", "aaaaaaaaaaaa\tc", "AAAAAAAAAAAAC\tCC", "AAAAAAAAAAAA\tG"):
            self.path.write_text(f"0800003217DBAF43\t{alleles}\n", encoding="utf-8")
            with self.assertRaises(RnckError) as ctx:
                RefAltLookup.read(self.path)
            self.assertIn(":1:", str(ctx.exception), alleles)

    def test_conflicting_file_entries(self):
        """
        Test that one key with two allele pairs is reported as a collision.
        """
        self.path.write_text("0800003217DBAF43\tAAAAAAAAAAAA\tC\n0800003217DBAF43\tN\tC\n", encoding="utf-8")
        with self.assertRaises(LookupCollisionError):
            RefAltLookup.read(self.path)


if __name__ == "__main__":
    unittest.main()
