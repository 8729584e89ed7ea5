import io
import random
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

from rnck.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

VARIANT_KEYS = [
    "98DF12F988B00000",
    "0800003208880000",
    "0800003308E80000",
    "B80009C409500000",
    "0800003217DBAF43",
]
NUMBER_KEYS = [
    "4D000000001E2406",
    "0840000000000001",
    "4D000000001E2407",
    "ACC000078BB712BA",
    "388006849955A00C",
]


class CliTestCase(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def run_cli(self, *argv: str) -> tuple[int, str]:
        stdout = io.StringIO()
        with redirect_stdout(stdout), redirect_stderr(io.StringIO()):
            status = main(list(argv))
        return status, stdout.getvalue()

    def write(self, name: str, text: str) -> str:
        path = self.dir / name
        path.write_text(text, encoding="utf-8")
        return str(path)


class TestVariantKeyCommands(CliTestCase):

    def test_encode_fixture(self):
        """
        Test encoding the variant fixture, including hashed and MT rows.
        """
        status, out = self.run_cli("variantkey", "encode", str(FIXTURES / "variants.tsv"))
        self.assertEqual(status, EXIT_OK)
        keys = out.splitlines()
        self.assertEqual(keys[:5], VARIANT_KEYS)
        self.assertTrue(keys[5].startswith("C8000024"))
        self.assertEqual(int(keys[5], 16) & 1, 1)

    def test_decode_with_and_without_lookup(self):
        """
        Test that hashed keys decode to their alleles only when a lookup is given.
        """
        lookup = str(self.dir / "refalt.tsv")
        keys = str(self.dir / "keys.txt")
        status, _ = self.run_cli(
            "variantkey", "encode", str(FIXTURES / "variants.tsv"), "-o", keys, "--write-lookup", lookup
        )
        self.assertEqual(status, EXIT_OK)
        self.assertEqual(len(Path(lookup).read_text(encoding="utf-8").splitlines()), 2)

        status, out = self.run_cli("variantkey", "decode", keys)
        self.assertEqual(status, EXIT_OK)
        rows = [line.split("\t") for line in out.splitlines()]
        self.assertEqual(rows[0], ["19", "29238771", "C", "G"])
        self.assertEqual(rows[2], ["1", "102", "T", "C"])
        self.assertEqual(rows[4], ["1", "100", ".", "#0BEDD7A1"])

        status, out = self.run_cli("variantkey", "decode", keys, "--lookup", lookup)
        rows = [line.split("\t") for line in out.splitlines()]
        self.assertEqual(rows[4], ["1", "100", "AAAAAAAAAAAA", "C"])
        self.assertEqual(rows[5], ["MT", "73", "A", "N"])

    def test_range(self):
        """
        Test the key range of a chromosome window in hex and decimal.
        """
        status, out = self.run_cli("variantkey", "range", "chr1", "100", "102")
        self.assertEqual((status, out), (EXIT_OK, "0800003200000000\t080000337FFFFFFF\n"))
        status, out = self.run_cli("variantkey", "range", "1", "100", "100", "--decimal")
        self.assertEqual(out.split("\t")[0], str(0x0800003200000000))
        status, _ = self.run_cli("variantkey", "range", "1", "102", "100")
        self.assertEqual(status, EXIT_USAGE)

    def test_bad_rows_are_skipped_or_fatal(self):
        """
        Test non-strict skipping with a line-numbered error and strict abort.
        """
        path = self.write("bad.tsv", "1\t100\tA\tC\n1\tabc\tA\tC\n1\t101\tA\tC\n")
        with self.assertLogs("rnck.cli", level="ERROR") as logs:
            status, out = self.run_cli("variantkey", "encode", path)
        self.assertEqual(status, EXIT_OK)
        self.assertEqual(len(out.splitlines()), 2)
        self.assertTrue(any("line 2" in line for line in logs.output))

        with self.assertLogs("rnck.cli", level="ERROR"):
            status, out = self.run_cli("variantkey", "encode", "--strict", path)
        self.assertEqual(status, EXIT_DATA)
        self.assertEqual(out.splitlines(), ["0800003208880000"])


class TestNumKeyCommands(CliTestCase):

    def test_encode_and_decode_fixture(self):
        """
        Test the number fixture through encode and back through decode.
        """
        keys = str(self.dir / "keys.txt")
        status, _ = self.run_cli("numkey", "encode", str(FIXTURES / "numbers.tsv"), "-o", keys)
        self.assertEqual(status, EXIT_OK)
        self.assertEqual(Path(keys).read_text(encoding="utf-8").splitlines(), NUMBER_KEYS)

        status, out = self.run_cli("numkey", "decode", keys)
        self.assertEqual(status, EXIT_OK)
        self.assertEqual(
            out.splitlines(),
            ["IT\t123456", "AA\t0", "IT\t0123456", "US\t2025550123", "GB\t447911123456"],
        )

    def test_decimal_keys(self):
        """
        Test decimal output and input.
        """
        path = self.write("one.tsv", "IT\t123456\n")
        status, out = self.run_cli("numkey", "encode", path, "--decimal")
        self.assertEqual(out, "5548434740922426374\n")
        status, out = self.run_cli("numkey", "decode", self.write("dec.txt", out), "--decimal")
        self.assertEqual(out, "IT\t123456\n")


class TestSchemaCommands(CliTestCase):

    def test_validate(self):
        """
        Test the layout listing of a valid schema and the violations of an invalid one.
        """
        status, out = self.run_cli("schema", "validate", str(FIXTURES / "grades.schema"))
        self.assertEqual(status, EXIT_OK)
        self.assertIn("field\tyear\tunsigned-integer\t100\twidth=7\tshift=55\n", out)
        self.assertTrue(out.endswith("ok\n"))

        status, out = self.run_cli("schema", "validate", str(FIXTURES / "overflow.schema"))
        self.assertEqual(status, EXIT_DATA)
        self.assertIn("violation\ttotal_bits 66 > 64\n", out)

    def test_missing_or_unparsable_schema(self):
        """
        Test that unreadable schema files are usage errors.
        """
        status, _ = self.run_cli("schema", "validate", str(self.dir / "missing.schema"))
        self.assertEqual(status, EXIT_USAGE)
        broken = self.write("broken.schema", "schema b\nfield x unsigned-integer ten\n")
        status, _ = self.run_cli("encode", "--schema", broken, self.write("rows.tsv", "1\n"))
        self.assertEqual(status, EXIT_USAGE)

    def test_prefix(self):
        """
        Test the key range of all rows for one course.
        """
        status, out = self.run_cli("schema", "prefix", str(FIXTURES / "grades.schema"), "bio")
        self.assertEqual((status, out), (EXIT_OK, "4000000000000000\t7FFC000000000000\n"))

    def test_encode_decode_roundtrip(self):
        """
        Test 1000 random rows through encode and decode with a user schema.
        """
        rng = random.Random(17)
        rows = [
            "\t".join((rng.choice(["ART", "BIO", "CHEM", "MATH"]), str(rng.randrange(100)), rng.choice("ABCDF")))
            for _ in range(1000)
        ]
        rows_path = self.write("rows.tsv", "\n".join(rows) + "\n")
        keys_path = str(self.dir / "keys.txt")
        schema = str(FIXTURES / "grades.schema")

        status, _ = self.run_cli("encode", "--schema", schema, rows_path, "-o", keys_path)
        self.assertEqual(status, EXIT_OK)
        status, out = self.run_cli("decode", "--schema", schema, keys_path)
        self.assertEqual(status, EXIT_OK)
        self.assertEqual(out.splitlines(), rows)

        # key order is row order
        keys = Path(keys_path).read_text(encoding="utf-8").splitlines()
        order = sorted(range(1000), key=lambda i: keys[i])
        parsed = [r.split("\t") for r in rows]
        ranks = [(["ART", "BIO", "CHEM", "MATH"].index(c), int(y), "ABCDF".index(g)) for c, y, g in parsed]
        self.assertEqual([ranks[i] for i in order], sorted(ranks))

    def test_unknown_values_and_padding(self):
        """
        Test an unknown enumeration value on encode and nonzero padding on decode.
        """
        schema = str(FIXTURES / "grades.schema")
        with self.assertLogs("rnck.cli", level="ERROR") as logs:
            status, _ = self.run_cli("encode", "--schema", schema, "--strict", self.write("r.tsv", "ART\t1\tE\n"))
        self.assertEqual(status, EXIT_DATA)
        self.assertTrue(any("grade" in line for line in logs.output))

        with self.assertLogs("rnck.cli", level="ERROR"):
            status, _ = self.run_cli("decode", "--schema", schema, "--strict", self.write("k.txt", "0000000000000001\n"))
        self.assertEqual(status, EXIT_DATA)

    def test_empty_input(self):
        """
        Test that empty input encodes and decodes to empty output with exit 0.
        """
        schema = str(FIXTURES / "grades.schema")
        empty = self.write("empty.tsv", "")
        self.assertEqual(self.run_cli("encode", "--schema", schema, empty), (EXIT_OK, ""))
        self.assertEqual(self.run_cli("decode", "--schema", schema, empty), (EXIT_OK, ""))


class TestIndexCommands(CliTestCase):

    def build(self, fixture: str) -> str:
        path = str(self.dir / f"{fixture}.rnck")
        status, _ = self.run_cli("index", "build", str(FIXTURES / fixture), "-o", path)
        self.assertEqual(status, EXIT_OK)
        return path

    def test_build_reports_count(self):
        """
        Test that index build logs the number of keys written and prints nothing.
        """
        path = str(self.dir / "left.rnck")
        with self.assertLogs("rnck.cli", level="INFO") as logs:
            status, out = self.run_cli("index", "build", str(FIXTURES / "left_keys.txt"), "-o", path)
        self.assertEqual((status, out), (EXIT_OK, ""))
        count = len((FIXTURES / "left_keys.txt").read_text(encoding="utf-8").split())
        self.assertTrue(any(f"wrote {count} key(s)" in line for line in logs.output))

    def test_search_and_range(self):
        """
        Test duplicate runs, absent keys and range counts on the left fixture.
        """
        left = self.build("left_keys.txt")
        self.assertEqual(self.run_cli("index", "search", left, "98DF12F988B00000"), (EXIT_OK, "4\t5\n"))
        self.assertEqual(self.run_cli("index", "search", left, "0000000000000000"), (EXIT_OK, "not-found\n"))
        self.assertEqual(
            self.run_cli("index", "range", left, "0800000000000000", "0FFFFFFFFFFFFFFF"), (EXIT_OK, "0\t3\n")
        )
        status, _ = self.run_cli("index", "range", left, "0FFFFFFFFFFFFFFF", "0800000000000000")
        self.assertEqual(status, EXIT_USAGE)

    def test_join_fixtures(self):
        """
        Test inner and full joins against the expected fixture rows.
        """
        left, right = self.build("left_keys.txt"), self.build("right_keys.txt")
        for kind in ("inner", "full"):
            status, out = self.run_cli("index", "join", left, right, "--kind", kind)
            self.assertEqual(status, EXIT_OK)
            self.assertEqual(out, (FIXTURES / f"{kind}_join.tsv").read_text(encoding="utf-8"))

    def test_build_requires_output(self):
        """
        Test that index build without -o is a usage error.
        """
        with self.assertLogs("rnck.cli", level="ERROR"):
            status, _ = self.run_cli("index", "build", str(FIXTURES / "left_keys.txt"))
        self.assertEqual(status, EXIT_USAGE)

    def test_corrupt_index_is_a_data_error(self):
        """
        Test that a file with a bad magic number is rejected.
        """
        path = self.write("bad.rnck", "XXXX" + "\0" * 12)
        with self.assertLogs("rnck.cli", level="ERROR"):
            status, _ = self.run_cli("index", "search", path, "0000000000000000")
        self.assertEqual(status, EXIT_DATA)


class TestUsage(CliTestCase):

    def test_bad_invocations(self):
        """
        Test unknown commands and missing arguments.
        """
        self.assertEqual(self.run_cli()[0], EXIT_USAGE)
        self.assertEqual(self.run_cli("frobnicate")[0], EXIT_USAGE)
        self.assertEqual(self.run_cli("encode")[0], EXIT_USAGE)

    def test_missing_input_file(self):
        """
        Test that an unreadable input file exits with status 2.
        """
        with self.assertLogs("rnck.cli", level="ERROR"):
            status, _ = self.run_cli("numkey", "encode", str(self.dir / "nope.tsv"))
        self.assertEqual(status, EXIT_USAGE)

    def test_bench(self):
        """
        Test that the benchmark reports every figure.
        """
        status, out = self.run_cli("bench", "--count", "1000")
        self.assertEqual(status, EXIT_OK)
        names = [line.split("\t")[0] for line in out.splitlines()]
        self.assertEqual(names, ["keys", "encode_per_sec", "decode_per_sec", "build_per_sec", "search_per_sec", "bytes_per_key"])


if __name__ == "__main__":
    unittest.main()
