"""
Command-line front end for rnck.

    rnck schema validate PATH
    rnck schema prefix PATH VALUE...
    rnck encode --schema PATH [INPUT]
    rnck decode --schema PATH [INPUT]
    rnck variantkey encode|decode|range ...
    rnck numkey encode|decode [INPUT]
    rnck index build|search|range|join ...
    rnck bench [--count N]
    rnck serve

Rows are delimited text (TAB by default, or RNCK_DELIMITER); input comes
from stdin when no path is given. Data goes to stdout, diagnostics to stderr.

Exit status: 0 success, 1 data or validation failure, 2 usage or I/O failure.
"""

import argparse
import logging
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Iterator, TextIO

import numpy as np

from rnck import keyindex, numkey, schema as codec, variantkey
from rnck.errors import InvalidVariantError, RnckError, SchemaParseError
from rnck.utils import default_delimiter, env_flag

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Bad invocation or unreadable input; maps to exit status 2."""


@dataclass(frozen=True)
class CliConfig:
    command: str
    input_path: str | None = None
    output_path: str | None = None
    schema_path: str | None = None
    delimiter: str = "\t"
    decimal: bool = False
    strict: bool = False
    lookup_path: str | None = None

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "CliConfig":
        delimiter = getattr(args, "delimiter", None) or default_delimiter()
        return cls(
            command=" ".join(filter(None, (args.command, getattr(args, "action", None)))),
            input_path=getattr(args, "input", None),
            output_path=getattr(args, "output", None),
            schema_path=getattr(args, "schema", None),
            delimiter="\t" if delimiter == "\\t" else delimiter,
            decimal=getattr(args, "decimal", False),
            strict=getattr(args, "strict", False) or env_flag("RNCK_STRICT"),
            lookup_path=getattr(args, "lookup", None),
        )


def format_key(key: int, decimal: bool = False) -> str:
    return str(key) if decimal else codec.to_hex(key)


@contextmanager
def _open_input(path: str | None) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdin
        return
    try:
        f = open(path, encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e}") from e
    with f:
        yield f


@contextmanager
def _open_output(path: str | None) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdout
        return
    try:
        f = open(path, "w", encoding="utf-8", newline="\n")
    except OSError as e:
        raise UsageError(f"cannot write {path}: {e}") from e
    with f:
        yield f


def process_rows(config: CliConfig, convert: Callable[[list[str]], str]) -> int:
    """
    Stream rows from input to output through convert.

    A row that raises RnckError is reported with its line number; --strict
    stops at the first one, otherwise the row is skipped and counted.
    """
    skipped = 0
    with _open_input(config.input_path) as source, _open_output(config.output_path) as sink:
        for number, line in enumerate(source, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            try:
                sink.write(convert(line.split(config.delimiter)) + "\n")
            except RnckError as e:
                logger.error("line %d: %s", number, e)
                if config.strict:
                    return EXIT_DATA
                skipped += 1
    if skipped:
        logger.error("%s: skipped %d malformed row(s)", config.command, skipped)
    return EXIT_OK


def _load_schema(config: CliConfig) -> codec.KeySchema:
    if not config.schema_path:
        raise UsageError("--schema PATH is required")
    try:
        return codec.load_schema(config.schema_path)
    except OSError as e:
        raise UsageError(f"cannot read schema {config.schema_path}: {e}") from e
    except SchemaParseError as e:
        raise UsageError(f"cannot parse schema {config.schema_path}: {e}") from e


def cmd_schema_validate(config: CliConfig, args: argparse.Namespace) -> int:
    """Print the per-field layout; exit 1 with the violation list when the schema is invalid."""
    schema = _load_schema(config)
    report = codec.validate_schema(schema)
    with _open_output(config.output_path) as out:
        out.write(f"schema\t{schema.name}\n")
        for spec, shift in zip(schema.fields, schema.shifts):
            out.write(f"field\t{spec.name}\t{spec.kind.value}\t{spec.cardinality}\twidth={spec.width}\tshift={shift}\n")
        out.write(f"total_bits\t{schema.total_bits}\tof {codec.KEY_BITS}\n")
        if report.ok:
            out.write("ok\n")
            return EXIT_OK
        for violation in report.violations:
            out.write(f"violation\t{violation}\n")
    return EXIT_DATA


def cmd_schema_prefix(config: CliConfig, args: argparse.Namespace) -> int:
    schema = _load_schema(config)
    lo, hi = codec.prefix_range(schema, args.values)
    with _open_output(config.output_path) as out:
        out.write(f"{format_key(lo, config.decimal)}\t{format_key(hi, config.decimal)}\n")
    return EXIT_OK


def cmd_encode(config: CliConfig, args: argparse.Namespace) -> int:
    schema = _load_schema(config)
    codec.require_valid(schema)
    return process_rows(config, lambda row: format_key(codec.encode_row(schema, row), config.decimal))


def cmd_decode(config: CliConfig, args: argparse.Namespace) -> int:
    schema = _load_schema(config)
    codec.require_valid(schema)

    def convert(row: list[str]) -> str:
        ordinals = codec.decode(schema, codec.parse_key(row[0], config.decimal))
        return config.delimiter.join(codec.render(schema, ordinals))

    return process_rows(config, convert)


def _parse_position(text: str) -> int:
    text = text.strip()
    if not (text.isascii() and text.isdigit()):
        raise InvalidVariantError(f"position {text!r} is not a non-negative integer")
    return int(text)


def cmd_variantkey_encode(config: CliConfig, args: argparse.Namespace) -> int:
    hashed: list[variantkey.Variant] = []

    def convert(row: list[str]) -> str:
        if len(row) != 4:
            raise InvalidVariantError(f"expected 4 columns (chrom, pos, ref, alt), got {len(row)}")
        variant = variantkey.normalize_variant(row[0], _parse_position(row[1]), row[2], row[3])
        key = variantkey.encode_variant(variant)
        if args.write_lookup and variantkey.is_hashed(key):
            hashed.append(variant)
        return format_key(key, config.decimal)

    status = process_rows(config, convert)
    if args.write_lookup:
        try:
            variantkey.RefAltLookup.build(hashed).write(args.write_lookup)
        except OSError as e:
            raise UsageError(f"cannot write lookup {args.write_lookup}: {e}") from e
    return status


def cmd_variantkey_decode(config: CliConfig, args: argparse.Namespace) -> int:
    lookup = None
    if config.lookup_path:
        try:
            lookup = variantkey.RefAltLookup.read(config.lookup_path)
        except OSError as e:
            raise UsageError(f"cannot read lookup {config.lookup_path}: {e}") from e

    def convert(row: list[str]) -> str:
        decoded = variantkey.decode_variant_key(codec.parse_key(row[0], config.decimal), lookup)
        if isinstance(decoded, variantkey.HashedVariant):
            fields = [decoded.chrom, str(decoded.pos), ".", f"#{decoded.refalt_hash:08X}"]
        else:
            fields = [decoded.chrom, str(decoded.pos), decoded.ref, decoded.alt]
        return config.delimiter.join(fields)

    return process_rows(config, convert)


def cmd_variantkey_range(config: CliConfig, args: argparse.Namespace) -> int:
    if args.pos_min > args.pos_max:
        raise UsageError(f"pos_min {args.pos_min} > pos_max {args.pos_max}")
    lo, hi = variantkey.variant_range(args.chrom, args.pos_min, args.pos_max)
    with _open_output(config.output_path) as out:
        out.write(f"{format_key(lo, config.decimal)}\t{format_key(hi, config.decimal)}\n")
    return EXIT_OK


def cmd_numkey_encode(config: CliConfig, args: argparse.Namespace) -> int:
    def convert(row: list[str]) -> str:
        if len(row) != 2:
            raise RnckError(f"expected 2 columns (country, digits), got {len(row)}")
        return format_key(numkey.num_key(row[0].strip(), row[1].strip()), config.decimal)

    return process_rows(config, convert)


def cmd_numkey_decode(config: CliConfig, args: argparse.Namespace) -> int:
    def convert(row: list[str]) -> str:
        number = numkey.decode_num_key(codec.parse_key(row[0], config.decimal))
        return config.delimiter.join((number.country, number.digits))

    return process_rows(config, convert)


def _read_index(path: str) -> keyindex.KeyIndex:
    try:
        return keyindex.read_index(path, mmap=True)
    except OSError as e:
        raise UsageError(f"cannot read index {path}: {e}") from e


def cmd_index_build(config: CliConfig, args: argparse.Namespace) -> int:
    keys = []
    skipped = 0
    with _open_input(config.input_path) as source:
        for number, line in enumerate(source, start=1):
            text = line.split(config.delimiter, 1)[0].strip()
            if not text:
                continue
            try:
                keys.append(codec.parse_key(text, config.decimal))
            except RnckError as e:
                logger.error("line %d: %s", number, e)
                if config.strict:
                    return EXIT_DATA
                skipped += 1
    index = keyindex.build_index(keys)
    try:
        keyindex.write_index(index, config.output_path)
    except OSError as e:
        raise UsageError(f"cannot write index {config.output_path}: {e}") from e
    if skipped:
        logger.error("index build: skipped %d malformed key(s)", skipped)
    logger.info("index build: wrote %d key(s) to %s", index.count, config.output_path)
    return EXIT_OK


def cmd_index_search(config: CliConfig, args: argparse.Namespace) -> int:
    index = _read_index(args.index)
    key = codec.parse_key(args.key, config.decimal)
    first, last = index.find_first(key), index.find_last(key)
    print("not-found" if first is None else f"{first}\t{last}")
    return EXIT_OK


def cmd_index_range(config: CliConfig, args: argparse.Namespace) -> int:
    lo, hi = codec.parse_key(args.lo, config.decimal), codec.parse_key(args.hi, config.decimal)
    if lo > hi:
        raise UsageError(f"range lower bound {args.lo} > upper bound {args.hi}")
    start, count = _read_index(args.index).range_scan(lo, hi)
    print(f"{start}\t{count}")
    return EXIT_OK


def cmd_index_join(config: CliConfig, args: argparse.Namespace) -> int:
    result = keyindex.merge_join(_read_index(args.left), _read_index(args.right), args.kind)
    with _open_output(config.output_path) as out:
        for left, right in result:
            out.write(f"{'-' if left is None else left}\t{'-' if right is None else right}\n")
    return EXIT_OK


def cmd_bench(config: CliConfig, args: argparse.Namespace) -> int:
    """Informal throughput figures for the vectorized codec and the index."""
    schema = codec.bundled_schema("numkey")
    rng = np.random.default_rng(args.seed)
    n = args.count
    columns = [
        rng.integers(1, 27, n, dtype=np.uint64),
        rng.integers(1, 27, n, dtype=np.uint64),
        rng.integers(0, 10**12, n, dtype=np.uint64),
        np.full(n, 12, dtype=np.uint64),
    ]
    timings = {}
    started = time.perf_counter()
    keys = codec.encode_array(schema, columns)
    timings["encode"] = time.perf_counter() - started
    started = time.perf_counter()
    codec.decode_array(schema, keys)
    timings["decode"] = time.perf_counter() - started
    started = time.perf_counter()
    index = keyindex.build_index(keys)
    timings["build"] = time.perf_counter() - started
    probes = keys[: min(n, 10_000)].tolist()
    started = time.perf_counter()
    for probe in probes:
        index.find_first(probe)
    timings["search"] = time.perf_counter() - started

    # composite form: 2-char country + 12-digit number as text, plus an int length
    composite_bytes = sum(sys.getsizeof(x) for x in ("IT", "123456789012", 12))
    with _open_output(config.output_path) as out:
        out.write(f"keys\t{n}\n")
        for name in ("encode", "decode", "build"):
            out.write(f"{name}_per_sec\t{n / max(timings[name], 1e-9):.0f}\n")
        out.write(f"search_per_sec\t{len(probes) / max(timings['search'], 1e-9):.0f}\n")
        out.write(f"bytes_per_key\t{keys.itemsize}\tcomposite_bytes\t{composite_bytes}\n")
    return EXIT_OK


def cmd_serve(config: CliConfig, args: argparse.Namespace) -> int:
    """Launch the MCP server selected by RNCK_SIMPLE_MODE (default: FastMCP)."""
    if env_flag("RNCK_SIMPLE_MODE", default=True):
        logger.debug("RNCK_SIMPLE_MODE is enabled. Launching FastMCP Server.")
        from rnck.server_fastmcp import run_simple_server
        run_simple_server()
    else:
        logger.debug("RNCK_SIMPLE_MODE is disabled. Launching Low-Level Server.")
        from rnck.server_lowlevel import run_server
        run_server()
    return EXIT_OK


def _delimiter(text: str) -> str:
    if not text:
        raise argparse.ArgumentTypeError("delimiter must not be empty")
    return "\t" if text in ("\\t", "tab", "TAB") else text


def build_parser() -> argparse.ArgumentParser:
    io = argparse.ArgumentParser(add_help=False)
    io.add_argument("input", nargs="?", help="input file (default: stdin)")
    io.add_argument("-o", "--output", help="output file (default: stdout)")
    io.add_argument("--delimiter", type=_delimiter, help="field delimiter (default: TAB or RNCK_DELIMITER)")
    io.add_argument("--decimal", action="store_true", help="keys as decimal instead of 16-char hex")
    io.add_argument("--strict", action="store_true", help="abort on the first malformed row")

    keys = argparse.ArgumentParser(add_help=False)
    keys.add_argument("--decimal", action="store_true", help="keys as decimal instead of 16-char hex")
    keys.add_argument("-o", "--output", help="output file (default: stdout)")

    parser = argparse.ArgumentParser(prog="rnck", description="Reversible numeric composite keys.")
    commands = parser.add_subparsers(dest="command", required=True)

    schema_cmd = commands.add_parser("schema", help="inspect schema files")
    schema_actions = schema_cmd.add_subparsers(dest="action", required=True)
    p = schema_actions.add_parser("validate", parents=[keys], help="check a schema file and print its layout")
    p.add_argument("schema", help="schema file")
    p.set_defaults(handler=cmd_schema_validate)
    p = schema_actions.add_parser("prefix", parents=[keys], help="key range sharing leading field values")
    p.add_argument("schema", help="schema file")
    p.add_argument("values", nargs="+", help="values of the leading fields")
    p.set_defaults(handler=cmd_schema_prefix)

    p = commands.add_parser("encode", parents=[io], help="encode delimited rows with a schema")
    p.add_argument("--schema", required=True, help="schema file")
    p.set_defaults(handler=cmd_encode)
    p = commands.add_parser("decode", parents=[io], help="decode keys with a schema")
    p.add_argument("--schema", required=True, help="schema file")
    p.set_defaults(handler=cmd_decode)

    vk = commands.add_parser("variantkey", help="genetic variant keys")
    vk_actions = vk.add_subparsers(dest="action", required=True)
    p = vk_actions.add_parser("encode", parents=[io], help="chrom, pos, ref, alt rows to keys")
    p.add_argument("--write-lookup", metavar="PATH", help="write the REF+ALT lookup for hashed rows")
    p.set_defaults(handler=cmd_variantkey_encode)
    p = vk_actions.add_parser("decode", parents=[io], help="keys to chrom, pos, ref, alt rows")
    p.add_argument("--lookup", metavar="PATH", help="REF+ALT lookup for hashed keys")
    p.set_defaults(handler=cmd_variantkey_decode)
    p = vk_actions.add_parser("range", parents=[keys], help="key range of a chromosome region")
    p.add_argument("chrom")
    p.add_argument("pos_min", type=int)
    p.add_argument("pos_max", type=int)
    p.set_defaults(handler=cmd_variantkey_range)

    nk = commands.add_parser("numkey", help="phone number keys")
    nk_actions = nk.add_subparsers(dest="action", required=True)
    p = nk_actions.add_parser("encode", parents=[io], help="country, digits rows to keys")
    p.set_defaults(handler=cmd_numkey_encode)
    p = nk_actions.add_parser("decode", parents=[io], help="keys to country, digits rows")
    p.set_defaults(handler=cmd_numkey_decode)

    ix = commands.add_parser("index", help="sorted key index files")
    ix_actions = ix.add_subparsers(dest="action", required=True)
    p = ix_actions.add_parser("build", parents=[io], help="build an index from a key stream")
    p.set_defaults(handler=cmd_index_build)
    p = ix_actions.add_parser("search", parents=[keys], help="first and last position of a key")
    p.add_argument("index")
    p.add_argument("key")
    p.set_defaults(handler=cmd_index_search)
    p = ix_actions.add_parser("range", parents=[keys], help="start and count of keys in [lo, hi]")
    p.add_argument("index")
    p.add_argument("lo")
    p.add_argument("hi")
    p.set_defaults(handler=cmd_index_range)
    p = ix_actions.add_parser("join", parents=[keys], help="merge join two indexes")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--kind", choices=[k.value for k in keyindex.JoinKind], default="inner")
    p.set_defaults(handler=cmd_index_join)

    p = commands.add_parser("bench", parents=[keys], help="informal throughput measurement")
    p.add_argument("--count", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_bench)

    p = commands.add_parser("serve", help="run the MCP server on stdio")
    p.set_defaults(handler=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    """Parse arguments, run one subcommand and return its exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    if args.command == "index" and args.action == "build" and not getattr(args, "output", None):
        parser.print_usage(sys.stderr)
        logger.error("index build: -o/--output is required")
        return EXIT_USAGE

    config = CliConfig.from_args(args)
    logger.debug("Running '%s' with %s", config.command, config)
    try:
        return args.handler(config, args)
    except UsageError as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except RnckError as e:
        logger.error("%s: %s", config.command, e)
        return EXIT_DATA
    except OSError as e:
        logger.error("%s: %s", config.command, e)
        return EXIT_USAGE
