"""
Provides the FastMCP server logic for rnck.

This server exposes a fixed set of tools: generic schema encode/decode plus the
VariantKey and NumKey codecs. Schemas come from the bundled set and from
RNCK_SCHEMA_DIR; RNCK_REFALT_LOOKUP optionally names a REF+ALT lookup file for
decoding hashed VariantKeys.
"""

import os
import sys
import json
from mcp.server.fastmcp import FastMCP

from rnck import numkey, schema as codec, variantkey
from rnck.errors import RnckError
from rnck.utils import discover_schemas, setup_logging

# Environment variables
RNCK_SCHEMA_DIR = os.getenv("RNCK_SCHEMA_DIR", "")
RNCK_REFALT_LOOKUP = os.getenv("RNCK_REFALT_LOOKUP", "")

DEBUG = os.getenv("DEBUG", "").lower() in ("true", "1", "yes")

# Configure logging
logger = setup_logging(debug=DEBUG)

logger.debug(f"RNCK schema directory: {RNCK_SCHEMA_DIR or '<bundled only>'}")
logger.debug(f"RNCK REF+ALT lookup: {RNCK_REFALT_LOOKUP or '<none>'}")

# Initialize MCP Server
mcp = FastMCP("RNCK-Codec")

_lookup: variantkey.RefAltLookup | None = None


def load_schemas(schema_dir: str = "") -> dict[str, codec.KeySchema]:
    """Bundled schemas plus those in schema_dir, filtered and keyed by name."""
    schemas = {schema.name: schema for schema in discover_schemas(schema_dir or None)}
    logger.debug("Loaded %d schemas: %s", len(schemas), ", ".join(schemas))
    return schemas


SCHEMAS = load_schemas(RNCK_SCHEMA_DIR)


def _error(e: Exception) -> str:
    return json.dumps({"error": str(e)})


def _find_schema(name: str) -> codec.KeySchema:
    schema = SCHEMAS.get(name)
    if schema is None:
        raise RnckError(f"unknown schema '{name}'")
    return schema


def _refalt_lookup() -> variantkey.RefAltLookup | None:
    global _lookup
    if _lookup is None and RNCK_REFALT_LOOKUP:
        _lookup = variantkey.RefAltLookup.read(RNCK_REFALT_LOOKUP)
    return _lookup


def describe_schema(schema: codec.KeySchema) -> dict:
    report = codec.validate_schema(schema)
    return {
        "name": schema.name,
        "total_bits": schema.total_bits,
        "ok": report.ok,
        "violations": list(report.violations),
        "fields": [
            {"name": spec.name, "kind": spec.kind.value, "cardinality": spec.cardinality, "width": spec.width, "shift": shift}
            for spec, shift in zip(schema.fields, schema.shifts)
        ],
    }


@mcp.tool()
def list_schemas() -> str:
    """
    List the key schemas available to encode_key and decode_key.

    Returns:
        str: A JSON-encoded list of schema layouts.
    """
    logger.debug("Handling list_schemas tool.")
    return json.dumps([describe_schema(schema) for schema in SCHEMAS.values()])


@mcp.tool()
def encode_key(schema: str, values: list[str]) -> str:
    """
    Encode one value per data field of a schema into a 64-bit key.

    Args:
        schema (str): Schema name, see list_schemas.
        values (list[str]): Field values in schema order (reserved fields omitted).

    Returns:
        str: JSON with the key as 16-char hex and as decimal, or an error.
    """
    logger.debug(f"encode_key called with schema={schema}, values={values}")
    try:
        key = codec.encode_row(_find_schema(schema), values)
        return json.dumps({"key": codec.to_hex(key), "decimal": str(key)})
    except RnckError as e:
        logger.error(f"encode_key failed: {e}")
        return _error(e)


@mcp.tool()
def decode_key(schema: str, key: str) -> str:
    """
    Decode a 16-char hex (or decimal) key with a schema.

    Returns:
        str: JSON with the rendered field values and their ordinals, or an error.
    """
    logger.debug(f"decode_key called with schema={schema}, key={key}")
    try:
        layout = _find_schema(schema)
        ordinals = codec.decode(layout, codec.parse_key(key))
        return json.dumps({"values": codec.render(layout, ordinals), "ordinals": [str(o) for o in ordinals]})
    except RnckError as e:
        logger.error(f"decode_key failed: {e}")
        return _error(e)


@mcp.tool()
def encode_variant(chrom: str, pos: int, ref: str, alt: str) -> str:
    """
    Normalize a genetic variant and encode it as a VariantKey.

    Args:
        chrom (str): Chromosome label, e.g. "chr19" or "X".
        pos (int): 0-based position.
        ref (str): Reference allele.
        alt (str): Alternate allele.
    """
    logger.debug(f"encode_variant called with {chrom}, {pos}, {ref}, {alt}")
    try:
        key = variantkey.variant_key(chrom, pos, ref, alt)
        return json.dumps({"key": codec.to_hex(key), "decimal": str(key), "hashed": variantkey.is_hashed(key)})
    except RnckError as e:
        logger.error(f"encode_variant failed: {e}")
        return _error(e)


@mcp.tool()
def decode_variant(key: str) -> str:
    """
    Decode a VariantKey. Hashed keys missing from the lookup report their 30-bit hash instead of alleles.
    """
    logger.debug(f"decode_variant called with key={key}")
    try:
        decoded = variantkey.decode_variant_key(codec.parse_key(key), _refalt_lookup())
    except (RnckError, OSError) as e:
        logger.error(f"decode_variant failed: {e}")
        return _error(e)
    if isinstance(decoded, variantkey.HashedVariant):
        return json.dumps({"chrom": decoded.chrom, "pos": decoded.pos, "refalt_hash": f"{decoded.refalt_hash:08X}"})
    return json.dumps({"chrom": decoded.chrom, "pos": decoded.pos, "ref": decoded.ref, "alt": decoded.alt})


@mcp.tool()
def encode_number(country: str, digits: str) -> str:
    """
    Encode a two-letter country code and up to 15 digits as a NumKey.
    """
    logger.debug(f"encode_number called with country={country}, digits={digits}")
    try:
        key = numkey.num_key(country, digits)
        return json.dumps({"key": codec.to_hex(key), "decimal": str(key)})
    except RnckError as e:
        logger.error(f"encode_number failed: {e}")
        return _error(e)


@mcp.tool()
def decode_number(key: str) -> str:
    """
    Decode a NumKey into its country code and digit string.
    """
    logger.debug(f"decode_number called with key={key}")
    try:
        number = numkey.decode_num_key(codec.parse_key(key))
        return json.dumps({"country": number.country, "digits": number.digits})
    except RnckError as e:
        logger.error(f"decode_number failed: {e}")
        return _error(e)


def run_simple_server():
    """
    Run the FastMCP version of the rnck server.

    Raises:
        SystemExit: If the configured REF+ALT lookup cannot be loaded.
    """
    try:
        _refalt_lookup()
    except (RnckError, OSError) as e:
        logger.error(f"Cannot load RNCK_REFALT_LOOKUP: {e}")
        sys.exit(1)

    try:
        logger.debug("Starting MCP server (FastMCP version)...")
        mcp.run(transport="stdio")
    except Exception:
        logger.error("Unhandled exception in MCP server.", exc_info=True)
        sys.exit(1)
