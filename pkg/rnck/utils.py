"""
Utility functions for rnck, including logging setup, environment configuration and schema discovery.

This module centralizes shared functionality such as:
1. Logging configuration for consistent log output across the CLI and the MCP servers.
2. Environment-driven defaults (delimiter, strict mode, schema directory).
3. Normalization of schema names into tool names.
4. Discovery and whitelist/blacklist filtering of the schemas exposed as tools.
"""

import os
import re
import sys
import logging
from pathlib import Path
from dotenv import load_dotenv

from rnck.errors import RnckError

# Load environment variables from .env if present
load_dotenv()

LOGGER_NAME = "rnck"


def env_flag(name: str, default: bool = False) -> bool:
    """
    Read a boolean environment variable.

    Args:
        name (str): Variable name.
        default (bool): Value used when the variable is unset or empty.

    Returns:
        bool: True for "true", "1" or "yes" (case-insensitive).
    """
    raw = os.getenv(name, "")
    if not raw:
        return default
    return raw.strip().lower() in ("true", "1", "yes")


def default_delimiter() -> str:
    """Field delimiter for CLI text I/O, from RNCK_DELIMITER (default TAB)."""
    raw = os.getenv("RNCK_DELIMITER", "")
    if not raw:
        return "\t"
    # allow the escaped form in .env files
    return "\t" if raw == "\\t" else raw


def setup_logging(debug: bool = False, log_dir: str = None, log_file: str = "debug-rnck.log") -> logging.Logger:
    """
    Sets up logging for the application, including outputting CRITICAL and ERROR logs to stderr.

    stdout is reserved for data (CLI output, MCP JSON-RPC), so the stream handler writes to stderr.

    Args:
        debug (bool): If True, set log level to DEBUG; otherwise, INFO.
        log_dir (str): Directory where log files will be stored. Ignored if `RNCK_LOGFILE_PATH` is set.
        log_file (str): Name of the log file. Ignored if `RNCK_LOGFILE_PATH` is set.

    Returns:
        logging.Logger: Configured package logger.
    """
    log_path = os.getenv("RNCK_LOGFILE_PATH")
    if not log_path:
        if log_dir is None:
            log_dir = os.getenv("RNCK_LOG_DIR") or os.path.join(os.path.expanduser("~"), "rnck_logs")
        try:
            os.makedirs(log_dir, exist_ok=True)
            log_path = os.path.join(log_dir, log_file)
        except OSError as e:
            # Fallback to stream logging if directory creation fails
            log_path = None
            print(f"[ERROR] Failed to create log directory: {e}", file=sys.stderr)

    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(logging.DEBUG if debug else logging.INFO)
    logger.propagate = False

    # Remove all existing handlers to prevent accumulation
    for handler in logger.handlers[:]:
        logger.removeHandler(handler)
        handler.close()

    handlers = []

    if log_path:
        try:
            file_handler = logging.FileHandler(log_path, mode="a")
            file_handler.setLevel(logging.DEBUG if debug else logging.INFO)
            file_handler.setFormatter(logging.Formatter("[%(levelname)s] %(asctime)s - %(message)s"))
            handlers.append(file_handler)
        except OSError as e:
            print(f"[ERROR] Failed to create log file handler: {e}", file=sys.stderr)

    stderr_handler = logging.StreamHandler(sys.stderr)
    stderr_handler.setLevel(logging.ERROR)
    stderr_handler.setFormatter(logging.Formatter("[%(levelname)s] %(message)s"))
    handlers.append(stderr_handler)

    for handler in handlers:
        logger.addHandler(handler)

    if log_path:
        logger.debug("Logging initialized. Writing logs to %s", log_path)
    else:
        logger.debug("Logging initialized. Logs will only appear on stderr.")
    return logger


def normalize_tool_name(name: str) -> str:
    """
    Normalize tool names by converting to lowercase and replacing non-alphanumeric characters with underscores.

    Args:
        name (str): Original name, typically a schema name.

    Returns:
        str: Normalized tool name. Returns 'unknown_schema' if the input is invalid.
    """
    logger = logging.getLogger(__name__)
    if not name or not isinstance(name, str):
        logger.warning("Invalid tool name input: %s. Using default 'unknown_schema'.", name)
        return "unknown_schema"
    normalized = re.sub(r"[^a-zA-Z0-9]", "_", name).lower()
    logger.debug("Normalized tool name from '%s' to '%s'", name, normalized)
    return normalized or "unknown_schema"


def filter_schemas(schemas: list) -> list:
    """
    Filters schemas by name using the whitelist and blacklist regex variables.
    Whitelist takes precedence over blacklist.

    Args:
        schemas (list[KeySchema]): Candidate schemas.

    Returns:
        list[KeySchema]: Schemas to expose.
    """
    logger = logging.getLogger(__name__)

    whitelist_name_regex = os.getenv("RNCK_WHITELIST_NAME_REGEX", "")
    blacklist_name_regex = os.getenv("RNCK_BLACKLIST_NAME_REGEX", "")

    selected = []
    for schema in schemas:
        if whitelist_name_regex:
            if re.search(whitelist_name_regex, schema.name):
                logger.debug("Including whitelisted schema '%s'.", schema.name)
                selected.append(schema)
            else:
                logger.debug("Excluding non-whitelisted schema '%s'.", schema.name)
            continue
        if blacklist_name_regex and re.search(blacklist_name_regex, schema.name):
            logger.debug("Skipping schema '%s' - name matches blacklist regex.", schema.name)
            continue
        selected.append(schema)

    logger.debug("Filtered schemas: %d out of %d", len(selected), len(schemas))
    return selected


def discover_schemas(schema_dir: str | None = None) -> list:
    """
    Load the bundled schemas plus every `*.schema` file in RNCK_SCHEMA_DIR.

    Files that fail to parse are logged and skipped. A schema in the directory
    replaces a bundled schema of the same name.

    Returns:
        list[KeySchema]: Filtered schemas in name order.
    """
    from rnck.schema import bundled_schemas, load_schema

    logger = logging.getLogger(__name__)
    found = {schema.name: schema for schema in bundled_schemas()}

    schema_dir = schema_dir or os.getenv("RNCK_SCHEMA_DIR", "")
    if schema_dir:
        for path in sorted(Path(schema_dir).glob("*.schema")):
            try:
                schema = load_schema(path)
            except (OSError, RnckError) as e:
                logger.error("Skipping schema file %s: %s", path, e)
                continue
            found[schema.name] = schema
            logger.debug("Loaded schema '%s' from %s", schema.name, path)

    return filter_schemas([found[name] for name in sorted(found)])
