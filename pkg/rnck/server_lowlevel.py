'''
Low-Level Server for rnck.

This server dynamically registers an `encode_<schema>` and a `decode_<schema>`
tool for every schema discovered (bundled plus RNCK_SCHEMA_DIR, filtered by
the whitelist/blacklist regex variables). Tool names are normalized for
safety and consistency; conflicts after normalization are logged and the
later schema is skipped.
'''

import sys
import asyncio
import json
from typing import Dict, List, Tuple
from mcp import types
from mcp.server.lowlevel import Server
from mcp.server.models import InitializationOptions
from mcp.server.stdio import stdio_server

from rnck import __version__, schema as codec
from rnck.errors import RnckError
from rnck.utils import discover_schemas, env_flag, normalize_tool_name, setup_logging

# Configure logging
logger = setup_logging(debug=env_flag("DEBUG"))

# Global tool mapping: tool name to (schema, action)
NAME_TO_SCHEMA: Dict[str, Tuple[codec.KeySchema, str]] = {}
tools: List[types.Tool] = []

# Initialize the Low-Level MCP Server
mcp = Server("RNCK-Schemas")


def _text_result(text: str) -> types.ServerResult:
    return types.ServerResult(root=types.CallToolResult(content=[types.TextContent(type="text", text=text)]))


def call_schema_tool(schema: codec.KeySchema, action: str, arguments: dict) -> str:
    """
    Run one encode/decode call and return its JSON text.

    Encode takes one string argument per data field; decode takes `key`.
    """
    try:
        if action == "encode":
            missing = [spec.name for spec in schema.data_fields if spec.name not in arguments]
            if missing:
                return json.dumps({"error": f"missing arguments: {', '.join(missing)}"})
            key = codec.encode_row(schema, [str(arguments[spec.name]) for spec in schema.data_fields])
            return json.dumps({"key": codec.to_hex(key), "decimal": str(key)})

        key_text = arguments.get("key", "")
        if not key_text:
            return json.dumps({"error": "Missing 'key' argument."})
        ordinals = codec.decode(schema, codec.parse_key(str(key_text)))
        values = codec.render(schema, ordinals)
        return json.dumps({spec.name: value for spec, value in zip(schema.data_fields, values)})
    except RnckError as e:
        logger.error("%s_%s failed: %s", action, schema.name, e)
        return json.dumps({"error": str(e)})


async def dispatcher_handler(request: types.CallToolRequest) -> types.ServerResult:
    """
    Dispatcher handler that routes CallToolRequest to the schema tool named in the request.
    """
    try:
        tool_name = request.params.name
        logger.debug("Dispatcher received CallToolRequest for tool: %s", tool_name)

        if tool_name not in NAME_TO_SCHEMA:
            logger.error("Unknown tool requested: %s", tool_name)
            return _text_result("Unknown tool requested")

        schema, action = NAME_TO_SCHEMA[tool_name]
        result = call_schema_tool(schema, action, request.params.arguments or {})
        logger.debug("Tool %s result: %s", tool_name, result)
        return _text_result(result)
    except Exception as e:
        logger.error("Unhandled exception in dispatcher_handler: %s", e, exc_info=True)
        return _text_result(json.dumps({"error": "Internal server error."}))


async def list_tools(request: types.ListToolsRequest) -> types.ServerResult:
    """
    Handler for ListToolsRequest to list all registered tools.
    """
    logger.debug("Handling list_tools request.")
    return types.ServerResult(root=types.ListToolsResult(tools=tools))


def register_tools(schemas: List[codec.KeySchema]) -> List[types.Tool]:
    """
    Register an encode and a decode tool for each valid schema.

    Args:
        schemas (List[KeySchema]): Discovered schemas.

    Returns:
        List[types.Tool]: List of registered tools.
    """
    global tools
    tools = []
    NAME_TO_SCHEMA.clear()
    for schema in schemas:
        report = codec.validate_schema(schema)
        if not report.ok:
            logger.warning("Skipping invalid schema '%s': %s", schema.name, report)
            continue

        base = normalize_tool_name(schema.name)
        encode_name, decode_name = f"encode_{base}", f"decode_{base}"
        if encode_name in NAME_TO_SCHEMA:
            logger.warning("Tool name conflict: '%s' already exists. Skipping schema '%s'.", encode_name, schema.name)
            continue

        NAME_TO_SCHEMA[encode_name] = (schema, "encode")
        NAME_TO_SCHEMA[decode_name] = (schema, "decode")
        field_names = [spec.name for spec in schema.data_fields]
        tools.append(
            types.Tool(
                name=encode_name,
                description=f"Encode {', '.join(field_names)} into a 64-bit '{schema.name}' key.",
                inputSchema={
                    "type": "object",
                    "required": field_names,
                    "properties": {name: {"type": "string"} for name in field_names},
                },
            )
        )
        tools.append(
            types.Tool(
                name=decode_name,
                description=f"Decode a 16-char hex '{schema.name}' key into {', '.join(field_names)}.",
                inputSchema={
                    "type": "object",
                    "required": ["key"],
                    "properties": {"key": {"type": "string"}},
                },
            )
        )
        logger.debug("Registered tools %s and %s", encode_name, decode_name)

    return tools


async def start_server():
    """
    Start the Low-Level MCP server.
    """
    logger.debug("Starting Low-Level MCP server...")
    try:
        async with stdio_server() as (read_stream, write_stream):
            await mcp.run(
                read_stream,
                write_stream,
                initialization_options=InitializationOptions(
                    server_name="RNCK-Schemas",
                    server_version=__version__,
                    capabilities=types.ServerCapabilities(),
                ),
            )
    except Exception as e:
        logger.critical("Unhandled exception in MCP server: %s", e)
        sys.exit(1)


def run_server():
    """
    Run the Low-Level rnck server by registering schema tools dynamically.
    """
    register_tools(discover_schemas())
    if not tools:
        logger.critical("No valid schema tools registered. Shutting down the server.")
        sys.exit(1)

    mcp.request_handlers[types.CallToolRequest] = dispatcher_handler
    logger.debug("Registered dispatcher_handler for CallToolRequest.")

    mcp.request_handlers[types.ListToolsRequest] = list_tools
    logger.debug("Registered list_tools handler.")

    try:
        asyncio.run(start_server())
    except KeyboardInterrupt:
        logger.debug("MCP server shutdown initiated by user.")
    except Exception as e:
        logger.critical("Failed to start MCP server: %s", e)
        sys.exit(1)


if __name__ == "__main__":
    run_server()
