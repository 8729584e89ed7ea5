"""
Entry point for the rnck package.

Loads `.env`, configures logging from the DEBUG environment variable and
hands over to the command-line front end. `rnck serve` starts an MCP server:
- FastMCP Server (default): static codec tools.
- Low-Level Server (RNCK_SIMPLE_MODE=false): one tool pair per schema.
"""

import os
import sys
from dotenv import load_dotenv
from rnck.utils import setup_logging

# Load environment variables from .env if present
load_dotenv()


def main():
    """
    Main entry point for the rnck console script.
    """
    DEBUG = os.getenv("DEBUG", "").lower() in ("true", "1", "yes")
    logger = setup_logging(debug=DEBUG)

    logger.debug("Starting rnck entry point with argv %s", sys.argv[1:])

    from rnck.cli import main as cli_main

    try:
        status = cli_main(sys.argv[1:])
    except KeyboardInterrupt:
        logger.debug("Interrupted by user.")
        status = 130
    except Exception:
        logger.critical("Unhandled exception occurred while running rnck.", exc_info=True)
        status = 1
    sys.exit(status)


if __name__ == "__main__":
    main()
