"""Entry point for the qmoment command line."""

import logging
import sys
from typing import Optional, Sequence

from qmoment.cli import run
from qmoment.config import get_settings

settings = get_settings()

# Configure logging
logging.basicConfig(
    level=logging.DEBUG if settings.debug else settings.log_level,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    handlers=[
        logging.StreamHandler(),
    ],
)
logger = logging.getLogger(__name__)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return its exit code."""
    logger.debug("Starting qmoment with threads=%d", settings.threads)
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
