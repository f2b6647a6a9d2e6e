# Command-line entry point
import sys

from src.cli import cli
from src.config import Config as settings
from src.logger import setup_logger

logger = setup_logger(__name__)


def main() -> None:
    logger.debug(f"starting with log level {settings.LOG_LEVEL}")
    cli(prog_name="blentropy")


if __name__ == "__main__":
    sys.exit(main())
