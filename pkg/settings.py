"""
Process-level settings read from the environment (and an optional .env file).
"""

import logging
import os

from dotenv import load_dotenv

load_dotenv()

OUTPUT_DIR = os.getenv("RR_OUTPUT_DIR", "runs")
LOG_LEVEL = os.getenv("RR_LOG_LEVEL", "INFO")
SWEEP_WORKERS = int(os.getenv("RR_SWEEP_WORKERS", "0")) or (os.cpu_count() or 1)
HOST = os.getenv("RR_HOST", "0.0.0.0")
PORT = int(os.getenv("RR_PORT", "8000"))


def configure_logging(quiet: bool = False) -> None:
    level = logging.WARNING if quiet else getattr(logging, LOG_LEVEL.upper(), logging.INFO)
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    logging.getLogger().setLevel(level)
