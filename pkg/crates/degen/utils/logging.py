"""Logging configuration for the lab"""
import logging
import sys
from pathlib import Path
from typing import Optional, Union


# Setup logging configuration
def setup_logging(level: str = "WARNING", log_file: Optional[Union[str, Path]] = None):
    """Setup logging on standard error; standard output carries results only"""
    log_level = getattr(logging, str(level).upper(), logging.WARNING)

    handlers = [logging.StreamHandler(sys.stderr)]

    if log_file:
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=log_level,
        format='%(asctime)s [%(levelname)s] %(name)s: %(message)s',
        handlers=handlers,
        force=True,
    )

    # numpy RuntimeWarnings (overflow in Psi^-1, log of 0) go through the handlers
    logging.captureWarnings(True)
    logging.getLogger('py.warnings').setLevel(max(log_level, logging.WARNING))
