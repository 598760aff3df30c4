"""
Logging configuration for the command-line entry point.
"""

import logging
import sys
from typing import Optional

from .config import LoggingSection


def configure_logging(section: Optional[LoggingSection] = None, level: Optional[str] = None) -> None:
    """
    Configure root logging once per process.

    Args:
        section: Logging section of the experiment config
        level: Optional override of the section's level (--log-level)
    """
    section = section or LoggingSection()
    logging.basicConfig(
        level=getattr(logging, (level or section.level).upper()),
        format=section.format,
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True
    )
