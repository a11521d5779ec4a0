# -*- coding: utf-8 -*-
"""Logging setup for the command-line front end.

Library modules only do ``logger = logging.getLogger(__name__)`` and log;
they never install handlers. The CLI calls `setup` once.
"""

__all__ = ["setup", "ColorFormatter", "LEVEL_COLORS"]

import logging
import sys

from .ansicolor import TC, colorize, stream_supports_color

LEVEL_COLORS = {logging.DEBUG: TC.DIM,
                logging.INFO: TC.LIGHTBLUE,
                logging.WARNING: TC.YELLOW,
                logging.ERROR: TC.LIGHTRED,
                logging.CRITICAL: (TC.BRIGHT, TC.LIGHTRED)}

class ColorFormatter(logging.Formatter):
    """Formatter that colorizes the level name."""
    def __init__(self, fmt=None, datefmt=None, use_color=True):
        super().__init__(fmt=fmt, datefmt=datefmt)
        self.use_color = use_color

    def format(self, record):
        if not self.use_color:
            return super().format(record)
        original = record.levelname
        color = LEVEL_COLORS.get(record.levelno)
        if color is not None:
            record.levelname = colorize(original, TC.BRIGHT, color)
        try:
            return super().format(record)
        finally:
            record.levelname = original

def setup(verbosity=0, use_color=None, stream=None):
    """Route the ``dipsharp`` logger hierarchy to `stream` (default stderr).

    `verbosity`: 0 shows warnings, 1 adds info, 2 or more adds debug.
    `use_color`: `None` means colorize when `stream` is a terminal.

    Calling again replaces the handler installed by the previous call.
    """
    stream = stream if stream is not None else sys.stderr
    if use_color is None:
        use_color = stream_supports_color(stream)
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)

    logger = logging.getLogger("dipsharp")
    for h in list(logger.handlers):
        if getattr(h, "_dipsharp", False):
            logger.removeHandler(h)
    handler = logging.StreamHandler(stream)
    handler._dipsharp = True
    handler.setFormatter(ColorFormatter("%(asctime)s %(levelname)s %(name)s: %(message)s",
                                        datefmt="%H:%M:%S",
                                        use_color=use_color))
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False
    return logger
