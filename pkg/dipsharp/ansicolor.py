# -*- coding: utf-8; -*-
"""ANSI color for terminal output of the CLI log and the test runner."""

from enum import Enum

__all__ = ["TC", "colorize", "stream_supports_color"]

class TC(Enum):
    """Terminal colors, via ANSI escape sequences (16-color palette).

    The actual hue depends on the user's terminal color scheme.
    """
    RESET = '\33[0m'

    # styles
    BRIGHT = '\33[1m'
    DIM = '\33[2m'
    ITALIC = '\33[3m'

    # foreground colors
    RED = '\33[31m'
    GREEN = '\33[32m'
    YELLOW = '\33[33m'
    BLUE = '\33[34m'
    CYAN = '\33[36m'
    LIGHTRED = '\33[91m'
    LIGHTGREEN = '\33[92m'
    LIGHTBLUE = '\33[94m'

def colorize(s, *colors):
    """Colorize string `s` for ANSI terminal display. Reset color at end of `s`.

    Each entry of `colors` is a `TC`, or an arbitrarily nested tuple of them
    (a compound style)::

        colorize("sharpened", TC.GREEN)
        colorize("censored", (TC.BRIGHT, TC.YELLOW))
    """
    def get_ansi_color_sequence(c):
        if isinstance(c, tuple):
            return "".join(get_ansi_color_sequence(elt) for elt in c)
        if not isinstance(c, TC):
            raise TypeError("Expected a TC instance, got {} with value '{}'".format(type(c), c))
        return c.value
    return "{}{}{}".format(get_ansi_color_sequence(colors),
                           s,
                           get_ansi_color_sequence(TC.RESET))

def stream_supports_color(stream):
    """Whether `stream` is an interactive terminal."""
    isatty = getattr(stream, "isatty", None)
    return bool(isatty and isatty())
