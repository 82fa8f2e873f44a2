"""Speckle-field two-arm correlation simulator (C++ core bindings)."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
