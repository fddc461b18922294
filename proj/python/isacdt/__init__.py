"""ISAC digital-twin AGV simulator (C++ core)."""

from ._core import *  # noqa: F401,F403
