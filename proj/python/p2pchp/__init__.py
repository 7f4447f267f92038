"""Distributed P2P electricity trading for fuel-cell CHP dwellings.

Thin wrapper over the compiled extension; everything lives in ._core.
"""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401

__version__ = "1.0.0"
