"""Linear spectral statistics CLT machinery and corrected likelihood ratio tests."""

from ._core import *  # noqa: F401,F403
from ._core import SpectralCltError, SpectralModel

__all__ = [name for name in dir() if not name.startswith("_")]
