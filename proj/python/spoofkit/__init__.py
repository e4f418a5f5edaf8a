"""Losses, metrics, calibration and signal utilities backed by the C++ core."""

from ._spoofkit import *  # noqa: F401,F403
from ._spoofkit import NumericError, ValidationError, __version__  # noqa: F401
