"""Volatility forecasting toolkit: range estimators, GARCH(1,1), headline
alignment, and a multimodal news+price model."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
