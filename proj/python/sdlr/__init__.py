"""Sigma-Delta quantization of low-rank matrix measurements and recovery by
constrained nuclear-norm minimization."""

from ._sdlr import *  # noqa: F401,F403
from ._sdlr import __version__  # noqa: F401
