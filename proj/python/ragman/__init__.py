"""Python access to the ragman core: retrieval, guardrail, sampling and grade statistics."""

from ragman._ragman import *  # noqa: F401,F403
from ragman._ragman import __doc__  # noqa: F401

__version__ = "0.1.0"
