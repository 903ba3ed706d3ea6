"""MExI: characterizing human schema matchers as experts from their
decision histories and mouse movements."""

__version__ = "0.1.0"

from .neural.backend import BACKEND_NAME

__all__ = ["BACKEND_NAME", "__version__"]
