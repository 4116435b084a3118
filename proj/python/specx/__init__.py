"""Python bindings for the specx eigenvalue toolkit."""

from ._specx import *  # noqa: F401,F403
from ._specx import __version__

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
