"""Restriction-synthesis simulation and subsequence classifiers."""

__version__ = "0.1.0"

from .errors import RestrictMLError  # noqa: E402

__all__ = ["RestrictMLError", "__version__"]
