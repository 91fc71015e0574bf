"""Positivity-preserving finite-volume/DG solver for ideal MHD."""

__version__ = "0.1.0"
