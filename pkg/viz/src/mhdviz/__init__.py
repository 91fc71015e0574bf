"""Post-hoc plotting for mhdpp snapshot files."""

__version__ = "0.1.0"
