"""Synthetic MF R-Mode signals, CW tone phase extraction and skywave ground-truth labels."""

__version__ = "0.1.0"
