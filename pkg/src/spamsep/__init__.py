"""Separate estimation of state-preparation and measurement errors."""

__version__ = "0.1.0"
