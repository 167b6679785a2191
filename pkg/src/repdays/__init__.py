"""Representative days and expansion planning."""

__version__ = "0.1.0"
