"""Triadic influence and link prediction on signed directed social networks."""

__version__ = "0.1.0"
