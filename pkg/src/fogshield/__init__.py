"""Fog-based WSN DoS simulator and from-scratch detection pipeline."""

__version__ = "0.1.0"
