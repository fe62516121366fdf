"""Adaptive control with normalized and momentum estimation laws on top of CLFs."""

__version__ = "0.1.0"
