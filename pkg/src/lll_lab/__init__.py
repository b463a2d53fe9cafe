"""Numerics for the Lowest Landau Level equation on periodic cells and strips."""

__version__ = "0.1.0"
