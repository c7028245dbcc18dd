"""Harmonic network heat transport: exact stationary states and heat currents."""

__version__ = "1.0.0"
