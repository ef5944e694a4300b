"""Deterministic 2D warehouse mobile-manipulator simulator and autonomy library."""

__version__ = "0.1.0"
