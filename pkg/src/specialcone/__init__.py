"""Numerical verification of conical special complex constructions."""

__version__ = "0.1.0"
