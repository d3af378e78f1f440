"""Bound states of the two-dimensional Pauli operator with g > 2."""

__version__ = "0.1.0"
