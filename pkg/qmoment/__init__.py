"""Moment and tomogram toolkit for one-mode bosonic states."""

__version__ = "0.1.0"
