"""Temporal collaboration networks of programming-language ecosystems."""

__version__ = "0.1.0"
