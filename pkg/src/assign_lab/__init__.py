"""Exact and numerical tools for the expected cost of optimal k-assignments
in random matrices with prescribed zeros."""

__version__ = "0.1.0"
