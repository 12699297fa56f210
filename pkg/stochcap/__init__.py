"""Stochastic highway capacity estimation from detector data."""

__version__ = "1.0.0"
