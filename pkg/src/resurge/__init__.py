"""Resurgent resummation of truncated asymptotic series of normal-form ODEs."""

__version__ = "0.1.0"
