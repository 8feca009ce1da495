"""Restricted density of states of a disorder-broadened Landau level."""

__version__ = "0.1.0"
