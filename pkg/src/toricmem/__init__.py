"""Toric-code quantum memories on general periodic lattices.

Simulation toolkit for error-tolerance thresholds, finite-temperature
lifetimes, and geometry optimization of two-dimensional toric codes.
"""

__version__ = "0.1.0"
