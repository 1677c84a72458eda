"""Crossing-path probabilities for two random walkers on a disk or a sphere."""

__version__ = "0.1.0"
