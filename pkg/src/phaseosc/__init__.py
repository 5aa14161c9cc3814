"""Coupled identical phase oscillators: symmetry, stability and bifurcations."""

__version__ = "0.1.0"
