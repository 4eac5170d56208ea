"""Continuous-variable topological error correction on an eight-mode Gaussian cluster state."""

__version__ = "0.1.0"
