"""CRPC Helix - helical surfaces with a constant ratio of principal curvatures."""

__version__ = "0.1.0"
