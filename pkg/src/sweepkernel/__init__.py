"""Boundary evaluation of volumes swept by solids with sharp convex features."""

__version__ = "0.1.0"
