"""Kirchhoff plate waveguides in the strip R x (0, 1)."""
