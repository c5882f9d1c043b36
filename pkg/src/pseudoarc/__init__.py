"""Exact piecewise-linear crooked maps, their inverse limits and planar attractors."""

__version__ = "0.1.0"
