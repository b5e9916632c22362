"""Seedable simulator and optimizer for cooperative content placement
across cache-equipped base stations."""

__version__ = "0.1.0"
