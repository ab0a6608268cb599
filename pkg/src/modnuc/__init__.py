"""Desk-scale numerics for modular nuclearity in two-dimensional integrable models."""

__version__ = "0.1.0"
