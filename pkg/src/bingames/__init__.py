"""Monotone equilibria, simulation, identification and rationalization for binary games with correlated types."""

__version__ = "0.1.0"
