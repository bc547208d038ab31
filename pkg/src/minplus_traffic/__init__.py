"""Minplus and hybrid standard/minplus algebra for traffic flow models."""

__version__ = "0.1.0"
