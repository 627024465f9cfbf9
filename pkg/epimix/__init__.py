"""Latent sub-population models of weekly epidemic curves."""

__version__ = "0.1.0"
