"""Bayesian synthetic likelihood with mean- and variance-robust variants."""

__version__ = "0.1.0"
