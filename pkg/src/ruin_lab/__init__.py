"""Ruin probabilities for risk models with neutral and strict net profit conditions."""

__version__ = "0.1.0"
