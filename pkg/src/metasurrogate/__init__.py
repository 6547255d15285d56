"""Interpretable decision-tree surrogates that map instance features to meta-solutions."""

__version__ = "0.1.0"
