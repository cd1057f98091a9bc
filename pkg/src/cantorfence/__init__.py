"""Cantor sets from nested solid tori in R^3, and cube re-embeddings in R^n."""

__version__ = "0.1.0"
