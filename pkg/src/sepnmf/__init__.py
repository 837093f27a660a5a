"""Separable nonnegative matrix factorization by factorization localization."""

__version__ = "0.1.0"
