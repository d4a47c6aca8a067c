"""Excursion-set functionals of subordinated Gaussian random fields."""
__version__ = "0.1.0"
