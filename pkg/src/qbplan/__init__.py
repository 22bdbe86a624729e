"""Quasi-Bayesian plans for the Gaussian planning-to-observe problem."""

__version__ = "0.1.0"
