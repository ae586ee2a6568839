"""Multidimensional child growth index: aggregation, Bayesian weight
learning, certainty-adjusted responses, and an evolved fitness surrogate."""

__version__ = "0.1.0"
