"""Exact and Monte-Carlo engine for discrete Malliavin-Dirichlet calculus
on finite product probability spaces."""

__version__ = "0.1.0"
