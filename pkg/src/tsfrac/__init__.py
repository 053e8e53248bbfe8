"""Fractional calculus on time scales: operators, Sobolev norms and variational solvers."""
__version__ = "0.1.0"
