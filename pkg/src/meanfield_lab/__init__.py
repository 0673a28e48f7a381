"""Numerical laboratory for the mean-field (Hartree) limit of bosons in Sobolev trace norms."""

__version__ = "0.1.0"
