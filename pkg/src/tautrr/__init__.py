"""Tautological relations on moduli of stable curves and the universal
equations they give for Gromov-Witten generating functions."""

__version__ = "0.1.0"
