"""Numerical and symbolic analysis of polynomial Liénard systems."""
