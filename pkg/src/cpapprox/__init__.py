"""Compound Poisson approximation via information functionals."""
