"""Exterior calculus for regular foliations and Poisson structures."""
