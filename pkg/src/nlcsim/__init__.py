"""Stochastic nematic liquid crystal flow on the unit square."""
__version__ = "0.1.0"
