"""Simulation and verification lab for super-linear preferential attachment (GN) trees."""

__version__ = '0.1.0'
