"""Bismut-type gradient formulas and Harnack inequalities for SDEs driven by
fractional Brownian motion: operators, samplers, solvers, Malliavin weights
and Monte Carlo checks against independent oracles."""

__version__ = "0.1.0"
