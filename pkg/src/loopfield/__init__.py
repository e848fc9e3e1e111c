"""Monte Carlo toolkit for random walk loop soups on planar lattice domains.

Samples loop soups and their continuous-time occupation fields, groups
loops into spin-carrying clusters, builds thick-point chaos measures and
the signed discrete field, verifies Wick/Laguerre/Bessel identities, and
simulates the dual one-dimensional squared Bessel theory.
"""

__version__ = "0.1.0"
