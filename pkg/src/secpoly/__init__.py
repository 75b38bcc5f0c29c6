"""Exact-arithmetic toolkit for secondary polytopes and the homotopy Lie
structures carried by point configurations.

Everything is computed over the rationals: orientation predicates, lifted
lower hulls, regular-subdivision certificates (exact LP), GKZ vectors, face
lattices, signed structure constants, Maurer-Cartan binomial systems, and the
directed Hochschild complexes used for the universality comparison.  No
floating point anywhere.
"""

__version__ = "0.1.0"
