"""Spectra and spectral statistics of quantum graphs with symplectic symmetry."""

from .graph_model import (Bond, Connection, Graph, SymplecticPairSpec, build_symplectic_pair,
                          normalize_to_unit_density, random_pair_spec, random_subgraph, star_graph)
from .secular import SolverOptions, Spectrum, find_spectrum

__all__ = [
    "Bond", "Connection", "Graph", "SymplecticPairSpec", "SolverOptions", "Spectrum",
    "build_symplectic_pair", "find_spectrum", "normalize_to_unit_density", "random_pair_spec",
    "random_subgraph", "star_graph",
]
