"""Decomposable submodular function minimization with incidence relations."""

from .core import Decomposition, BlockVector, apply_A, compute_incidence
from .oracles import (EdgeCut, HyperedgeCut, ConcaveCardinality, TableFunction,
                      DisjointEdges, exhaustive_dsfm)
from .solvers import SolverConfig, run

__all__ = ["Decomposition", "BlockVector", "apply_A", "compute_incidence", "EdgeCut",
           "HyperedgeCut", "ConcaveCardinality", "TableFunction", "DisjointEdges",
           "exhaustive_dsfm", "SolverConfig", "run"]
__version__ = "0.1.0"
