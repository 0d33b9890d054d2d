"""Spectral toolkit for the Robin Laplacian on a planar strip with sign-flipped coupling."""

from .profiles import (CouplingProfile, compact_bump, constant, excess_integral, gaussian_bump,
                       piecewise_constant, sup_norm, tabulated, truncate)
from .transversal import TransversalMode, TransversalParams, transversal_eigenvalues
from .strip import Ends, StripGrid, SymmetricOperatorPencil, assemble, separable_reference
from .eigensolver import EigenResult, dense_oracle, inertia_below, smallest_eigenpairs
from .analysis import (SpectralReport, criterion_check, find_bound_states, threshold,
                       variational_Q, weyl_residual)

__version__ = "0.1.0"
