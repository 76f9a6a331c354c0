"""Lattice statistical mechanics workbench.

Discrete differential forms on Z^d, charge ensembles with cluster-expansion
activities, lattice Green's functions, Villain/XY Monte Carlo on boxes and
rooted graphs, the dual vector-valued interface model with Langevin dynamics,
and parabolic heat kernels along those dynamics, together with numerical
checks of the identities, inequalities, and decay laws that tie them together.
"""

__version__ = "0.1.0"

from .lattice import LatticeBox, OrientedCell, cell_boundary, cofaces, enumerate_cells

__all__ = [
    "LatticeBox",
    "OrientedCell",
    "enumerate_cells",
    "cell_boundary",
    "cofaces",
    "__version__",
]
