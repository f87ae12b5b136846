"""Deformation calculus for finite-dimensional N-strict L-infinity algebras.

Exact rational graded linear algebra, Jacobi verification, twisting,
Maurer-Cartan evaluation, homotopy operators, recursive obstruction
series with super-Catalan convergence certificates, and the Lie-algebra
instantiation with rigidity tests and parallel transport.
"""

from .graded import Bracket, Element, GradedSpace, canonicalize, eval_bracket, koszul_sign
from .linalg import RationalMatrix
from .combinatorics import (compositions, convergence_radius, count_bracketings,
                            growth_ratio, multinomial, orbit_size, super_catalan)
from .algebra import (HomotopyPair, LInftyAlgebra, cohomology_dim,
                      differential_blocks, enumerate_unshuffles, homotopy_operators,
                      jacobiator, mc_eval, twist, verify_linfty)
from .errors import (CohomologyObstruction, DeformationError, NotCocycle,
                     NotKDeformation, NotMaurerCartan,
                     OutsidePerturbationNeighbourhood, SeriesDivergence)

__version__ = "0.1.0"
