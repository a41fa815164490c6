"""Space-time interface-fitted P1 finite elements for moving-interface
advection-diffusion problems."""
from .analysis import (ConvergenceReport, coercivity_probe, convergence_study,
                       energy_seminorm, eoc, y_norm_error)
from .fem import SparseSystem, assemble, element_matrices, interpolate_exact
from .mesh import (MeshError, SpaceTimeMesh, classify_elements, export_mesh,
                   generate_fitted_mesh_1d, import_mesh, kuhn_cube_mesh, mesh_size,
                   validate)
from .problems import (ProblemSpec, example1, example2, example3_coefficients,
                       get_problem, smooth_verification_3d)
from .quadrature import QuadratureRule, quadrature
from .solver import SolveReport, SolverError, solve

__version__ = "0.1.0"
