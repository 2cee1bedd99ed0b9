"""Surface germs in 3D space forms from flat cone surfaces and quadratic differentials."""
from .background import HQDField, lshape_background, torus_background, weierstrass_pole_pair
from .errors import (ConvergenceError, DegenerateTransportError, EigenSolverError,
                     GermforgeError, HQDError, InfeasibleError, MeshError, PoleAngleError,
                     SettingError)
from .gauss_solver import (GaussProblem, GeometrySetting, Setting, Solution, assemble,
                           continuation, solve, stability_spectrum)
from .germ import SurfaceGerm, assemble_germ, diagnostics
from .mesh import ConeMesh, build_mesh, cotan_laplacian
from .spaceforms import (ads_hamiltonian, boundary_data, convex_core_bound, foliate)
from .teichmaps import (discrete_curvature, dual_surface, labourie_morphism, sharp_metrics,
                        star_metrics)

__version__ = "0.1.0"
