"""Plane-strain phase-field fracture finite elements."""
from .assembly import (assemble_Kzz_sparse, dissipation_increment, internal_force,
                       reaction_force, residual_z, stiffness_uu, total_energy)
from .material import MaterialParams, SpectralSplit, energy_density, spectral_split, stress, tangent_uu
from .mesh import Mesh, ct_like_mesh, l_shape_mesh, load_mesh, rectangle, save_mesh
from .problem import (Constant, Dirichlet, Linear, Neumann, NewtonControls, PhaseFieldProblem,
                      fem_time_step)
from .solvers import newton_solve_u, newton_solve_z, sherman_morrison_solve, solve_sparse_spd
from .vtk import write_vtk

__all__ = [
    "Mesh", "MaterialParams", "SpectralSplit", "PhaseFieldProblem", "Dirichlet", "Neumann",
    "Linear", "Constant", "NewtonControls", "assemble_Kzz_sparse", "ct_like_mesh", "dissipation_increment",
    "energy_density", "fem_time_step", "internal_force", "l_shape_mesh", "load_mesh",
    "newton_solve_u", "newton_solve_z", "reaction_force", "rectangle", "residual_z",
    "save_mesh", "sherman_morrison_solve", "solve_sparse_spd", "spectral_split", "stiffness_uu",
    "stress", "tangent_uu", "total_energy", "write_vtk",
]
