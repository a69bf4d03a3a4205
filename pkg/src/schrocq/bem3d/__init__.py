"""Boundary element operators for the 3D kernel exp(-s r) / (4 pi r)."""
from .mesh import MeshError, SurfaceMesh, cube_surface, icosphere, read_mesh, write_mesh
from .operators import (BlockOperatorSet, BoundaryOperatorSet, CalderonResidual, NearFieldWarning,
                        SingularityError, TraceSpaces, assemble_many, assemble_matrix_frequency,
                        assemble_operators, calderon_residual, evaluate_potentials,
                        fundamental_solution_3d)

__all__ = [
    "MeshError", "SurfaceMesh", "cube_surface", "icosphere", "read_mesh", "write_mesh",
    "BlockOperatorSet", "BoundaryOperatorSet", "CalderonResidual", "NearFieldWarning",
    "SingularityError", "TraceSpaces", "assemble_many", "assemble_matrix_frequency",
    "assemble_operators", "calderon_residual", "evaluate_potentials", "fundamental_solution_3d",
]
