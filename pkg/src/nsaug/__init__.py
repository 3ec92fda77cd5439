"""Physics-informed snapshot augmentation for POD reduced models of steady
incompressible flow.

The package covers the whole chain: Taylor-Hood finite elements on
triangles, Newton/Oseen/Stokes full-order solvers, POD bases, reduced
Newton solves with pressure recovery, and the three augmentation
strategies (stream-function averages, with or without Oseen enhancement,
and linear combinations with Oseen enhancement).
"""

from .augment import (
    AugmentConfig,
    PairList,
    augment_dataset,
    divergence_ratio,
    geometric_average,
    linear_combination,
    oseen_enhance,
    pair_snapshots,
    stream_function,
    velocity_from_stream,
)
from .fem import FeSpace, TaylorHood, apply_dirichlet, assemble_form, assemble_neumann, boundary_force, l2_project
from .fom import FlowProblem, FomSolution, SolveCounter, newton_solve, solve_oseen, solve_poisson_neumann, solve_stokes
from .linalg import dense_solve, sparse_solve, thin_svd
from .mesh import Mesh, cavity_mesh, cylinder_mesh, read_mesh, rectangle_mesh, unit_square_mesh, write_mesh
from .pipeline import Report, RunConfig, evaluate_errors, export_run, run_pipeline
from .pod import ReducedBasis, SnapshotSet, build_basis, center, scale, truncate, unscale
from .problems import make_problem
from .rom import RomSolution, qoi, recover_pressure, rom_solve, select_local_snapshots

__version__ = "0.1.0"
