"""Global-local nonlinear model reduction for heterogeneous diffusion.

Pipeline: fine-scale P1 reference solver, spectrally enriched coarse space,
local interpolation of the nonlinearity on the coarse model, POD of coarse
trajectories, and a globally hyper-reduced online solver with fine-grid
downscaling.  The harness module wires these into reproducible studies.
"""

from .artifacts import load_offline, save_offline
from .coarse import LocalDeimSet, build_coarse_system, solve_coarse, train_local_deim
from .fem import assemble_load, assemble_mass, assemble_stiffness, solve_elliptic_w0
from .fom import (
    FineSystem,
    TimeSteppingConfig,
    Trajectory,
    build_fine_system,
    initial_state,
    solve_fom,
)
from .gmsfem import MultiscaleSpace, build_multiscale_space, partition_of_unity
from .grid import CoarseGrid, FineMesh, build_coarse_grid, build_fine_mesh
from .harness import (
    ExperimentSpec,
    ResultRow,
    energy_error,
    example_spec,
    run_example,
    run_offline,
    run_online,
    timing_ratio,
)
from .model import Nonlinearity, ParameterSet, channel_permeability, source_term
from .newton import NewtonConvergenceError, NewtonDivergenceError, newton_solve
from .reduction import DeimModel, PodBasis, deim_apply, deim_select, pod
from .rom import RomSystem, build_rom, downscale, solve_rom

__version__ = "0.1.0"

__all__ = [
    "load_offline",
    "save_offline",
    "LocalDeimSet",
    "build_coarse_system",
    "solve_coarse",
    "train_local_deim",
    "assemble_load",
    "assemble_mass",
    "assemble_stiffness",
    "solve_elliptic_w0",
    "FineSystem",
    "TimeSteppingConfig",
    "Trajectory",
    "build_fine_system",
    "initial_state",
    "solve_fom",
    "MultiscaleSpace",
    "build_multiscale_space",
    "partition_of_unity",
    "CoarseGrid",
    "FineMesh",
    "build_coarse_grid",
    "build_fine_mesh",
    "ExperimentSpec",
    "ResultRow",
    "energy_error",
    "example_spec",
    "run_example",
    "run_offline",
    "run_online",
    "timing_ratio",
    "Nonlinearity",
    "ParameterSet",
    "channel_permeability",
    "source_term",
    "NewtonConvergenceError",
    "NewtonDivergenceError",
    "newton_solve",
    "DeimModel",
    "PodBasis",
    "deim_apply",
    "deim_select",
    "pod",
    "RomSystem",
    "build_rom",
    "downscale",
    "solve_rom",
    "__version__",
]
