"""Structure-preserving pseudospectral solver for a regularised two-velocity
nematic flow model on the periodic unit torus.

The implicit time stepper keeps the discrete energy balance, solenoidality,
and zero-mean velocity at every step; the diagnostics ledger materialises
each term of that balance so runs certify themselves.
"""

from .config import ConfigError, RunConfig, load_config, parse_config
from .coupling import director_transport, elastic_force, extra_velocity
from .diagnostics import (
    EnergyLedger,
    build_ledger,
    check_energy_inequality,
    director_length_stats,
    h2_diagnostic,
    transport_only_run,
)
from .energetics import (
    EnergyBreakdown,
    ModelParams,
    chemical_potential,
    dissipation_rate,
    double_well,
    f_split,
    total_energy,
)
from .fields import (
    GridSpec,
    NonFiniteError,
    SpectralField,
    TensorField,
    VectorField,
    forward_transform,
    inverse_transform,
)
from .initial import initial_condition
from .operators import (
    divergence,
    gradient,
    laplacian,
    leray_project,
    multiply_dealiased,
    sym_skew_gradient,
)
from .runner import RunReport, run_simulation
from .snapshots import read_snapshot, write_snapshot
from .stepper import (
    PicardConfig,
    PicardDivergenceError,
    StepResult,
    StepState,
    implicit_step,
    picard_sweep,
    residual_fully_implicit,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "EnergyBreakdown",
    "EnergyLedger",
    "GridSpec",
    "ModelParams",
    "NonFiniteError",
    "PicardConfig",
    "PicardDivergenceError",
    "RunConfig",
    "RunReport",
    "SpectralField",
    "StepResult",
    "StepState",
    "TensorField",
    "VectorField",
    "build_ledger",
    "check_energy_inequality",
    "chemical_potential",
    "director_length_stats",
    "director_transport",
    "dissipation_rate",
    "divergence",
    "double_well",
    "elastic_force",
    "extra_velocity",
    "f_split",
    "forward_transform",
    "gradient",
    "h2_diagnostic",
    "implicit_step",
    "initial_condition",
    "inverse_transform",
    "laplacian",
    "leray_project",
    "load_config",
    "multiply_dealiased",
    "parse_config",
    "picard_sweep",
    "read_snapshot",
    "residual_fully_implicit",
    "run_simulation",
    "sym_skew_gradient",
    "total_energy",
    "transport_only_run",
    "write_snapshot",
]
