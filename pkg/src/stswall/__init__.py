"""Coupled heat-and-moisture transfer in multilayer walls, marched with
super-time-stepping (Chebyshev/Legendre), Euler, and Du Fort-Frankel."""

from .dimensionless import (
    DimensionlessGroups, ScalingSet, compute_biot_numbers, compute_fourier_numbers,
    nondimensionalize, redimensionalize,
)
from .errors import (
    AssemblyError, ConfigError, DivergenceError, IngestionError,
    StaleScheduleError, StswallError,
)
from .integrators import (
    RunReport, SuperStepSchedule, amplification_eval, build_schedule,
    dufort_frankel_run, euler_run, sts_run,
)
from .metrics import (
    ComparisonRecord, drying_rate, error_norms, ratios, scd,
    state_error_norms, total_moisture, write_comparison_csv,
)
from .model import (
    BiotSet, BoundaryForcing, CoefficientModel, Grid1D, SideForcing,
    StateField, WallAssembly, build_wall, builtin_material,
    evaluate_coefficients, saturation_pressure,
)
from .operator import (
    SemiDiscreteOperator, StabilityEstimate, apply_robin_closure,
    assemble_operator, estimate_lambda_max,
)
from .series import BoundarySeries, ingest_boundary_series, write_synthetic_climate

__version__ = "0.1.0"
