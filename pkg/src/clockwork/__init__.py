"""Vitamin C iodine clock reaction: simulation, asymptotics and calibration."""

from .asymptotics import (
    AsymptoticSolution,
    RegionBounds,
    RegionLabel,
    classify_region,
    composite_eval,
    region1,
    region2,
    region3,
    region4,
    switchover_tau,
    switchover_time,
    switchover_time_from,
)
from .calibration import (
    DegenerateDataError,
    FitReport,
    FitResult,
    Measurement,
    ParseError,
    fit,
    fit_report,
    load_measurements,
    predict,
    read_measurements,
    table1,
)
from .kinetics import (
    DimensionalState,
    DimensionlessGroups,
    DimlessState,
    DomainError,
    InitialConcentrations,
    RateConstants,
    derive_groups,
    equilibrium_analysis,
    quasi_steady_beta,
    rhs_dimensionless,
    rhs_full,
    rhs_reduced,
    scales,
    to_dimensional,
    to_dimensionless,
)
from .solver import (
    SolverConfig,
    SolverError,
    SwitchoverEvent,
    Trajectory,
    corner_threshold,
    detect_switchover,
    integrate,
    integrate_dimensional,
)

__version__ = "0.1.0"
