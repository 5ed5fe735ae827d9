"""Composite factor model estimation: regularized max-likelihood fitting,
latent-variable interpretation, and identifiability certification."""

from ._core import (
    AssumptionReport,
    BlockPrecision,
    Dataset,
    FactorModelParams,
    PopulationModel,
    RecoveredParams,
    SolveReport,
    SolverOptions,
    build_population,
    generate_synthetic,
    marginalize_factor,
    recover_parameters,
    sample_observations,
    solve_composite,
    solve_factor,
    verify_assumptions,
)

__all__ = [
    "AssumptionReport",
    "BlockPrecision",
    "Dataset",
    "FactorModelParams",
    "PopulationModel",
    "RecoveredParams",
    "SolveReport",
    "SolverOptions",
    "build_population",
    "generate_synthetic",
    "marginalize_factor",
    "recover_parameters",
    "sample_observations",
    "solve_composite",
    "solve_factor",
    "verify_assumptions",
]
