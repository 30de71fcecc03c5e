"""Mitigated estimator pipeline and the experiment harnesses."""

from .estimator import (
    EstimatorJob,
    MitigatedResult,
    ObservableResult,
    SimulationCache,
    Variant,
    allocate_shots,
    build_execution_plan,
    ideal_expectations,
    run_mitigated_estimator,
)

__all__ = [
    "EstimatorJob",
    "MitigatedResult",
    "ObservableResult",
    "SimulationCache",
    "Variant",
    "allocate_shots",
    "build_execution_plan",
    "ideal_expectations",
    "run_mitigated_estimator",
]
