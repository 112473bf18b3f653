"""Overflow probabilities and first-passage laws for Levy-driven storage.

The public surface re-exports the model layer, the Takacs overflow
evaluators, scale-function machinery and the Monte Carlo engine; see
README.md for a guided tour.
"""

from .mc import (
    EstimationError,
    EstimatorResult,
    LevelExceeds,
    MaxExceeds,
    SamplerError,
    SimulationConfig,
    TauMean,
    TauTransform,
    dump_paths,
    estimate,
    estimate_many,
    sample_increment,
    simulate_reflected_ensemble,
)
from .models import (
    Family,
    LaplaceExponent,
    LevyModel,
    Orientation,
    UnsupportedModelError,
    cdf,
    density,
    laplace_exponent,
    stable_density,
)
from .overflow import (
    OverflowQuery,
    OverflowResult,
    gamma_closed_form,
    ig_closed_form,
    overflow_at_t,
    prob_busy,
)
from .quad import QuadResult, QuadratureError, integrate, integrate_semi_infinite
from .reflect import ReflectedPath, SamplePath, first_passage_index, reflect
from .scale import (
    FirstPassageQuery,
    ProbabilityResult,
    ScaleConfig,
    ScaleFunctionTable,
    expected_tau_inventory,
    expected_tau_storage,
    fp_transform_inventory,
    fp_transform_storage,
    kendall_cross_check,
    overflow_by_time,
    scale_function,
)

__all__ = [
    "Family",
    "LaplaceExponent",
    "LevyModel",
    "Orientation",
    "UnsupportedModelError",
    "cdf",
    "density",
    "laplace_exponent",
    "stable_density",
    "QuadResult",
    "QuadratureError",
    "integrate",
    "integrate_semi_infinite",
    "ReflectedPath",
    "SamplePath",
    "first_passage_index",
    "reflect",
    "OverflowQuery",
    "OverflowResult",
    "overflow_at_t",
    "prob_busy",
    "gamma_closed_form",
    "ig_closed_form",
    "ScaleConfig",
    "ScaleFunctionTable",
    "FirstPassageQuery",
    "ProbabilityResult",
    "scale_function",
    "fp_transform_storage",
    "fp_transform_inventory",
    "expected_tau_storage",
    "expected_tau_inventory",
    "overflow_by_time",
    "kendall_cross_check",
    "SimulationConfig",
    "EstimatorResult",
    "LevelExceeds",
    "MaxExceeds",
    "TauMean",
    "TauTransform",
    "SamplerError",
    "EstimationError",
    "sample_increment",
    "simulate_reflected_ensemble",
    "estimate",
    "estimate_many",
    "dump_paths",
]
