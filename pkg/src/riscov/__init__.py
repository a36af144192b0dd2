"""Coverage and rate evaluation for reflector-assisted millimeter-wave cells.

Two engines over one system model: a closed-form analytic stack (ergodic
coverage probability and cell sum rate via adaptive quadrature) and a
two-tier Monte Carlo simulator (a model-faithful tier that re-samples the
analytic model's own random quantities, and a physical tier that builds
planar scenes with explicit segment blockages).  The ``riscov`` console
script exposes sweeps, validation, and gap reporting on top of both.
"""

from .analytic import (
    ConditionalCoverage,
    ConvergenceError,
    RadialProfile,
    SystemParams,
    cond_coverage,
    cond_coverage_direct,
    cond_coverage_reflected,
    ergodic_coverage,
    eta_cdf,
    p_los,
    reflection_prob,
    sum_rate,
    thinned_ris_density,
    user_rate,
)
from .channel import RadioParams, lobe_pattern, pathloss_gain
from .config import (
    ConfigError,
    EngineFlags,
    OutputPaths,
    RunConfig,
    SweepSpec,
    default_config,
    load_config,
    save_config,
)
from .montecarlo import (
    EmptyEstimateError,
    McConfig,
    McEstimate,
    gap_report,
    simulate_cond_coverage,
    simulate_coverage,
    simulate_sum_rate,
    simulate_user_rate,
)
from .numerics import QuadratureSpec, integrate_1d

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ConditionalCoverage",
    "ConvergenceError",
    "RadialProfile",
    "SystemParams",
    "cond_coverage",
    "cond_coverage_direct",
    "cond_coverage_reflected",
    "ergodic_coverage",
    "eta_cdf",
    "p_los",
    "reflection_prob",
    "sum_rate",
    "thinned_ris_density",
    "user_rate",
    "RadioParams",
    "lobe_pattern",
    "pathloss_gain",
    "ConfigError",
    "EngineFlags",
    "OutputPaths",
    "RunConfig",
    "SweepSpec",
    "default_config",
    "load_config",
    "save_config",
    "EmptyEstimateError",
    "McConfig",
    "McEstimate",
    "gap_report",
    "simulate_cond_coverage",
    "simulate_coverage",
    "simulate_sum_rate",
    "simulate_user_rate",
    "QuadratureSpec",
    "integrate_1d",
]
