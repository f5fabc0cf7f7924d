"""Average peak Age of Information for an energy-harvesting sensor that sends
status updates over an erasure channel."""

from .analytic import peak_aoi, theorem1_optimal_value
from .errors import (
    AoiError,
    ConfigError,
    CycleOverflow,
    DeadPolicy,
    GateNeverPasses,
    InvalidParam,
    NoFiniteValue,
)
from .model import (
    SCHEMES,
    EmpiricalSc,
    ProbFb,
    ProbNoFb,
    ScDistribution,
    SystemParams,
    ThresholdFb,
    ThresholdNoFb,
    WindowFb,
    WindowNoFb,
    make_policy,
)
from .optimizer import OptResult, best_prob, best_threshold_sim, best_window, theorem1_residual
from .simulator import CycleRecord, CycleTrace, PeakAoiEstimate, simulate, simulate_parallel

__version__ = "0.1.0"

__all__ = [
    "AoiError", "ConfigError", "CycleOverflow", "DeadPolicy", "GateNeverPasses",
    "InvalidParam", "NoFiniteValue",
    "SCHEMES", "EmpiricalSc", "ProbFb", "ProbNoFb", "ScDistribution", "SystemParams",
    "ThresholdFb", "ThresholdNoFb", "WindowFb", "WindowNoFb", "make_policy",
    "peak_aoi", "theorem1_optimal_value",
    "CycleRecord", "CycleTrace", "PeakAoiEstimate", "simulate", "simulate_parallel",
    "OptResult", "best_prob", "best_threshold_sim", "best_window", "theorem1_residual",
]
