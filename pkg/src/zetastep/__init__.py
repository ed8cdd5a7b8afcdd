"""Toolkit for a single-switch coupled-inductor high-step-up DC-DC converter:
closed-form steady-state analytics, an event-driven time-domain simulator,
topology gain comparison, and a component-sizing design procedure.
"""

__version__ = "0.1.0"

from .model import (
    ConverterParams,
    Mode,
    ParameterError,
    SimMetrics,
    StateVector,
    SteadyStateReport,
    validate_params,
)
from .analytics import DesignRipple, full_report, gain
from .simulator import (
    SimConfig,
    SimResult,
    SimulationError,
    ConvergenceError,
    Trace,
    extract_metrics,
    integrate_period,
    mode_system,
    run_to_steady_state,
    transition_events,
)
from .comparison import TOPOLOGIES, TopologyModel, gain_of, sweep_gain
from .design import DesignSpec, DesignResult, size_converter, solve_duty, verify_design

__all__ = [
    "__version__",
    "ConverterParams", "Mode", "ParameterError", "SimMetrics", "StateVector",
    "SteadyStateReport", "validate_params",
    "DesignRipple", "full_report", "gain",
    "SimConfig", "SimResult", "SimulationError", "ConvergenceError", "Trace",
    "extract_metrics", "integrate_period", "mode_system",
    "run_to_steady_state", "transition_events",
    "TOPOLOGIES", "TopologyModel", "gain_of", "sweep_gain",
    "DesignSpec", "DesignResult", "size_converter", "solve_duty",
    "verify_design",
]
