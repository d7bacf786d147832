"""Optimal control of delay equations with a positivity state constraint."""

from . import errors
from .model import (
    DynamicsSpec,
    HistoryState,
    KernelSpec,
    ProblemConfig,
    StateUtilitySpec,
    UtilitySpec,
    ValidationReport,
    constant_history,
    validate_config,
    zero_state_utility,
)
from .presets import builtin_catalog, get_preset, preset_names
from .dynamics import (
    ControlPath,
    Trajectory,
    comparison_check,
    constant_control,
    integrate,
    integrate_batch,
    no_tail,
    objective,
    trajectory_csv,
    upper_bound_tail,
    window_state,
    zero_control_tail,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
