"""Time-inconsistent mean-field optimal stopping: interacting particles,
Picard iteration for recursive value processes, exact lattice oracles and
convergence diagnostics."""

__version__ = "0.1.0"

from .core import ObstacleSpec, TimeGrid, DriverEnsemble, make_time_grid, sample_drivers, validate_spec
from .errors import (ConditioningError, ConfigurationError, InstanceTooLargeError, MfstopError,
                     NonConvergenceError, ShapeMismatchError, SimulationDivergedError)
from .lattice import LatticeModel
from .models import get_preset
from .recursive import picard_interacting, picard_meanfield
from .snell import ValueSurface, snell_backward
from .stopping import compute_z_and_hit, evaluate_rule

__all__ = [
    "ObstacleSpec", "TimeGrid", "DriverEnsemble", "make_time_grid", "sample_drivers", "validate_spec",
    "ConditioningError", "ConfigurationError", "InstanceTooLargeError", "MfstopError",
    "NonConvergenceError", "ShapeMismatchError", "SimulationDivergedError",
    "LatticeModel", "get_preset", "picard_interacting", "picard_meanfield",
    "ValueSurface", "snell_backward", "compute_z_and_hit", "evaluate_rule",
]
