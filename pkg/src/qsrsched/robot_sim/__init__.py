"""Three-link planar manipulator: dynamics, reference trajectory, schedules, closed loop."""

from .dynamics import ChainDynamics, dynamics_for, mass_matrix, mass_matrix_partials, nonlinear_forces
from .schedules import example_families, matrix_schedule, scalar_families, scalar_schedule, unit_schedule, z_bar
from .simulation import ControllerBank, RmsMetrics, SimResult, rms, rms_metrics, simulate_closed_loop
from .trajectory import Waypoints, quintic_trajectory, scheduling_signals, smoothstep5, smoothstep5_rate

__all__ = [
    "ChainDynamics", "dynamics_for", "mass_matrix", "mass_matrix_partials", "nonlinear_forces",
    "example_families", "matrix_schedule", "scalar_families", "scalar_schedule", "unit_schedule", "z_bar",
    "ControllerBank", "RmsMetrics", "SimResult", "rms", "rms_metrics", "simulate_closed_loop",
    "Waypoints", "quintic_trajectory", "scheduling_signals", "smoothstep5", "smoothstep5_rate",
]
