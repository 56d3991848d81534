"""Robotic milling simulation and off-line compliance error compensation."""

from .cutting_force import CuttingParams, fractional_force, radial_force, tool_frame_force
from .dynamic_sim import Scenario, SimulationTrace, run_simulation
from .elastodynamics import BeamParams, cartesian_mass, reduced_link_mass
from .elastostatics import (
    LoadedState,
    SolverSettings,
    cartesian_stiffness,
    solve_equilibrium_for_force,
    solve_equilibrium_for_pose,
)
from .errors import RobomillError
from .robot_model import JointConfig, LinkDescription, ManipulatorDescription
from .workpiece_grid import WorkpieceGrid, init_grid

__version__ = "0.1.0"

__all__ = [
    "BeamParams", "CuttingParams", "JointConfig", "LinkDescription", "LoadedState",
    "ManipulatorDescription", "RobomillError", "Scenario", "SimulationTrace", "SolverSettings",
    "WorkpieceGrid", "cartesian_mass", "cartesian_stiffness", "fractional_force",
    "init_grid", "radial_force", "reduced_link_mass", "run_simulation",
    "solve_equilibrium_for_force", "solve_equilibrium_for_pose", "tool_frame_force",
]
