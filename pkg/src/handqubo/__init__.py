"""Kinematic-structure design selection for a robotic hand, posed as a QUBO."""

__version__ = "0.1.0"

from .catalog import Catalog, DesignCandidate, HandParameters, build_catalog, compatibility
from .kinematics import DhRow, KinematicChain, Pose, forward_kinematics, manipulability, position_jacobian
from .metrics import EvaluationTable, evaluate_catalog, max_hand_dof
from .qubo import PenaltyConfig, QuboMatrix, VariableLayout, build_qubo, decode, objective
from .solvers import SaParams, SolveReport, exhaustive_feasible_min, simulated_anneal

__all__ = [
    "Catalog", "DesignCandidate", "DhRow", "EvaluationTable", "HandParameters", "KinematicChain",
    "PenaltyConfig", "Pose", "QuboMatrix", "SaParams", "SolveReport", "VariableLayout",
    "build_catalog", "build_qubo", "compatibility", "decode", "evaluate_catalog",
    "exhaustive_feasible_min", "forward_kinematics", "manipulability", "max_hand_dof",
    "objective", "position_jacobian", "simulated_anneal",
]
