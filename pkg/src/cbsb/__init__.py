"""Bounded-suboptimal multi-agent path finding with per-agent length budgets."""
from .core import (
    AgentTask,
    Conflict,
    Constraint,
    GridMap,
    check_tasks,
    detect_conflicts,
    neighbors,
    validate_plan,
)
from .ecbs import ecbs_solve
from .lowlevel import ConflictAvoidanceTable, build_cat, build_heuristic, find_path
from .movingai import OutOfBounds, ParseError, load_map, load_scenario, read_instance
from .oracles import enumerate_Y, joint_astar
from .solver import CBSB, HighLevelQueues, SolverConfig, SolveResult, solve

__all__ = [
    "AgentTask", "Conflict", "Constraint", "GridMap", "check_tasks", "detect_conflicts", "neighbors",
    "validate_plan", "ecbs_solve", "ConflictAvoidanceTable", "build_cat", "build_heuristic", "find_path",
    "OutOfBounds", "ParseError", "load_map", "load_scenario", "read_instance", "enumerate_Y", "joint_astar",
    "CBSB", "HighLevelQueues", "SolverConfig", "SolveResult", "solve",
]
