from .levels import LevelSpec, LevelOperators, get_level_operators
from .solver import (
    VelocityField,
    SaddleSolveStats,
    SolverDiverged,
    BlowUp,
    imex_step,
    solve_forward,
)

__all__ = [
    "LevelSpec",
    "LevelOperators",
    "get_level_operators",
    "VelocityField",
    "SaddleSolveStats",
    "SolverDiverged",
    "BlowUp",
    "imex_step",
    "solve_forward",
]
