from .model import EQ, GE, LE, Constraint, LpModel, LpSolution, Variable
from .programs import (
    ColorPhaseProducts,
    build_baseline_lp,
    build_strategy_lp,
    color_phase_products,
    default_eps_full,
    extract_strategy,
    products_from_occupancies,
    residuals_by_group,
)
from .solve import SOLVERS, solve_lp

__all__ = [
    "EQ",
    "GE",
    "LE",
    "Constraint",
    "LpModel",
    "LpSolution",
    "Variable",
    "ColorPhaseProducts",
    "build_baseline_lp",
    "build_strategy_lp",
    "color_phase_products",
    "default_eps_full",
    "extract_strategy",
    "products_from_occupancies",
    "residuals_by_group",
    "SOLVERS",
    "solve_lp",
]
