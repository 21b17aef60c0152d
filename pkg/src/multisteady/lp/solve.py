"""Solver front end: the built-in simplex or scipy's HiGHS."""

from __future__ import annotations

import numpy as np

from ..errors import Infeasible, IterationLimit, SolverError, Unbounded
from .model import EQ, GE, LE, LpModel, LpSolution
from .simplex import simplex_solve

SOLVERS = ("simplex", "highs")


def _highs_solve(model: LpModel) -> LpSolution:
    from scipy.optimize import linprog

    c = model.cost_vector()
    if model.sense == "max":
        c = -c
    A = model.matrix()
    senses = [con.sense for con in model.constraints]
    rhs = np.array([con.rhs for con in model.constraints])
    ub_rows = [i for i, s in enumerate(senses) if s != EQ]
    eq_rows = [i for i, s in enumerate(senses) if s == EQ]
    flip = np.array([-1.0 if senses[i] == GE else 1.0 for i in ub_rows])
    A_ub = A[ub_rows] * flip[:, None] if ub_rows else None
    b_ub = rhs[ub_rows] * flip if ub_rows else None
    A_eq = A[eq_rows] if eq_rows else None
    b_eq = rhs[eq_rows] if eq_rows else None
    bounds = [
        (None if v.lower == -np.inf else v.lower, None if v.upper == np.inf else v.upper)
        for v in model.variables
    ]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status == 2:
        raise Infeasible(res.message)
    if res.status == 3:
        raise Unbounded(res.message)
    if res.status == 1:
        raise IterationLimit(res.message)
    if res.status != 0:
        raise SolverError(res.message)
    x = np.asarray(res.x, dtype=float)
    obj = float(model.cost_vector() @ x + model.objective_constant)
    return LpSolution("optimal", x, obj, int(getattr(res, "nit", 0)))


def solve_lp(model: LpModel, solver: str = "simplex") -> LpSolution:
    """Optimal solution of ``model``.

    Raises :class:`Infeasible`, :class:`Unbounded` or :class:`IterationLimit`.
    """
    problems = model.check()
    if problems:
        raise ValueError("malformed LP: " + "; ".join(problems))
    if solver == "simplex":
        return simplex_solve(model)
    if solver == "highs":
        return _highs_solve(model)
    raise ValueError(f"unknown solver {solver!r}; choose from {SOLVERS}")
