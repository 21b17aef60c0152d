"""Solver-independent linear program representation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

LE, EQ, GE = "<=", "=", ">="


@dataclass(frozen=True)
class Variable:
    name: str
    lower: float = 0.0
    upper: float = math.inf


@dataclass(frozen=True)
class Constraint:
    coeffs: Mapping[int, float]
    sense: str
    rhs: float
    name: str = ""


@dataclass
class LpModel:
    """``sense`` of ``objective·x + objective_constant`` subject to linear rows and bounds.

    ``meta`` carries builder-specific bookkeeping (e.g. which variable is
    which edge) and is ignored by solvers.
    """

    sense: str = "min"
    variables: list[Variable] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: dict[int, float] = field(default_factory=dict)
    objective_constant: float = 0.0
    meta: dict[str, Any] = field(default_factory=dict)

    def add_var(self, name: str, lower: float = 0.0, upper: float = math.inf, cost: float = 0.0) -> int:
        self.variables.append(Variable(name, float(lower), float(upper)))
        j = len(self.variables) - 1
        if cost:
            self.objective[j] = float(cost)
        return j

    def add_constraint(self, coeffs: Mapping[int, float], sense: str, rhs: float, name: str = "") -> None:
        self.constraints.append(Constraint(dict(coeffs), sense, float(rhs), name))

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    def check(self) -> list[str]:
        """Problems with the model's own invariants (empty when well formed)."""
        problems = []
        if self.sense not in ("min", "max"):
            problems.append(f"unknown objective sense {self.sense!r}")
        for v in self.variables:
            if not v.lower <= v.upper:
                problems.append(f"variable {v.name}: lower {v.lower} > upper {v.upper}")
        n = self.num_vars
        for i, con in enumerate(self.constraints):
            if con.sense not in (LE, EQ, GE):
                problems.append(f"constraint {con.name or i}: bad comparator {con.sense!r}")
            if any(not 0 <= j < n for j in con.coeffs):
                problems.append(f"constraint {con.name or i}: references undeclared variable")
        if any(not 0 <= j < n for j in self.objective):
            problems.append("objective references undeclared variable")
        return problems

    def matrix(self) -> np.ndarray:
        A = np.zeros((len(self.constraints), self.num_vars))
        for i, con in enumerate(self.constraints):
            for j, a in con.coeffs.items():
                A[i, j] += a
        return A

    def cost_vector(self) -> np.ndarray:
        c = np.zeros(self.num_vars)
        for j, a in self.objective.items():
            c[j] = a
        return c

    def residuals(self, x: np.ndarray) -> np.ndarray:
        """Constraint violation of ``x`` per row (0 when satisfied)."""
        lhs = self.matrix() @ x
        out = np.zeros(len(self.constraints))
        for i, con in enumerate(self.constraints):
            gap = lhs[i] - con.rhs
            if con.sense == EQ:
                out[i] = abs(gap)
            elif con.sense == LE:
                out[i] = max(0.0, gap)
            else:
                out[i] = max(0.0, -gap)
        return out

    def to_lp_format(self) -> str:
        """Text in the common CPLEX-style ``.lp`` layout, for debugging."""

        def expr(coeffs: Mapping[int, float]) -> str:
            terms = []
            for j, a in sorted(coeffs.items()):
                if a == 0:
                    continue
                sign = "-" if a < 0 else "+"
                terms.append(f"{sign} {abs(a):.17g} {_lp_name(self.variables[j].name)}")
            s = " ".join(terms) or "0"
            return s[2:] if s.startswith("+ ") else s

        lines = ["Minimize" if self.sense == "min" else "Maximize", f" obj: {expr(self.objective)}"]
        if self.objective_constant:
            lines.append(f"\\ constant term {self.objective_constant:.17g}")
        lines.append("Subject To")
        for i, con in enumerate(self.constraints):
            op = {LE: "<=", EQ: "=", GE: ">="}[con.sense]
            lines.append(f" {_lp_name(con.name) or f'c{i}'}: {expr(con.coeffs)} {op} {con.rhs:.17g}")
        lines.append("Bounds")
        for v in self.variables:
            lo = "-inf" if v.lower == -math.inf else f"{v.lower:.17g}"
            hi = "+inf" if v.upper == math.inf else f"{v.upper:.17g}"
            lines.append(f" {lo} <= {_lp_name(v.name)} <= {hi}")
        lines.append("End")
        return "\n".join(lines) + "\n"


def _lp_name(name: str) -> str:
    return name.replace("[", "(").replace("]", ")").replace(",", "_").replace(" ", "")


@dataclass(frozen=True)
class LpSolution:
    status: str  # optimal | infeasible | unbounded
    values: np.ndarray
    objective: float
    iterations: int = 0

    def value(self, j: int) -> float:
        return float(self.values[j])
