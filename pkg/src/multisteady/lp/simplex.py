"""Dense two-phase primal simplex with bounded variables.

Pricing is Dantzig's largest reduced cost until a run of degenerate pivots
is seen, after which the solver switches to Bland's smallest-index rule for
the rest of the solve (anti-cycling).  Ratio-test ties are resolved within
a tiny primal tolerance in favour of the largest pivot.  The result is a
deterministic function of the model.  After the final basis is found the
basic values are recomputed from the original data with one dense solve, so
accumulated tableau error does not leak into the reported point.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import Infeasible, IterationLimit, Unbounded
from .model import EQ, GE, LE, LpModel, LpSolution

COST_TOL = 1e-9
PIVOT_TOL = 1e-9
FEAS_TOL = 1e-9
DEGENERATE_STREAK = 50
REFACTOR_ROUNDS = 2
TIE_TOL = 1e-12
PHASE1_TOL = 1e-7
SCALE_PASSES = 4
ACCEPT_TOL = 1e-11
SCALE_LIMIT = 16  # factors stay within 2**±16 so fixed tolerances keep their meaning


class _StandardForm:
    """``min c·y  s.t.  A y = b, 0 <= y <= ub`` with a map back to model variables."""

    def __init__(self, model: LpModel):
        n = model.num_vars
        cols: list[tuple[int, float]] = []  # (model var, sign)
        ub: list[float] = []
        offset = np.zeros(n)
        for j, var in enumerate(model.variables):
            lo, hi = var.lower, var.upper
            if lo > -math.inf:
                offset[j] = lo
                cols.append((j, 1.0))
                ub.append(hi - lo)
            elif hi < math.inf:
                offset[j] = hi
                cols.append((j, -1.0))
                ub.append(math.inf)
            else:
                cols.append((j, 1.0))
                ub.append(math.inf)
                cols.append((j, -1.0))
                ub.append(math.inf)
        m = len(model.constraints)
        n_slack = sum(1 for con in model.constraints if con.sense != EQ)
        N = len(cols) + n_slack
        A = np.zeros((m, N))
        b = np.zeros(m)
        var_cols: dict[int, list[int]] = {}
        for y, (j, _) in enumerate(cols):
            var_cols.setdefault(j, []).append(y)
        slack_of = {}
        s = len(cols)
        for i, con in enumerate(model.constraints):
            rhs = con.rhs
            for j, a in con.coeffs.items():
                rhs -= a * offset[j]
                for y in var_cols[j]:
                    A[i, y] += a * cols[y][1]
            if con.sense == LE:
                A[i, s] = 1.0
            elif con.sense == GE:
                A[i, s] = -1.0
            if con.sense != EQ:
                slack_of[i] = s
                ub.append(math.inf)
                s += 1
            b[i] = rhs
        flip = b < 0
        A[flip] *= -1.0
        b[flip] *= -1.0

        sign = -1.0 if model.sense == "max" else 1.0
        c = np.zeros(N)
        const = model.objective_constant
        for j, a in model.objective.items():
            const += a * offset[j]
            for y in var_cols[j]:
                c[y] += sign * a * cols[y][1]

        self.A, self.b, self.c = A, b, c
        self.ub = np.asarray(ub, dtype=float)
        self.cols, self.offset = cols, offset
        self.slack_of = slack_of
        self.n_model = n

    def to_model(self, y: np.ndarray) -> np.ndarray:
        x = self.offset.copy()
        for k, (j, sgn) in enumerate(self.cols):
            x[j] += sgn * y[k]
        return x


class _Tableau:
    def __init__(self, A, b, ub, basis):
        self.T = A.copy()
        self.beta = b.copy()
        self.ub = ub.copy()
        self.basis = list(basis)
        N = A.shape[1]
        self.is_basic = np.zeros(N, dtype=bool)
        self.is_basic[self.basis] = True
        self.at_upper = np.zeros(N, dtype=bool)
        self.iterations = 0

    def pivot(self, r: int, j: int):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.is_basic[self.basis[r]] = False
        self.basis[r] = j
        self.is_basic[j] = True

    def run(self, cost: np.ndarray, max_iter: int) -> str:
        T, ub = self.T, self.ub
        bland = False
        streak = 0
        while True:
            if self.iterations >= max_iter:
                raise IterationLimit(f"simplex exceeded {max_iter} iterations")
            d = cost - cost[self.basis] @ T  # recomputed: incremental updates drift
            free = ~self.is_basic
            elig = free & (((~self.at_upper) & (d < -COST_TOL)) | (self.at_upper & (d > COST_TOL)))
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return "optimal"
            j = int(cand[0]) if bland else int(cand[np.argmax(np.abs(d[cand]))])
            s = -1.0 if self.at_upper[j] else 1.0
            rate = -s * T[:, j]
            basic_ub = ub[self.basis]
            dec = rate < -PIVOT_TOL
            inc = (rate > PIVOT_TOL) & np.isfinite(basic_ub)
            room = np.full(len(rate), math.inf)
            room[dec] = self.beta[dec]
            room[inc] = basic_ub[inc] - self.beta[inc]
            np.maximum(room, 0.0, out=room)
            step = np.abs(rate)
            ratios = np.full(len(rate), math.inf)
            moving = dec | inc
            ratios[moving] = room[moving] / step[moving]
            t_flip = ub[j]
            r = -1
            t = t_flip
            if moving.any():
                rmin = ratios.min()
                if rmin < t_flip:
                    # a row counts as tied when stepping to its ratio leaves every other
                    # basic variable within TIE_TOL of its bound (a Harris bound)
                    bound = ((room[moving] + TIE_TOL) / step[moving]).min()
                    ties = np.flatnonzero(ratios <= bound)
                    if bland:
                        r = int(min(ties, key=lambda i: self.basis[i]))
                    else:
                        # the largest pivot among ties: degenerate ties are common and a
                        # tiny pivot there ruins the tableau
                        r = int(ties[np.lexsort((ratios[ties], -step[ties]))[0]])
                    t = ratios[r]
            if not math.isfinite(t):
                return "unbounded"
            self.iterations += 1
            self.beta += rate * t
            if r < 0:
                self.at_upper[j] = not self.at_upper[j]
            else:
                leaving = self.basis[r]
                entering_value = (ub[j] if self.at_upper[j] else 0.0) + s * t
                self.at_upper[leaving] = rate[r] > 0
                self.at_upper[j] = False
                self.beta[r] = entering_value
                self.pivot(r, j)
            if t <= FEAS_TOL:
                streak += 1
                if streak > DEGENERATE_STREAK:
                    bland = True
            else:
                streak = 0

    def refactor(self, A: np.ndarray, b: np.ndarray) -> bool:
        """Rebuild ``T`` and the basic values from the original data; False if the basis is singular."""
        y = self.nonbasic_values()
        B = A[:, self.basis]
        try:
            self.T = np.linalg.solve(B, A)
            self.beta = np.linalg.solve(B, b - A @ y)
        except np.linalg.LinAlgError:
            return False
        return True

    def nonbasic_values(self) -> np.ndarray:
        y = np.where(self.at_upper, self.ub, 0.0)
        y[self.basis] = 0.0
        return y


def _equilibrate(A: np.ndarray, passes: int = SCALE_PASSES) -> tuple[np.ndarray, np.ndarray]:
    """Geometric-mean row and column scale factors, rounded to powers of two (exact)."""
    m, N = A.shape
    R, C = np.ones(m), np.ones(N)
    mag = np.abs(A)
    nz = mag > 0
    for _ in range(passes):
        S = mag * R[:, None] * C[None, :]
        hi = np.where(nz, S, 0.0).max(axis=1, initial=0.0)
        lo = np.where(nz, S, np.inf).min(axis=1, initial=np.inf)
        ok = hi > 0
        R[ok] /= np.sqrt(hi[ok] * lo[ok])
        S = mag * R[:, None] * C[None, :]
        hi = np.where(nz, S, 0.0).max(axis=0, initial=0.0)
        lo = np.where(nz, S, np.inf).min(axis=0, initial=np.inf)
        ok = hi > 0
        C[ok] /= np.sqrt(hi[ok] * lo[ok])
    def snap(v):
        return np.exp2(np.clip(np.round(np.log2(v)), -SCALE_LIMIT, SCALE_LIMIT))

    return snap(R), snap(C)


def simplex_solve(model: LpModel, max_iter: int | None = None) -> LpSolution:
    """Solve ``model``; raises :class:`Infeasible` / :class:`Unbounded` / :class:`IterationLimit`.

    The model is solved as given first.  If pivoting error leaves a residual
    above ``ACCEPT_TOL`` (or a spurious phase-1 failure), it is solved again
    on the equilibrated system and the cleaner point is returned.
    """
    sf = _StandardForm(model)
    m, N = sf.A.shape
    R, C = _equilibrate(sf.A)
    for i, j in sf.slack_of.items():
        C[j] = 1.0 / R[i]  # slacks stay unit columns for the starting basis
    scale = max(1.0, float(np.abs(sf.b).max(initial=0.0)))
    best = None
    first_error = None
    for R_, C_ in ((np.ones(m), np.ones(N)), (R, C)):
        try:
            y, iterations = _solve_scaled(sf, R_, C_, max_iter)
        except (Infeasible, Unbounded, IterationLimit) as exc:
            first_error = first_error or exc
            continue
        res = float(np.abs(sf.A @ y - sf.b).max(initial=0.0)) / scale
        if best is None or res < best[0]:
            best = (res, y, iterations)
        if res <= ACCEPT_TOL:
            break
    if best is None:
        raise first_error
    _, y, iterations = best
    x = sf.to_model(y)
    obj = float(model.cost_vector() @ x + model.objective_constant)
    return LpSolution("optimal", x, obj, iterations)


def _solve_scaled(sf: _StandardForm, R: np.ndarray, C: np.ndarray, max_iter: int | None) -> tuple[np.ndarray, int]:
    """Two-phase solve of ``(R A C) y' = R b``; returns ``y = C y'`` and the iteration count."""
    A = sf.A * R[:, None] * C[None, :]
    b = sf.b * R
    ub = sf.ub / C
    cost = sf.c * C
    m, N = A.shape
    if max_iter is None:
        max_iter = 50 * (m + N) + 1000

    # starting basis: a +1 slack where available, an artificial otherwise
    basis = []
    art_rows = []
    for i in range(m):
        s = sf.slack_of.get(i)
        if s is not None and A[i, s] == 1.0:
            basis.append(s)
        else:
            basis.append(None)
            art_rows.append(i)
    n_art = len(art_rows)
    A1 = np.hstack([A, np.zeros((m, n_art))])
    for k, i in enumerate(art_rows):
        A1[i, N + k] = 1.0
        basis[i] = N + k
    ub1 = np.concatenate([ub, np.full(n_art, math.inf)])
    tab = _Tableau(A1, b, ub1, basis)
    rows_kept = list(range(m))

    if n_art:
        cost1 = np.zeros(N + n_art)
        cost1[N:] = 1.0
        tab.run(cost1, max_iter)
        # accumulated pivoting error can leave a spurious residual; refactor and retry
        for _ in range(REFACTOR_ROUNDS):
            if not tab.refactor(A1, b):
                break
            tab.run(cost1, max_iter)
        infeas = float(sum(tab.beta[r] for r, j in enumerate(tab.basis) if j >= N))
        if infeas > PHASE1_TOL * max(1.0, float(np.abs(b).max(initial=0.0))):
            raise Infeasible(f"phase 1 ended with infeasibility {infeas:.3e}")
        # drive remaining (zero-level) artificials out; drop redundant rows
        r = 0
        while r < len(tab.basis):
            if tab.basis[r] >= N:
                row = np.abs(tab.T[r, :N]) * ~tab.is_basic[:N]
                j = int(np.argmax(row)) if N else 0
                if N and row[j] > PIVOT_TOL:
                    value = ub1[j] if tab.at_upper[j] else 0.0
                    tab.at_upper[j] = False
                    tab.pivot(r, j)
                    tab.beta[r] = value
                else:
                    # the constraint owning this artificial is a combination of the others
                    rows_kept.remove(art_rows[tab.basis[r] - N])
                    tab.T = np.delete(tab.T, r, axis=0)
                    tab.beta = np.delete(tab.beta, r)
                    tab.is_basic[tab.basis[r]] = False
                    del tab.basis[r]
                    continue
            r += 1
        tab.T = tab.T[:, :N]
        tab.ub = tab.ub[:N]
        tab.is_basic = tab.is_basic[:N]
        tab.at_upper = tab.at_upper[:N]

    status = tab.run(cost, max_iter)
    for _ in range(REFACTOR_ROUNDS):
        if status != "optimal" or not tab.refactor(A[rows_kept], b[rows_kept]):
            break
        status = tab.run(cost, max_iter)
    if status == "unbounded":
        raise Unbounded("objective is unbounded")

    y_tab = tab.nonbasic_values()
    y_tab[tab.basis] = tab.beta
    candidates = [y_tab]
    if tab.basis:
        y = tab.nonbasic_values()
        Ak = A[rows_kept]
        try:
            y[tab.basis] = np.linalg.solve(Ak[:, tab.basis], b[rows_kept] - Ak @ y)
            candidates.insert(0, y)
        except np.linalg.LinAlgError:
            pass
    # round-off can push a basic value just outside its bounds
    candidates = [np.clip(y, 0.0, ub) for y in candidates]
    y = min(candidates, key=lambda y: float(np.abs(A @ y - b).max(initial=0.0)))
    return np.minimum(y * C, sf.ub), tab.iterations
