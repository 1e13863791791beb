"""Small dense linear-programming toolkit.

``LinearProgram`` holds a problem in the form::

    minimize / maximize  c @ x
    subject to           A_ub @ x <= b_ub
                         A_eq @ x == b_eq
                         lb <= x <= ub

and :func:`solve` runs the embedded bounded-variable simplex (or scipy's
HiGHS when ``method="highs"``).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL = "numerical_failure"
ITERATION_LIMIT = "iteration_limit"


@dataclass
class LinearProgram:
    c: np.ndarray
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    lb: Optional[np.ndarray] = None
    ub: Optional[np.ndarray] = None
    names: list = field(default_factory=list)
    row_names: list = field(default_factory=list)
    maximize: bool = False

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = len(self.c)
        self.A_ub = np.zeros((0, n)) if self.A_ub is None else np.atleast_2d(np.asarray(self.A_ub, float))
        self.b_ub = np.zeros(0) if self.b_ub is None else np.asarray(self.b_ub, float).ravel()
        self.A_eq = np.zeros((0, n)) if self.A_eq is None else np.atleast_2d(np.asarray(self.A_eq, float))
        self.b_eq = np.zeros(0) if self.b_eq is None else np.asarray(self.b_eq, float).ravel()
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, float).copy()
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, float).copy()
        if not self.names:
            self.names = [f"x{i}" for i in range(n)]
        if len(self.row_names) != len(self.b_ub) + len(self.b_eq):
            self.row_names = [f"u{i}" for i in range(len(self.b_ub))] + [
                f"e{i}" for i in range(len(self.b_eq))
            ]
        self.check()

    @property
    def n_vars(self):
        return len(self.c)

    @property
    def n_rows(self):
        return len(self.b_ub) + len(self.b_eq)

    def check(self):
        n = len(self.c)
        if self.A_ub.shape != (len(self.b_ub), n) or self.A_eq.shape != (len(self.b_eq), n):
            raise ValueError("constraint matrix dimensions do not match")
        if self.lb.shape != (n,) or self.ub.shape != (n,) or len(self.names) != n:
            raise ValueError("bounds/names must have one entry per variable")
        if np.any(self.lb > self.ub):
            raise ValueError("lower bound exceeds upper bound")

    def index(self, name):
        return self.names.index(name)

    def residuals(self, x):
        """Scaled constraint violations (>0 means violated)."""
        x = np.asarray(x, dtype=float)
        out = []
        if len(self.b_ub):
            act = self.A_ub @ x
            scale = 1.0 + np.abs(self.b_ub) + np.abs(self.A_ub) @ np.abs(x)
            out.append((act - self.b_ub) / scale)
        if len(self.b_eq):
            act = self.A_eq @ x
            scale = 1.0 + np.abs(self.b_eq) + np.abs(self.A_eq) @ np.abs(x)
            out.append(np.abs(act - self.b_eq) / scale)
        out.append((self.lb - x) / (1.0 + np.abs(np.where(np.isfinite(self.lb), self.lb, 0))))
        out.append((x - self.ub) / (1.0 + np.abs(np.where(np.isfinite(self.ub), self.ub, 0))))
        return np.concatenate(out)

    def is_feasible(self, x, tol=1e-8):
        return bool(np.all(self.residuals(x) <= tol))

    def objective(self, x):
        return float(self.c @ x)


@dataclass
class LPSolution:
    status: str
    x: Optional[np.ndarray] = None
    objective: float = float("nan")
    iterations: int = 0
    message: str = ""

    @property
    def success(self):
        return self.status == OPTIMAL


def solve(lp: LinearProgram, method="simplex", tol=1e-8, max_iter=None) -> LPSolution:
    """Solve ``lp``; ``method`` is ``"simplex"`` (embedded) or ``"highs"``."""
    if method == "highs":
        sol = _solve_highs(lp)
    elif method == "simplex":
        sol = _solve_simplex(lp, max_iter=max_iter)
    else:
        raise ValueError(f"unknown LP method {method!r}")
    if sol.status == OPTIMAL:
        worst = float(np.max(lp.residuals(sol.x), initial=0.0))
        if worst > tol:
            return LPSolution(
                NUMERICAL, sol.x, sol.objective, sol.iterations,
                f"solution violates constraints by {worst:.3g} (scaled)",
            )
    return sol


def _solve_highs(lp: LinearProgram) -> LPSolution:
    from scipy.optimize import linprog

    sign = -1.0 if lp.maximize else 1.0
    bounds = [(None if np.isinf(lo) else lo, None if np.isinf(hi) else hi) for lo, hi in zip(lp.lb, lp.ub)]
    res = linprog(
        sign * lp.c,
        A_ub=lp.A_ub if len(lp.b_ub) else None,
        b_ub=lp.b_ub if len(lp.b_ub) else None,
        A_eq=lp.A_eq if len(lp.b_eq) else None,
        b_eq=lp.b_eq if len(lp.b_eq) else None,
        bounds=bounds,
        method="highs",
    )
    status = {0: OPTIMAL, 1: ITERATION_LIMIT, 2: INFEASIBLE, 3: UNBOUNDED}.get(res.status, NUMERICAL)
    if status != OPTIMAL:
        return LPSolution(status, message=res.message)
    return LPSolution(OPTIMAL, res.x, lp.objective(res.x), int(res.nit), res.message)


# --------------------------------------------------------------------------
# embedded simplex


def _standardize(lp: LinearProgram):
    """Map x = M y + d with y >= 0 (upper bounds kept as ``u``)."""
    n = lp.n_vars
    cols, offs, u = [], np.zeros(n), []
    M = []
    for i in range(n):
        lo, hi = lp.lb[i], lp.ub[i]
        e = np.zeros(n)
        e[i] = 1.0
        if np.isfinite(lo):
            offs[i] = lo
            M.append(e)
            u.append(hi - lo)
        elif np.isfinite(hi):
            offs[i] = hi
            M.append(-e)
            u.append(np.inf)
        else:
            M.append(e)
            M.append(-e)
            u += [np.inf, np.inf]
    M = np.array(M).T if M else np.zeros((n, 0))
    return M, offs, np.array(u, dtype=float)


class _Tableau:
    """Bounded-variable tableau ``B^-1 A`` with basic values kept separately."""

    def __init__(self, A, b, u, basis):
        self.T = A.copy()
        self.x_B = b.copy()
        self.u = u
        self.basis = list(basis)
        self.at_upper = np.zeros(A.shape[1], dtype=bool)
        self.is_basic = np.zeros(A.shape[1], dtype=bool)
        self.is_basic[self.basis] = True
        self.iterations = 0

    def pivot(self, r, j):
        T = self.T
        col = T[:, j].copy()
        T[r] /= col[r]
        col[r] = 0.0
        nz = np.nonzero(col)[0]
        if len(nz):
            T[nz] -= np.outer(col[nz], T[r])
        self.d -= self.d[j] * T[r]
        self.is_basic[self.basis[r]] = False
        self.is_basic[j] = True
        self.basis[r] = j

    def run(self, c, banned, max_iter, tol=1e-9, bland_after=50):
        """Minimize ``c @ y`` from the current basic feasible solution."""
        cB = c[self.basis]
        self.d = c - cB @ self.T
        degenerate = 0
        u = self.u
        for _ in range(max_iter):
            self.iterations += 1
            d = self.d
            improving = np.where(self.at_upper, d > tol, d < -tol)
            improving &= ~self.is_basic & ~banned
            cand = np.nonzero(improving)[0]
            if len(cand) == 0:
                return OPTIMAL
            bland = degenerate >= bland_after
            if bland:
                j = cand[0]
            else:
                j = cand[np.argmax(np.abs(d[cand]))]
            s = -1.0 if self.at_upper[j] else 1.0
            col = self.T[:, j] * s
            xB = np.maximum(self.x_B, 0.0)
            uB = u[self.basis]
            ratios = np.full(len(col), np.inf)
            dec = col > tol
            ratios[dec] = xB[dec] / col[dec]
            inc = (col < -tol) & np.isfinite(uB)
            ratios[inc] = np.maximum(uB[inc] - xB[inc], 0.0) / (-col[inc])
            t_best, r_best, to_upper = u[j], -1, False
            if len(col):
                t_min = ratios.min()
                if t_min < t_best:
                    ties = np.nonzero(ratios <= t_min + tol * max(1.0, t_min))[0]
                    if bland:
                        r = ties[np.argmin(np.asarray(self.basis)[ties])]
                    else:
                        r = ties[np.argmax(np.abs(col[ties]))]
                    t_best, r_best, to_upper = t_min, int(r), bool(inc[r])
            if not np.isfinite(t_best):
                return UNBOUNDED
            degenerate = degenerate + 1 if t_best <= tol else 0
            self.x_B -= t_best * col
            if r_best < 0:
                self.at_upper[j] = not self.at_upper[j]
                continue
            entering_value = (u[j] - t_best) if self.at_upper[j] else t_best
            leaving = self.basis[r_best]
            self.at_upper[leaving] = to_upper
            self.at_upper[j] = False
            self.x_B[r_best] = entering_value
            self.pivot(r_best, j)
        return ITERATION_LIMIT

    def values(self, ncols):
        y = np.where(self.at_upper, self.u, 0.0)[:ncols].copy()
        for r, j in enumerate(self.basis):
            if j < ncols:
                y[j] = self.x_B[r]
        return y


def _solve_simplex(lp: LinearProgram, max_iter=None) -> LPSolution:
    M, off, u_s = _standardize(lp)
    ns = M.shape[1]
    c_s = (-lp.c if lp.maximize else lp.c) @ M
    Aub = lp.A_ub @ M
    bub = lp.b_ub - lp.A_ub @ off
    Aeq = lp.A_eq @ M
    beq = lp.b_eq - lp.A_eq @ off

    # row equilibration
    def scale_rows(A, b):
        s = np.max(np.abs(A), axis=1, initial=0.0)
        s[s == 0] = 1.0
        return A / s[:, None], b / s

    Aub, bub = scale_rows(Aub, bub)
    Aeq, beq = scale_rows(Aeq, beq)
    m_ub, m_eq = len(bub), len(beq)
    m = m_ub + m_eq

    for k in range(m_eq):
        if np.allclose(Aeq[k], 0) and abs(beq[k]) > 1e-12:
            return LPSolution(INFEASIBLE, message="empty equality row with nonzero rhs")

    # columns: structural | slacks | artificials.  Rows A x <= b with b < 0
    # share one artificial column (entering it at the most negative row makes
    # every slack nonnegative); equality rows get one artificial each.
    neg = bub < -1e-15
    shared = bool(neg.any())
    n_art = int(shared) + m_eq
    ncols = ns + m_ub + n_art
    A = np.zeros((m, ncols))
    b = np.zeros(m)
    A[:m_ub, :ns] = Aub
    A[np.arange(m_ub), ns + np.arange(m_ub)] = 1.0
    b[:m_ub] = bub
    basis = list(range(ns, ns + m_ub))
    a = ns + m_ub
    if shared:
        A[np.flatnonzero(neg), a] = -1.0
        a += 1
    for k in range(m_eq):
        i = m_ub + k
        sgn = -1.0 if beq[k] < 0 else 1.0
        A[i, :ns] = sgn * Aeq[k]
        b[i] = sgn * beq[k]
        A[i, a] = 1.0
        basis.append(a)
        a += 1

    u = np.concatenate([u_s, np.full(m_ub + n_art, np.inf)])
    if max_iter is None:
        max_iter = 50 * (m + ncols) + 1000
    tab = _Tableau(A, b, u, basis)
    art = np.zeros(ncols, dtype=bool)
    art[ns + m_ub :] = True
    if shared:
        r0 = int(np.argmin(bub))
        tab.d = np.zeros(ncols)
        tab.pivot(r0, ns + m_ub)
        # the pivot column was -1 on every negative row and 0 elsewhere
        level = -bub[r0]
        tab.x_B[:m_ub] = np.where(neg, bub + level, bub)
        tab.x_B[r0] = level

    if n_art:
        status = tab.run(art.astype(float), np.zeros(ncols, dtype=bool), max_iter)
        if status != OPTIMAL:
            return LPSolution(NUMERICAL if status == UNBOUNDED else status, iterations=tab.iterations,
                              message="phase 1 did not converge")
        infeas = sum(tab.x_B[r] for r, j in enumerate(tab.basis) if art[j])
        if infeas > 1e-9 * (1.0 + np.abs(b).max(initial=0.0)):
            return LPSolution(INFEASIBLE, iterations=tab.iterations, message=f"phase 1 residual {infeas:.3g}")
        # drive zero-level artificials out of the basis, dropping redundant rows
        r = 0
        while r < len(tab.basis):
            if not art[tab.basis[r]]:
                r += 1
                continue
            row = np.abs(tab.T[r]) * (~art) * (~tab.is_basic)
            j = int(np.argmax(row))
            if row[j] > 1e-9:
                val = tab.u[j] if tab.at_upper[j] else 0.0
                tab.d = np.zeros(ncols)
                tab.pivot(r, j)
                tab.x_B[r] = val
                tab.at_upper[j] = False
                r += 1
            else:
                tab.is_basic[tab.basis[r]] = False
                tab.T = np.delete(tab.T, r, axis=0)
                tab.x_B = np.delete(tab.x_B, r)
                A = np.delete(A, r, axis=0)
                b = np.delete(b, r)
                del tab.basis[r]

    c_full = np.concatenate([c_s, np.zeros(ncols - ns)])
    status = tab.run(c_full, art, max_iter)
    if status != OPTIMAL:
        return LPSolution(status, iterations=tab.iterations)

    # recompute basic values from the original rows for accuracy
    y_all = tab.values(ncols)
    if len(tab.basis):
        nonbasic = ~tab.is_basic
        rhs = b - A[:, nonbasic] @ y_all[nonbasic]
        try:
            xb = np.linalg.solve(A[:, tab.basis], rhs)
            if np.all(np.isfinite(xb)):
                y_all[tab.basis] = xb
        except np.linalg.LinAlgError:
            log.debug("basis matrix singular; keeping tableau values")
    y = y_all[:ns]
    x = M @ y + off
    return LPSolution(OPTIMAL, x, lp.objective(x), tab.iterations)


# --------------------------------------------------------------------------
# text dump


def _lp_name(s):
    return "".join(ch if ch.isalnum() or ch in "_." else "_" for ch in s)


def _expr(coefs, names):
    terms = [f"{'+' if v >= 0 else '-'} {abs(v):.17g} {names[i]}" for i, v in enumerate(coefs) if v != 0]
    return " ".join(terms) if terms else "0 " + names[0]


def to_lp_text(lp: LinearProgram) -> str:
    """CPLEX-LP text for debugging with external solvers."""
    names = [_lp_name(nm) for nm in lp.names]
    rows = [_lp_name(r) for r in lp.row_names]
    out = ["Maximize" if lp.maximize else "Minimize", f" obj: {_expr(lp.c, names)}", "Subject To"]
    for k in range(len(lp.b_ub)):
        out.append(f" {rows[k]}: {_expr(lp.A_ub[k], names)} <= {lp.b_ub[k]:.17g}")
    for k in range(len(lp.b_eq)):
        out.append(f" {rows[len(lp.b_ub) + k]}: {_expr(lp.A_eq[k], names)} = {lp.b_eq[k]:.17g}")
    out.append("Bounds")
    for nm, lo, hi in zip(names, lp.lb, lp.ub):
        if np.isinf(lo) and np.isinf(hi):
            out.append(f" {nm} free")
        else:
            los = "-inf" if np.isinf(lo) else f"{lo:.17g}"
            his = "+inf" if np.isinf(hi) else f"{hi:.17g}"
            out.append(f" {los} <= {nm} <= {his}")
    out.append("End")
    return "\n".join(out) + "\n"
