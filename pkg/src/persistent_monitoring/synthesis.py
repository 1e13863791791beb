"""Linear programs that synthesize speed controllers.

Single robot (variables: per-cell reciprocal speeds ``alpha_j``):

* ``feasible``: every point satisfies ``sum_j alpha_j K_ij >= delta``.
* ``margin``: maximize ``B`` subject to ``sum_j alpha_j K_ij >= B``.
* ``minmax``: minimize the largest steady-state field ``B`` over all
  candidate peaks, keeping the stability rows.

Multiple robots use normalized profiles (coefficients sum to one, basis of
unit integral) together with a frequency ``f_r`` per robot; stability needs
``sum_r sum_j alpha_rj K_r,ij > p_i``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import lp as lpmod
from .controller import FunctionBasis, ReciprocalProfile, cycle_time
from .coverage import CoveredTask
from .lp import LinearProgram, solve
from .steady_state import peak_table

log = logging.getLogger(__name__)

DELTA_F = 1e-9

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL = "numerical_failure"

_STATUS = {
    lpmod.OPTIMAL: FEASIBLE,
    lpmod.INFEASIBLE: INFEASIBLE,
    lpmod.UNBOUNDED: UNBOUNDED,
    lpmod.NUMERICAL: NUMERICAL,
    lpmod.ITERATION_LIMIT: NUMERICAL,
}


def default_delta(data: CoveredTask):
    return 1e-6 * float(np.max(data.production))


def stability_coefficients(data: CoveredTask, robot=0):
    """``K[i, j] = |cell_j & F(q_i)| - (p_i / c_i) / n`` for one robot."""
    n = data.basis_sizes[robot]
    ratio = data.production / data.consumption[robot]
    return data.overlap_matrix(robot) - ratio[:, None] / n


def multi_stability_coefficients(data: CoveredTask, robot):
    """``K_r[i, j] = c_r(q_i) * n * |cell_j & F_r(q_i)|`` (unit-integral cells)."""
    n = data.basis_sizes[robot]
    return data.consumption[robot][:, None] * n * data.overlap_matrix(robot)


def peak_coefficients(data: CoveredTask, i, robot=0):
    """Rows of candidate-peak coefficients for point ``i``, shape ``(l*l, n)``.

    Always-covered points have none; their steady state is identically 0.
    """
    seg = data.segments(robot, i)
    n = data.basis_sizes[robot]
    if seg.full or seg.empty:
        return np.zeros((0, n))
    return peak_table(seg, data.production[i], data.consumption[robot][i]).reshape(-1, n)


def _alpha_names(n, robot=None):
    if robot is None:
        return [f"alpha_{j + 1}" for j in range(n)]
    return [f"alpha_{robot + 1}_{j + 1}" for j in range(n)]


def _single(data):
    if data.n_robots != 1:
        raise ValueError(f"single-robot program needs 1 robot, got {data.n_robots}")


def build_feasibility_lp(data: CoveredTask, delta=None) -> LinearProgram:
    _single(data)
    delta = default_delta(data) if delta is None else delta
    K = stability_coefficients(data)
    n = K.shape[1]
    return LinearProgram(
        c=np.zeros(n),
        A_ub=-K,
        b_ub=np.full(len(K), -delta),
        lb=data.alpha_lo[0],
        ub=data.alpha_hi[0],
        names=_alpha_names(n),
        row_names=[f"stab_{i + 1}" for i in range(len(K))],
    )


def build_margin_lp(data: CoveredTask) -> LinearProgram:
    _single(data)
    K = stability_coefficients(data)
    m, n = K.shape
    return LinearProgram(
        c=np.r_[np.zeros(n), 1.0],
        A_ub=np.hstack([-K, np.ones((m, 1))]),
        b_ub=np.zeros(m),
        lb=np.r_[data.alpha_lo[0], -np.inf],
        ub=np.r_[data.alpha_hi[0], np.inf],
        names=_alpha_names(n) + ["B"],
        row_names=[f"margin_{i + 1}" for i in range(m)],
        maximize=True,
    )


def build_minmax_lp(data: CoveredTask, delta=None) -> LinearProgram:
    _single(data)
    delta = default_delta(data) if delta is None else delta
    K = stability_coefficients(data)
    m, n = K.shape
    rows, names = [], []
    for i in range(m):
        X = peak_coefficients(data, i)
        rows.append(np.hstack([X, -np.ones((len(X), 1))]))
        ell = int(round(np.sqrt(len(X))))
        names += [f"peak_{i + 1}_{k + 1}_{b}" for k in range(ell) for b in range(ell)]
    rows.append(np.hstack([-K, np.zeros((m, 1))]))
    names += [f"stab_{i + 1}" for i in range(m)]
    A = np.vstack(rows)
    b = np.zeros(len(A))
    b[-m:] = -delta
    return LinearProgram(
        c=np.r_[np.zeros(n), 1.0],
        A_ub=A,
        b_ub=b,
        lb=np.r_[data.alpha_lo[0], 0.0],
        ub=np.r_[data.alpha_hi[0], np.inf],
        names=_alpha_names(n) + ["B"],
        row_names=names,
    )


def build_multi_lp(data: CoveredTask, delta=None, delta_f=DELTA_F, margin=False) -> LinearProgram:
    """Multi-robot program over normalized coefficients and frequencies.

    Variable order: ``alpha_1_*, ..., alpha_N_*, f_1..f_N`` and ``B`` when
    ``margin`` is set.  Each robot's per-cell reciprocal speed is
    ``alpha_rj * n_r / f_r``, so the speed limits become
    ``f_r lo_rj / n_r <= alpha_rj <= f_r hi_rj / n_r``.
    """
    delta = default_delta(data) if delta is None else delta
    N, m = data.n_robots, data.n_points
    sizes = data.basis_sizes
    offs = np.r_[0, np.cumsum(sizes)]
    na = int(offs[-1])
    nv = na + N + (1 if margin else 0)
    names = sum((_alpha_names(sizes[r], r) for r in range(N)), []) + [f"f_{r + 1}" for r in range(N)]
    if margin:
        names.append("B")

    stab = np.zeros((m, nv))
    for r in range(N):
        stab[:, offs[r] : offs[r + 1]] = -multi_stability_coefficients(data, r)
    if margin:
        stab[:, -1] = 1.0
        rhs = -data.production
    else:
        rhs = -(data.production + delta)

    coup, coup_names = [], []
    for r in range(N):
        n = sizes[r]
        for j in range(n):
            lo_row = np.zeros(nv)
            lo_row[offs[r] + j] = -1.0
            lo_row[na + r] = data.alpha_lo[r][j] / n
            hi_row = np.zeros(nv)
            hi_row[offs[r] + j] = 1.0
            hi_row[na + r] = -data.alpha_hi[r][j] / n
            coup += [lo_row, hi_row]
            coup_names += [f"vmax_{r + 1}_{j + 1}", f"vmin_{r + 1}_{j + 1}"]

    A_eq = np.zeros((N, nv))
    for r in range(N):
        A_eq[r, offs[r] : offs[r + 1]] = 1.0

    lb = np.r_[np.zeros(na), np.full(N, delta_f)]
    ub = np.full(na + N, np.inf)
    c = np.zeros(nv)
    if margin:
        lb, ub = np.r_[lb, -np.inf], np.r_[ub, np.inf]
        c[-1] = 1.0
    A_ub = np.vstack([stab] + coup) if coup else stab
    b_ub = np.r_[rhs, np.zeros(len(coup))]
    return LinearProgram(
        c=c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=np.ones(N),
        lb=lb,
        ub=ub,
        names=names,
        row_names=[f"stab_{i + 1}" for i in range(m)] + coup_names + [f"sum_{r + 1}" for r in range(N)],
        maximize=margin,
    )


@dataclass
class SynthesisResult:
    status: str
    profiles: list = field(default_factory=list)
    objective: float = float("nan")
    slacks: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lp: Optional[LinearProgram] = None
    message: str = ""
    unstable_points: list = field(default_factory=list)

    @property
    def feasible(self):
        return self.status == FEASIBLE

    @property
    def stabilizing(self):
        """The program was solved and every stability row is strictly positive."""
        return self.feasible and not self.unstable_points


def _finish(kind, data, prog, method, tol):
    sol = solve(prog, method=method, tol=tol)
    status = _STATUS.get(sol.status, NUMERICAL)
    res = SynthesisResult(status, lp=prog, message=sol.message)
    if status != FEASIBLE:
        if status == INFEASIBLE:
            res.unstable_points = bottleneck_points(data)
        return res
    x = sol.x
    if kind == "multi":
        N, sizes = data.n_robots, data.basis_sizes
        offs = np.r_[0, np.cumsum(sizes)]
        na = int(offs[-1])
        res.profiles = [
            ReciprocalProfile(x[offs[r] : offs[r + 1]], normalized=True, frequency=float(x[na + r]))
            for r in range(N)
        ]
        lhs = sum(
            multi_stability_coefficients(data, r) @ res.profiles[r].alpha for r in range(N)
        )
        res.slacks = lhs - data.production
    else:
        n = data.basis_sizes[0]
        res.profiles = [ReciprocalProfile(x[:n])]
        res.slacks = stability_coefficients(data) @ x[:n]
    res.objective = float(x[-1]) if prog.names[-1] == "B" else 0.0
    # a margin optimum that is not positive: report the rows that pin it
    worst = float(np.min(res.slacks))
    if worst <= 0:
        tight = res.slacks <= worst + 1e-9 * (1.0 + abs(worst))
        res.unstable_points = [int(i) for i in np.flatnonzero(tight)]
    return res


def synthesize(data: CoveredTask, objective="margin", method="simplex", delta=None,
               delta_f=DELTA_F, tol=1e-8) -> SynthesisResult:
    """Build and solve one of the controller programs.

    Parameters
    ----------
    objective : {"feasible", "margin", "minmax", "multi", "multi-margin"}
    method : {"simplex", "highs"}
        Embedded solver or scipy's HiGHS.

    Returns
    -------
    SynthesisResult
        ``slacks`` holds the per-point stability row value:
        ``tau - (p / c) T`` (seconds) for a single robot and
        ``sum_r c_r tau_r / T_r - p`` (field units per second) for several
        robots.  ``objective`` is the margin ``B`` or peak bound in the same
        units (0 for plain feasibility).
    """
    if objective == "feasible":
        return _finish("single", data, build_feasibility_lp(data, delta), method, tol)
    if objective == "margin":
        return _finish("single", data, build_margin_lp(data), method, tol)
    if objective == "minmax":
        return _finish("single", data, build_minmax_lp(data, delta), method, tol)
    if objective in ("multi", "multi-margin"):
        prog = build_multi_lp(data, delta, delta_f, margin=objective == "multi-margin")
        return _finish("multi", data, prog, method, tol)
    raise ValueError(f"unknown objective {objective!r}")


def bottleneck_points(data: CoveredTask, method="simplex"):
    """Points that no admissible controller stabilizes, ranked by how badly.

    Solves the margin program and returns the indices whose stability row
    is binding at a non-positive optimum (empty if the task is feasible).
    """
    multi = data.n_robots > 1
    prog = build_multi_lp(data, margin=True) if multi else build_margin_lp(data)
    sol = solve(prog, method=method)
    if not sol.success or sol.x[-1] > 0:
        return [i for i in range(data.n_points)
                if all(data.coverage[r][i].empty for r in range(data.n_robots))]
    rows = prog.A_ub[: data.n_points] @ sol.x - prog.b_ub[: data.n_points]
    return [int(i) for i in np.flatnonzero(rows >= -1e-9 * (1 + abs(sol.x[-1])))]


def robustness_bound(result: SynthesisResult, data: CoveredTask):
    """Per-point production offsets that provably keep the field stable.

    ``eps_i = B c_i / T`` for a single-robot margin result; the scalar bound
    is the minimum over points.
    """
    if result.status != FEASIBLE or not result.profiles:
        raise ValueError("robustness bound needs a solved margin program")
    B = result.objective
    if B < 0:
        raise ValueError(f"margin {B:.6g} is negative; no robustness guarantee")
    T = cycle_time(result.profiles[0])
    return B * data.consumption[0] / T


# --------------------------------------------------------------------------
# general bases through sampled constraints


@dataclass
class SampledResult:
    status: str
    alpha: np.ndarray
    basis: FunctionBasis
    xi: float
    objective: float
    rounds: int

    def inverse_speed(self, theta):
        return self.basis.evaluate(theta) @ self.alpha


def synthesize_sampled(data: CoveredTask, basis: FunctionBasis, inv_lo, inv_hi, n_samples=200,
                       xi=0.0, xi_step=None, check_resolution=10_000, max_rounds=30,
                       method="simplex"):
    """Margin program for an arbitrary basis with speed limits enforced at samples.

    ``inv_lo(theta)`` / ``inv_hi(theta)`` are the reciprocal speed limits in
    seconds per unit theta.  The limits are imposed at ``n_samples`` evenly
    spaced positions, tightened by ``xi``; if a dense check on
    ``check_resolution`` positions finds a violation, ``xi`` is increased and
    the program re-solved.
    """
    _single(data)
    n = basis.n
    p = data.production
    c = data.consumption[0]
    K = np.zeros((data.n_points, n))
    whole = basis.integrals(0.0, 1.0 - 1e-15)
    for i, cov in enumerate(data.coverage[0]):
        if cov.full:
            cov_int = whole
        else:
            cov_int = sum((basis.integrals(x, y) for x, y in cov.intervals), np.zeros(n))
        K[i] = cov_int - p[i] / c[i] * whole

    ts = np.arange(n_samples) / n_samples
    Bs = basis.evaluate(ts)
    lo_s, hi_s = np.asarray(inv_lo(ts), float), np.asarray(inv_hi(ts), float)
    tc = (np.arange(check_resolution) + 0.5) / check_resolution
    Bc = basis.evaluate(tc)
    lo_c, hi_c = np.asarray(inv_lo(tc), float), np.asarray(inv_hi(tc), float)
    span = float(np.max(hi_s - lo_s))
    xi_step = 1e-3 * span if xi_step is None else xi_step

    for rounds in range(1, max_rounds + 1):
        m = len(K)
        A = np.vstack([
            np.hstack([-K, np.ones((m, 1))]),
            np.hstack([Bs, np.zeros((n_samples, 1))]),
            np.hstack([-Bs, np.zeros((n_samples, 1))]),
        ])
        b = np.r_[np.zeros(m), hi_s - xi, -(lo_s + xi)]
        prog = LinearProgram(
            c=np.r_[np.zeros(n), 1.0], A_ub=A, b_ub=b,
            lb=np.full(n + 1, -np.inf), ub=np.full(n + 1, np.inf),
            names=[f"alpha_{j + 1}" for j in range(n)] + ["B"], maximize=True,
        )
        sol = solve(prog, method=method)
        status = _STATUS.get(sol.status, NUMERICAL)
        if status != FEASIBLE:
            return SampledResult(status, np.full(n, np.nan), basis, xi, float("nan"), rounds)
        alpha = sol.x[:n]
        v = Bc @ alpha
        if np.all(v >= lo_c - 1e-12) and np.all(v <= hi_c + 1e-12):
            return SampledResult(FEASIBLE, alpha, basis, xi, float(sol.x[-1]), rounds)
        xi = max(2 * xi, xi_step)
        log.info("sampled bounds violated between samples; tightening xi to %.3g", xi)
    return SampledResult(NUMERICAL, alpha, basis, xi, float(sol.x[-1]), max_rounds)
