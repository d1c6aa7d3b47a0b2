"""Relaxed CLF-CBF quadratic program and the dense active-set solver
behind it.

Problems are stated as  min v^T H v + c_lin^T v  s.t.  A v <= b  with H
symmetric positive definite. The controller instance has decision
variables v = [u; phi] with H = blkdiag(R, p): the CLF row is relaxed by
phi, the CBF and box rows are hard.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import QpInfeasible
from .model import ClassKScale

KKT_TOL = 1e-8
SOLVE_TOL = 1e-9


@dataclass
class QpParams:
    p: float = 2.0
    dt: float = 0.01
    alpha_scale: float = 1.0
    gamma_scale: float = 10.0

    def __post_init__(self):
        if self.p <= 0 or self.dt <= 0:
            raise ValueError("p and dt must be positive")


@dataclass
class QpProblem:
    H: np.ndarray
    c_lin: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.H = np.asarray(self.H, float)
        self.c_lin = np.asarray(self.c_lin, float)
        self.A = np.asarray(self.A, float)
        self.b = np.asarray(self.b, float)
        if not np.allclose(self.H, self.H.T, atol=1e-12):
            raise ValueError("H must be symmetric")

    @property
    def d(self):
        return self.H.shape[0]

    @property
    def k(self):
        return self.A.shape[0]

    def objective(self, v):
        v = np.asarray(v, float)
        return float(v @ self.H @ v + self.c_lin @ v)


@dataclass
class QpSolution:
    v_star: np.ndarray
    active_set: tuple
    multipliers: np.ndarray
    status: str  # "Optimal" or "Infeasible"
    objective: float = np.nan
    iterations: int = 0


def kkt_residuals(prob: QpProblem, v, multipliers):
    """KKT residuals for  min v^T H v + c^T v  s.t.  A v <= b.

    Stationarity uses 2 H v + c + A^T lam = 0.
    """
    v = np.asarray(v, float)
    lam = np.asarray(multipliers, float)
    slack = prob.A @ v - prob.b
    return {
        "stationarity": float(np.linalg.norm(2.0 * prob.H @ v + prob.c_lin + prob.A.T @ lam)),
        "primal": float(max(0.0, slack.max())) if slack.size else 0.0,
        "dual": float(max(0.0, -(lam.min()))) if lam.size else 0.0,
        "complementarity": float(np.max(np.abs(lam * slack))) if lam.size else 0.0,
    }


def kkt_ok(prob, v, multipliers, tol=KKT_TOL):
    res = kkt_residuals(prob, v, multipliers)
    return all(r <= tol for r in res.values())


def _phase1_start(prob: QpProblem, tol):
    """LP feasibility phase: minimize the worst constraint violation."""
    d, k = prob.d, prob.k
    # variables (v, t): minimize t s.t. A v - t <= b, t >= -1
    c = np.zeros(d + 1)
    c[-1] = 1.0
    A_ub = np.hstack([prob.A, -np.ones((k, 1))])
    res = linprog(c, A_ub=A_ub, b_ub=prob.b,
                  bounds=[(None, None)] * d + [(-1.0, None)], method="highs")
    if not res.success or res.x[-1] > 1e-7:
        return None
    return res.x[:d]


def solve_qp(prob: QpProblem, tol=SOLVE_TOL, max_iter=200):
    """Primal active-set method with smallest-index tie-breaking.

    Starts from the unconstrained minimum when feasible, otherwise from
    an LP feasibility phase. Every Optimal result satisfies the KKT
    conditions at KKT_TOL (verified before returning).
    """
    d, k = prob.d, prob.k
    P = 2.0 * prob.H
    q = prob.c_lin

    v = np.linalg.solve(P, -q)
    if prob.k and np.any(prob.A @ v > prob.b + tol):
        v = _phase1_start(prob, tol)
        if v is None:
            return QpSolution(v_star=np.full(d, np.nan), active_set=(),
                              multipliers=np.zeros(k), status="Infeasible")
    # working set: maximal independent subset of constraints active at v
    W: list[int] = []
    slack = prob.A @ v - prob.b
    for i in range(k):
        if slack[i] >= -1e-9:
            cand = prob.A[W + [i]]
            if np.linalg.matrix_rank(cand) == len(W) + 1:
                W.append(i)

    lam_full = np.zeros(k)
    for it in range(1, max_iter + 1):
        g = P @ v + q
        nW = len(W)
        KKT = np.zeros((d + nW, d + nW))
        KKT[:d, :d] = P
        if nW:
            AW = prob.A[W]
            KKT[:d, d:] = AW.T
            KKT[d:, :d] = AW
        rhs = np.concatenate([-g, np.zeros(nW)])
        sol = np.linalg.solve(KKT, rhs)
        p_dir = sol[:d]
        lam_W = sol[d:]

        if np.linalg.norm(p_dir, np.inf) <= tol:
            lam_full[:] = 0.0
            lam_full[W] = lam_W
            neg = [i for i, li in zip(W, lam_W) if li < -tol]
            if not neg:
                sol_out = QpSolution(v_star=v, active_set=tuple(sorted(W)),
                                     multipliers=lam_full.copy(), status="Optimal",
                                     objective=prob.objective(v), iterations=it)
                if not kkt_ok(prob, v, lam_full):
                    raise RuntimeError("active-set solver produced a non-KKT point")
                return sol_out
            W.remove(min(neg))  # Bland's rule
            continue

        # step to the nearest blocking constraint
        alpha = 1.0
        blocking = -1
        for i in range(k):
            if i in W:
                continue
            ai_p = prob.A[i] @ p_dir
            if ai_p > tol:
                ai = (prob.b[i] - prob.A[i] @ v) / ai_p
                if ai < alpha - 1e-15:
                    alpha = max(ai, 0.0)
                    blocking = i
        v = v + alpha * p_dir
        if blocking >= 0:
            W.append(blocking)
            W.sort()
    raise RuntimeError("active-set solver failed to converge")


def build_qp(sys, safeset, Q, cost, params: QpParams, x):
    """Assemble the relaxed CLF-CBF QP at state x.

    Rows: CBF (hard), CLF relaxed by phi, then the 2m input-box rows.
    """
    x = np.asarray(x, float)
    Q = np.asarray(Q, float)
    gh = safeset.grad(x)
    f = np.asarray(sys.drift(x), float)
    g = np.asarray(sys.input_map(x), float)
    h = safeset.h(x)
    Lfh = float(gh @ f)
    Lgh = gh @ g
    gV = 2.0 * (Q @ x)
    V = float(x @ Q @ x)
    LfV = float(gV @ f)
    LgV = gV @ g
    alpha = ClassKScale(params.alpha_scale)
    gamma = ClassKScale(params.gamma_scale)

    m = sys.m
    d = m + 1
    H = np.zeros((d, d))
    H[:m, :m] = np.diag(cost.r_diag)
    H[m, m] = params.p
    A = np.zeros((2 + 2 * m, d))
    b = np.zeros(2 + 2 * m)
    A[0, :m] = -Lgh
    b[0] = Lfh + alpha(h)
    A[1, :m] = LgV
    A[1, m] = -1.0
    b[1] = -LfV - gamma(V)
    for i in range(m):
        A[2 + 2 * i, i] = 1.0
        b[2 + 2 * i] = sys.u_max
        A[3 + 2 * i, i] = -1.0
        b[3 + 2 * i] = sys.u_max
    return QpProblem(H=H, c_lin=np.zeros(d), A=A, b=b)


def qp_controller(sys, safeset, Q, cost, params: QpParams, x):
    """Solve the QP at x and return the input block (applied zero-order hold)."""
    prob = build_qp(sys, safeset, Q, cost, params, x)
    sol = solve_qp(prob)
    if sol.status != "Optimal":
        raise QpInfeasible(f"CLF-CBF QP infeasible at x={np.asarray(x, float)}")
    return sol.v_star[: sys.m], sol
