"""Extended convex lifting: membership tests, the change of variables, and
non-degeneracy certification.

The lifted set collects triples (K, gamma, X) with X > 0 satisfying

    gamma >= tr(Q2 X) + tr(R2 K X K^T),
    A_K X + X A_K^T + X S_K X / beta^2 + W <= 0   (matrix inequality),

and the convex set collects (gamma, X, Y) with the same trace bound in the
variables Y = K X and the block matrix

    [[A X + X A^T + B Y + Y^T B^T + W,  X Qinf^{1/2},  Y^T Rinf^{1/2}],
     [Qinf^{1/2} X,                    -beta^2 I,      0            ],
     [Rinf^{1/2} Y,                     0,            -beta^2 I     ]]  <= 0.

The pair (K, gamma, X) <-> (gamma, X, K X) is a smooth bijection between
the two sets (a Schur-complement identity), which is what certifies that
stationary points of the mixed cost are global minimizers.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cost import _boundary_solution, _stabilizing_X, eval_cost_2ch
from .errors import DimensionMismatch, InfeasiblePolicyError
from .linalg import as_symmetric, min_eig_sym, symmetrize
from .problem import MixedProblem, validate_policy

__all__ = [
    "LiftedPoint",
    "CvxPoint",
    "MembershipReport",
    "RoundtripReport",
    "member_lifted",
    "member_cvx",
    "phi",
    "psi",
    "certify_nondegenerate",
    "lift_solution_roundtrip",
    "default_tol",
]


def _check_spd(X, label="X"):
    X = as_symmetric(X, label)
    w = np.linalg.eigvalsh(X)
    if w.min() <= 1e-10 * (1.0 + max(w.max(), 0.0)):
        raise ValueError(f"{label} must be positive definite")
    return X


@dataclass(frozen=True)
class LiftedPoint:
    """(K, gamma, X) candidate for the lifted set; X must be SPD."""

    K: np.ndarray
    gamma: float
    X: np.ndarray

    def __post_init__(self):
        K = np.atleast_2d(np.asarray(self.K, dtype=float))
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "X", _check_spd(self.X))
        if self.X.shape[0] != K.shape[1]:
            raise DimensionMismatch("dimension mismatch between K and X")


@dataclass(frozen=True)
class CvxPoint:
    """(gamma, X, Y) candidate for the convex set; X must be SPD."""

    gamma: float
    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        Y = np.atleast_2d(np.asarray(self.Y, dtype=float))
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "X", _check_spd(self.X))
        if self.X.shape[0] != Y.shape[1]:
            raise DimensionMismatch("dimension mismatch between Y and X")


@dataclass(frozen=True)
class MembershipReport:
    member: bool
    trace_slack: float
    max_eig: float
    tol: float

    def __bool__(self):
        return self.member


def default_tol(problem: MixedProblem) -> float:
    return 1e-8 * (1.0 + float(np.linalg.norm(problem.W, "fro")))


def member_lifted(problem: MixedProblem, p: LiftedPoint, tol: Optional[float] = None) -> MembershipReport:
    """Membership in the lifted set, with the margins of both conditions."""
    if tol is None:
        tol = default_tol(problem)
    K = validate_policy(problem, p.K)
    if p.X.shape != (problem.n, problem.n):
        raise DimensionMismatch("dimension mismatch: X")
    slack = p.gamma - float(
        np.trace(problem.Q2 @ p.X) + np.trace(problem.R2 @ K @ p.X @ K.T)
    )
    A_K = problem.closed_loop(K)
    binv2 = 0.0 if np.isinf(problem.beta) else problem.beta**-2
    R = symmetrize(
        A_K @ p.X + p.X @ A_K.T + binv2 * (p.X @ problem.S_of(K) @ p.X) + problem.W
    )
    max_eig = float(np.linalg.eigvalsh(R).max())
    return MembershipReport(
        member=(slack >= -tol) and (max_eig <= tol),
        trace_slack=slack,
        max_eig=max_eig,
        tol=tol,
    )


def _cvx_block(problem: MixedProblem, X, Y) -> np.ndarray:
    n, m = problem.n, problem.m
    beta2 = problem.beta**2
    Qh = problem.Qinf_sqrt
    Rh = problem.Rinf_sqrt
    top = problem.A @ X + X @ problem.A.T + problem.B @ Y + Y.T @ problem.B.T + problem.W
    F = np.zeros((2 * n + m, 2 * n + m))
    F[:n, :n] = symmetrize(top)
    F[:n, n : 2 * n] = X @ Qh
    F[n : 2 * n, :n] = Qh @ X
    F[:n, 2 * n :] = Y.T @ Rh
    F[2 * n :, :n] = Rh @ Y
    F[n : 2 * n, n : 2 * n] = -beta2 * np.eye(n)
    F[2 * n :, 2 * n :] = -beta2 * np.eye(m)
    return F


def member_cvx(problem: MixedProblem, q: CvxPoint, tol: Optional[float] = None) -> MembershipReport:
    """Membership in the convex set, via the assembled block matrix."""
    if tol is None:
        tol = default_tol(problem)
    if q.X.shape != (problem.n, problem.n) or q.Y.shape != (problem.m, problem.n):
        raise DimensionMismatch("dimension mismatch: X or Y")
    if np.isinf(problem.beta):
        raise ValueError("convex-set membership requires finite beta")
    YXinv_Yt = q.Y @ np.linalg.solve(q.X, q.Y.T)
    slack = q.gamma - float(
        np.trace(problem.Q2 @ q.X) + np.trace(problem.R2 @ YXinv_Yt)
    )
    F = _cvx_block(problem, q.X, q.Y)
    max_eig = float(np.linalg.eigvalsh(F).max())
    return MembershipReport(
        member=(slack >= -tol) and (max_eig <= tol),
        trace_slack=slack,
        max_eig=max_eig,
        tol=tol,
    )


def phi(p: LiftedPoint) -> CvxPoint:
    """Change of variables (K, gamma, X) -> (gamma, X, K X)."""
    return CvxPoint(gamma=p.gamma, X=p.X, Y=p.K @ p.X)


def psi(q: CvxPoint) -> LiftedPoint:
    """Inverse change of variables (gamma, X, Y) -> (Y X^{-1}, gamma, X)."""
    cond = np.linalg.cond(q.X)
    if not np.isfinite(cond) or cond > 1e12:
        raise ValueError(f"X numerically singular (condition number {cond:.3e})")
    K = np.linalg.solve(q.X.T, q.Y.T).T
    return LiftedPoint(K=K, gamma=q.gamma, X=q.X)


def certify_nondegenerate(problem: MixedProblem, K):
    """Witness that (K, J_mix(K)) projects from the lifted set.

    For any feasible K the stabilizing Riccati solution X_K is such a
    witness (the matrix inequality holds with equality). Returns
    (report, X_K).
    """
    try:
        j, X = eval_cost_2ch(problem, K)
    except InfeasiblePolicyError:
        raise
    rep = member_lifted(problem, LiftedPoint(K=K, gamma=j, X=X))
    return rep, X


@dataclass(frozen=True)
class RoundtripReport:
    ok: bool
    policy_error: float
    member_lifted: bool
    member_cvx: bool
    gamma: float


def lift_solution_roundtrip(problem: MixedProblem, K, tol: float = 1e-10) -> RoundtripReport:
    """Lift a (possibly boundary) policy into the convex set and pull it back.

    Builds (gamma, X, Y) = phi(K, J(K), X_K) with the stabilizing or
    minimal Riccati solution, asserts membership on both sides, and
    recovers K = Y X^{-1}.
    """
    K = validate_policy(problem, K)
    j, X, _ = _boundary_solution(problem, K)
    p = LiftedPoint(K=K, gamma=j, X=X)
    in_lft = member_lifted(problem, p)
    q = phi(p)
    in_cvx = member_cvx(problem, q)
    K_rec = psi(q).K
    err = float(np.abs(K_rec - K).max() / (1.0 + np.abs(K).max()))
    return RoundtripReport(
        ok=bool(in_lft) and bool(in_cvx) and err <= tol,
        policy_error=err,
        member_lifted=bool(in_lft),
        member_cvx=bool(in_cvx),
        gamma=j,
    )
