"""Mixed cost, H2 norm, boundary extension, and exact policy gradients.

The mixed cost of a feasible policy K is tr((Q2 + K^T R2 K) X_K) with X_K
the stabilizing solution of

    A_K X + X A_K^T + X S_K X / beta^2 + W = 0,      S_K = Qinf + K^T Rinf K,

an upper bound on the squared H2 norm that encodes the H-infinity
constraint. On single-channel instances the same value equals tr(P_K W)
through the dual equation, which is cheaper to differentiate. The boundary
extension evaluates the minimal solution where the constraint saturates.
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    InfeasiblePolicyError,
    NoStabilizingSolution,
    SingleChannelError,
    UnstableSystemError,
)
from .hinf import close_loop_channel, hinf_norm, is_feasible
from .linalg import (
    is_hurwitz,
    min_eig_sym,
    solve_lyapunov,
    solve_lyapunov_transposed,
    symmetrize,
)
from .problem import MixedProblem, validate_policy
from .riccati import BOUNDARY_TAU, RiccatiSolution, _solve_dual_any

__all__ = [
    "CostReport",
    "OptimalityReport",
    "eval_cost_2ch",
    "eval_cost_1ch",
    "eval_cost_boundary",
    "h2_norm",
    "grad_2ch",
    "grad_1ch",
    "fd_gradient",
    "check_optimality_2ch",
    "evaluate_policy",
    "extract_alpha",
]


def _beta_inv2(beta: float) -> float:
    return 0.0 if math.isinf(beta) else beta**-2


def _check_psd_solution(X, context: str):
    scale = 1.0 + float(np.abs(X).max())
    if min_eig_sym(X) < -1e-8 * scale:
        raise InfeasiblePolicyError(f"infeasible policy: {context} solution indefinite")


def _stabilizing_X(problem: MixedProblem, K, allow_marginal: bool = True):
    """Stabilizing solution of the two-channel Riccati equation for K.

    Raises InfeasiblePolicyError when K is outside the feasible set. When
    the closed loop of the solution is within BOUNDARY_TAU of the axis the
    policy is marginal: either re-solve for the minimal solution
    (allow_marginal) or refuse.
    """
    K = validate_policy(problem, K)
    A_K = problem.closed_loop(K)
    if not is_hurwitz(A_K):
        raise InfeasiblePolicyError("infeasible policy: closed loop unstable")
    D = _beta_inv2(problem.beta) * problem.S_of(K)
    try:
        sol = _solve_dual_any(A_K.T, D, problem.W, "stabilizing")
    except NoStabilizingSolution as exc:
        raise InfeasiblePolicyError(f"infeasible policy: {exc}") from exc
    _check_psd_solution(sol.X, "Riccati")
    if sol.closed_loop_abscissa > -BOUNDARY_TAU:
        if not allow_marginal:
            raise InfeasiblePolicyError(
                "infeasible policy: marginal (H-infinity constraint saturated)"
            )
        sol = _solve_dual_any(A_K.T, D, problem.W, "minimal")
    return K, sol


def _stabilizing_P(problem: MixedProblem, K, allow_marginal: bool = True):
    """Stabilizing solution of the single-channel dual Riccati equation."""
    K = validate_policy(problem, K)
    A_K = problem.closed_loop(K)
    if not is_hurwitz(A_K):
        raise InfeasiblePolicyError("infeasible policy: closed loop unstable")
    G = _beta_inv2(problem.beta) * problem.W
    C = symmetrize(problem.Q2 + K.T @ problem.R2 @ K)
    try:
        sol = _solve_dual_any(A_K, G, C, "stabilizing")
    except NoStabilizingSolution as exc:
        raise InfeasiblePolicyError(f"infeasible policy: {exc}") from exc
    _check_psd_solution(sol.X, "Riccati")
    if sol.closed_loop_abscissa > -BOUNDARY_TAU:
        if not allow_marginal:
            raise InfeasiblePolicyError(
                "infeasible policy: marginal (H-infinity constraint saturated)"
            )
        sol = _solve_dual_any(A_K, G, C, "minimal")
    return K, sol


def _mixed_trace(problem: MixedProblem, K, X) -> float:
    return float(np.trace((problem.Q2 + K.T @ problem.R2 @ K) @ X))


def eval_cost_2ch(problem: MixedProblem, K):
    """Two-channel mixed cost. Returns (j_mix, X_K).

    Marginally feasible policies are evaluated through the minimal solution
    so that line searches see the (continuous) boundary value instead of a
    spurious failure.
    """
    K, sol = _stabilizing_X(problem, K, allow_marginal=True)
    return _mixed_trace(problem, K, sol.X), sol.X


def eval_cost_1ch(problem: MixedProblem, K):
    """Single-channel mixed cost tr(P_K W). Returns (j_mix, P_K)."""
    if not problem.single_channel:
        raise SingleChannelError("not single-channel: Q2 != Qinf or R2 != Rinf")
    K, sol = _stabilizing_P(problem, K, allow_marginal=True)
    return float(np.trace(sol.X @ problem.W)), sol.X


def _boundary_solution(problem: MixedProblem, K):
    """Minimal-solution evaluation on the closure of the feasible set.

    Returns (j, X, norm). Raises UnstableSystemError for unstable closed
    loops and InfeasiblePolicyError beyond the closure tolerance band.
    """
    K = validate_policy(problem, K)
    A_K = problem.closed_loop(K)
    if not is_hurwitz(A_K):
        raise UnstableSystemError("unstable: closed loop is not Hurwitz")
    norm = hinf_norm(close_loop_channel(problem, K, "hinf"), tol=1e-9)
    if norm > problem.beta * (1.0 + 1e-6):
        raise InfeasiblePolicyError(
            f"outside closure: H-infinity norm {norm:.9g} exceeds beta {problem.beta:.9g}"
        )
    try:
        D = _beta_inv2(problem.beta) * problem.S_of(K)
        sol = _solve_dual_any(A_K.T, D, problem.W, "minimal")
    except NoStabilizingSolution:
        # numerically just past beta inside the tolerance band: evaluate at
        # the exactly-saturating level instead
        D = _beta_inv2(norm) * problem.S_of(K)
        sol = _solve_dual_any(A_K.T, D, problem.W, "minimal")
    return _mixed_trace(problem, K, sol.X), sol.X, norm


def eval_cost_boundary(problem: MixedProblem, K) -> float:
    """Mixed cost extended to the closure of the feasible set.

    Interior policies reproduce eval_cost_2ch; policies saturating the
    constraint are evaluated through the minimal Riccati solution.
    """
    j, _, _ = _boundary_solution(problem, K)
    return j


def h2_norm(problem: MixedProblem, K) -> float:
    """Closed-loop H2 norm of the performance channel (Lyapunov trace)."""
    K = validate_policy(problem, K)
    A_K = problem.closed_loop(K)
    if not is_hurwitz(A_K):
        raise UnstableSystemError("unstable: closed loop is not Hurwitz")
    Xhat = solve_lyapunov(A_K, problem.W)
    return math.sqrt(max(_mixed_trace(problem, K, Xhat), 0.0))


def grad_2ch(problem: MixedProblem, K) -> np.ndarray:
    """Exact gradient of the two-channel mixed cost.

    grad = 2 (R2 K + B^T G + Rinf K X G / beta^2) X, with G solving the
    adjoint Lyapunov equation for the shifted closed loop
    A_K + X S_K / beta^2. Refuses marginal policies, where the formula is
    not valid.
    """
    K, sol = _stabilizing_X(problem, K, allow_marginal=False)
    X = sol.X
    binv2 = _beta_inv2(problem.beta)
    A_tilde = problem.closed_loop(K) + binv2 * (X @ problem.S_of(K))
    G = solve_lyapunov_transposed(
        A_tilde, symmetrize(problem.Q2 + K.T @ problem.R2 @ K)
    )
    return 2.0 * (
        problem.R2 @ K + problem.B.T @ G + binv2 * (problem.Rinf @ K @ X @ G)
    ) @ X


def grad_1ch(problem: MixedProblem, K) -> np.ndarray:
    """Exact gradient through the single-channel dual equation."""
    if not problem.single_channel:
        raise SingleChannelError("not single-channel: Q2 != Qinf or R2 != Rinf")
    K, sol = _stabilizing_P(problem, K, allow_marginal=False)
    P = sol.X
    A_hat = problem.closed_loop(K) + _beta_inv2(problem.beta) * (problem.W @ P)
    Lam = solve_lyapunov(A_hat, problem.W)
    return 2.0 * (problem.R2 @ K + problem.B.T @ P) @ Lam


def fd_gradient(problem: MixedProblem, K, step: float) -> np.ndarray:
    """Central finite differences of the two-channel cost, entry by entry.

    Oracle for the analytic gradients; O(m n) cost evaluations. Raises when
    a perturbed policy exits the feasible set.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    K = validate_policy(problem, K)
    grad = np.zeros_like(K)
    for i in range(K.shape[0]):
        for j in range(K.shape[1]):
            Kp = K.copy()
            Kp[i, j] += step
            Km = K.copy()
            Km[i, j] -= step
            try:
                jp, _ = eval_cost_2ch(problem, Kp)
                jm, _ = eval_cost_2ch(problem, Km)
            except InfeasiblePolicyError as exc:
                raise ValueError(f"step too large: {exc}") from exc
            grad[i, j] = (jp - jm) / (2.0 * step)
    return grad


def extract_alpha(problem: MixedProblem) -> float:
    """Recover alpha with Rinf = alpha^2 R2, verifying the relation entrywise."""
    alpha2 = float(np.trace(problem.Rinf) / np.trace(problem.R2))
    scale = 1.0 + float(np.abs(problem.Rinf).max())
    if np.abs(problem.Rinf - alpha2 * problem.R2).max() > 1e-10 * scale:
        raise ValueError("R_infinity not a scalar multiple of R_2")
    return math.sqrt(alpha2)


@dataclass(frozen=True)
class OptimalityReport:
    """Residuals of the two-channel global-optimality conditions."""

    residual_gain: float
    residual_riccati: float
    residual_lyapunov: float
    tilde_hurwitz: bool
    alpha: float

    @property
    def max_residual(self) -> float:
        return max(self.residual_gain, self.residual_riccati, self.residual_lyapunov)


def check_optimality_2ch(problem: MixedProblem, K, alpha: Optional[float] = None) -> OptimalityReport:
    """Evaluate the stationarity system for the two-channel design at K.

    Requires Rinf = alpha^2 R2. Residuals near zero (together with the
    shifted closed loop being Hurwitz) certify global optimality.
    """
    if alpha is None:
        alpha = extract_alpha(problem)
    else:
        scale = 1.0 + float(np.abs(problem.Rinf).max())
        if np.abs(problem.Rinf - alpha**2 * problem.R2).max() > 1e-10 * scale:
            raise ValueError("R_infinity not a scalar multiple of R_2")
    K, sol = _stabilizing_X(problem, K, allow_marginal=False)
    X = sol.X
    binv2 = _beta_inv2(problem.beta)
    A_K = problem.closed_loop(K)
    S_K = problem.S_of(K)
    A_tilde = A_K + binv2 * (X @ S_K)
    QR = symmetrize(problem.Q2 + K.T @ problem.R2 @ K)
    G = solve_lyapunov_transposed(A_tilde, QR)
    gain_target = -np.linalg.solve(
        problem.R2, problem.B.T @ G
    ) @ np.linalg.inv(np.eye(problem.n) + binv2 * alpha**2 * (X @ G))
    res_gain = float(np.linalg.norm(K - gain_target, "fro"))
    res_riccati = float(
        np.linalg.norm(A_K @ X + X @ A_K.T + binv2 * (X @ S_K @ X) + problem.W, "fro")
    )
    res_lyap = float(np.linalg.norm(A_tilde.T @ G + G @ A_tilde + QR, "fro"))
    return OptimalityReport(
        residual_gain=res_gain,
        residual_riccati=res_riccati,
        residual_lyapunov=res_lyap,
        tilde_hurwitz=is_hurwitz(A_tilde),
        alpha=alpha,
    )


@dataclass(frozen=True)
class CostReport:
    """Full evaluation of one policy."""

    j_mix: float
    grad: Optional[np.ndarray]
    grad_norm: float
    h2_norm: float
    hinf_norm: float
    feasible: bool
    marginal: bool
    X_K: Optional[np.ndarray]


def evaluate_policy(problem: MixedProblem, K) -> CostReport:
    """Evaluate cost, gradient, norms, and feasibility for one policy."""
    K = validate_policy(problem, K)
    rep = is_feasible(problem, K)
    if not rep.stable:
        return CostReport(math.nan, None, math.nan, math.nan, math.inf, False, False, None)
    h2 = h2_norm(problem, K)
    if not rep.feasible:
        return CostReport(math.nan, None, math.nan, h2, rep.hinf_norm, False, False, None)
    j, X = eval_cost_2ch(problem, K)
    grad = None
    grad_norm = math.nan
    if not rep.marginal:
        grad = grad_2ch(problem, K)
        grad_norm = float(np.linalg.norm(grad, "fro"))
    return CostReport(j, grad, grad_norm, h2, rep.hinf_norm, True, rep.marginal, X)
