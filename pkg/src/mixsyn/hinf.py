"""H-infinity norm computation, feasibility certification, and beta*.

The norm is computed by bisection, testing each candidate level gamma
through the imaginary-axis eigenvalues of the Hamiltonian

    H(gamma) = [[A^T, C^T C / gamma^2], [-B B^T, -A]] :

gamma exceeds the norm exactly when H(gamma) has no eigenvalue on the
axis. Feasibility of a policy additionally produces the stabilizing
Riccati solution as a certificate.
"""
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .errors import (
    AssumptionError,
    DimensionMismatch,
    NoStabilizingSolution,
    UnstableSystemError,
)
from .linalg import is_hurwitz, min_eig_sym
from .problem import MixedProblem, validate_policy
from .riccati import RiccatiSolution, _solve_dual_any, solve_care_primal

__all__ = [
    "Ssm",
    "close_loop_channel",
    "hinf_norm",
    "is_feasible",
    "FeasibilityReport",
    "beta_star",
]

AXIS_TOL = 1e-8
# relative width of the band in which a feasible policy is flagged marginal
MARGINAL_REL = 1e-6


@dataclass(frozen=True)
class Ssm:
    """Strictly proper state-space model G(s) = C (sI - A)^{-1} B."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n) or B.shape[0] != n or C.shape[1] != n:
            raise DimensionMismatch(
                f"dimension mismatch: A {A.shape}, B {B.shape}, C {C.shape}"
            )
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)


def close_loop_channel(problem: MixedProblem, K, channel: Literal["h2", "hinf"]) -> Ssm:
    """Closed-loop transfer function from disturbance to a performance output.

    The output stacks Q^{1/2} x over R^{1/2} u for the selected channel's
    weights, with u = K x.
    """
    K = validate_policy(problem, K)
    if channel == "h2":
        Cq, Cr = problem.Q2_sqrt, problem.R2_sqrt
    elif channel == "hinf":
        Cq, Cr = problem.Qinf_sqrt, problem.Rinf_sqrt
    else:
        raise ValueError(f"unknown channel {channel!r}")
    return Ssm(A=problem.closed_loop(K), B=problem.Bw, C=np.vstack([Cq, Cr @ K]))


def _gamma_exceeds_norm(A, BBt, CtC, gamma: float) -> bool:
    """True iff gamma > ||G||_inf, via the Hamiltonian axis test."""
    n = A.shape[0]
    H = np.block([[A.T, CtC / gamma**2], [-BBt, -A]])
    ev = np.linalg.eigvals(H)
    scale = max(1.0, float(np.abs(ev).max()))
    return bool(np.min(np.abs(ev.real)) > AXIS_TOL * scale)


def hinf_norm(sys: Ssm, tol: float = 1e-6) -> float:
    """H-infinity norm of a stable Ssm by bisection to relative accuracy tol.

    Raises UnstableSystemError when A is not Hurwitz (the norm is infinite).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not is_hurwitz(sys.A):
        raise UnstableSystemError("unstable system: A is not Hurwitz")
    BBt = sys.B @ sys.B.T
    CtC = sys.C.T @ sys.C
    # lower bracket: the DC gain when A is invertible
    try:
        lo = float(np.linalg.norm(sys.C @ np.linalg.solve(sys.A, sys.B), 2))
    except np.linalg.LinAlgError:
        lo = 0.0
    up = max(2.0 * lo, 1.0)
    for _ in range(200):
        if _gamma_exceeds_norm(sys.A, BBt, CtC, up):
            break
        up *= 2.0
    else:
        raise ArithmeticError("hinf_norm bracket search failed")
    while up - lo > tol * (1.0 + lo):
        mid = 0.5 * (lo + up)
        if _gamma_exceeds_norm(sys.A, BBt, CtC, mid):
            up = mid
        else:
            lo = mid
    return 0.5 * (lo + up)


@dataclass(frozen=True)
class FeasibilityReport:
    """Feasibility verdict for one policy, with the certifying Riccati solution."""

    feasible: bool
    marginal: bool
    stable: bool
    hinf_norm: float
    certificate: Optional[RiccatiSolution]

    def __bool__(self):
        return self.feasible


def is_feasible(problem: MixedProblem, K, norm_tol: float = 1e-9) -> FeasibilityReport:
    """Membership test for the H-infinity constrained set, with certificate.

    Feasible means A + BK Hurwitz and the closed-loop H-infinity norm of the
    robustness channel strictly below beta. A feasible policy within a
    relative band of 1e-6 of saturation is additionally flagged marginal,
    which optimizers treat as a stopping wall rather than interior ground.
    """
    K = validate_policy(problem, K)
    A_K = problem.closed_loop(K)
    if not is_hurwitz(A_K):
        return FeasibilityReport(False, False, False, np.inf, None)
    norm = hinf_norm(close_loop_channel(problem, K, "hinf"), tol=norm_tol)
    feasible = norm < problem.beta
    marginal = feasible and (problem.beta - norm) < MARGINAL_REL * problem.beta
    cert = None
    if feasible:
        try:
            cert = solve_care_primal(
                A_K, problem.S_of(K) / problem.beta**2, problem.W, want="stabilizing"
            )
        except NoStabilizingSolution:
            # squeezed between the norm estimate and the axis tolerance
            marginal = True
    return FeasibilityReport(feasible, marginal, True, norm, cert)


def _level_feasible(problem: MixedProblem, beta: float) -> bool:
    """True iff some stabilizing policy achieves closed-loop norm < beta.

    Tests solvability of the robustness-channel Riccati equation
    A^T P + P A + P (W/beta^2 - B Rinf^{-1} B^T) P + Qinf = 0 with a
    stabilizing PSD solution.
    """
    G = problem.W / beta**2 - problem.B @ np.linalg.solve(problem.Rinf, problem.B.T)
    try:
        sol = _solve_dual_any(problem.A, 0.5 * (G + G.T), problem.Qinf, "stabilizing")
    except NoStabilizingSolution:
        return False
    scale = 1.0 + float(np.abs(sol.X).max())
    return min_eig_sym(sol.X) > -1e-8 * scale


def beta_star(problem: MixedProblem, tol: float = 1e-4) -> float:
    """Infimum of the closed-loop H-infinity norm over stabilizing policies.

    Bisection on the level-set solvability test; the returned estimate is
    within tol of the true infimum, with the final bracket certified
    infeasible below and feasible above.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    # stabilizability is certified at problem construction; re-raise the
    # named assumption if someone bypassed it
    try:
        problem._certify_stabilizable()
    except AssumptionError as exc:
        raise AssumptionError("Assumption 1", f"non-stabilizable plant ({exc.detail})")
    lo, up = 0.0, 1.0
    for _ in range(80):
        if _level_feasible(problem, up):
            break
        up *= 2.0
    else:
        raise ArithmeticError("beta_star bracket search failed")
    while up - lo > tol:
        mid = 0.5 * (lo + up)
        if _level_feasible(problem, mid):
            up = mid
        else:
            lo = mid
    return 0.5 * (lo + up)
