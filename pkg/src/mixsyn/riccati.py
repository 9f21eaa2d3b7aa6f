"""Continuous algebraic Riccati solvers for the two sign conventions used here.

Primal form:  M X + X M^T + X D X + C = 0   with M + X D the closed loop.
Dual form:    M^T P + P M + P D P + C = 0   with M + D P the closed loop.

Both are solved through the Hamiltonian matrix

    H = [[M, D], [-C, -M^T]]        (dual form; primal maps to it via M -> M^T)

by selecting an n-dimensional invariant subspace. The stabilizing solution
takes the strictly stable eigenvalues; the minimal solution at the boundary
additionally takes one eigenvector per imaginary-axis Jordan pair.
"""
from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg as sla

from .errors import DimensionMismatch, NoStabilizingSolution
from .linalg import (
    _as_square,
    as_symmetric,
    is_hurwitz,
    solve_lyapunov,
    solve_lyapunov_transposed,
    spectral_abscissa,
    symmetrize,
)

__all__ = [
    "RiccatiSolution",
    "solve_care_primal",
    "solve_care_dual",
    "care_residual",
    "newton_kleinman",
]

# relative threshold for "eigenvalue on the imaginary axis"
AXIS_TOL = 1e-8
# closed-loop abscissa above which a minimal solution is considered boundary
BOUNDARY_TAU = 1e-7

Kind = Literal["stabilizing", "minimal"]


@dataclass(frozen=True)
class RiccatiSolution:
    """Symmetric Riccati solution with certificates.

    ``closed_loop_abscissa`` is the spectral abscissa of M + X D (primal)
    or M + D P (dual). ``near_boundary`` flags solutions whose closed loop
    sits within 10x the boundary tolerance of the imaginary axis, where the
    stabilizing/minimal distinction is numerically fuzzy.
    """

    X: np.ndarray
    residual_norm: float
    closed_loop_abscissa: float
    kind: Kind
    near_boundary: bool = False


def care_residual(M, D, C, X) -> float:
    """Frobenius norm of M X + X M^T + X D X + C (primal form)."""
    M = _as_square(M, "M")
    D = as_symmetric(D, "D")
    C = as_symmetric(C, "C")
    X = as_symmetric(X, "X")
    if not (M.shape == D.shape == C.shape == X.shape):
        raise DimensionMismatch("dimension mismatch among Riccati coefficients")
    return float(np.linalg.norm(M @ X + X @ M.T + X @ D @ X + C, "fro"))


def _residual_dual(M, D, C, P) -> float:
    return float(np.linalg.norm(M.T @ P + P @ M + P @ D @ P + C, "fro"))


def _check_coeffs(M, D, C):
    M = _as_square(M, "M")
    D = as_symmetric(D, "D")
    C = as_symmetric(C, "C")
    if not (M.shape == D.shape == C.shape):
        raise DimensionMismatch(
            f"dimension mismatch: M {M.shape}, D {D.shape}, C {C.shape}"
        )
    return M, D, C


def _subspace_to_solution(basis, n):
    """Recover P = V U^{-1} from an invariant-subspace basis [U; V]."""
    U = basis[:n, :]
    V = basis[n:, :]
    # U must be invertible (complementarity); fail loudly otherwise
    cond = np.linalg.cond(U)
    if not np.isfinite(cond) or cond > 1e13:
        raise NoStabilizingSolution(
            "no stabilizing solution: invariant subspace is not a graph"
        )
    P = np.linalg.solve(U.T, V.T).T
    return symmetrize(P)


def _axis_completion(H, ev, n, n_stable, Z_stable, scale):
    """Basis vectors for imaginary-axis eigenvalues, one per Jordan pair.

    At a boundary policy the Hamiltonian carries even clusters on the axis
    (a 2x2 Jordan structure per peak frequency); the minimal solution uses
    the proper eigenvectors only. Odd clusters mean the point is strictly
    outside the closure and no minimal solution exists.
    """
    axis = ev[np.abs(ev.real) <= AXIS_TOL * scale]
    # cluster representatives with nonnegative frequency
    cluster_tol = max(10 * AXIS_TOL * scale, 1e-7 * scale)
    reps = []
    for lam in axis:
        if lam.imag < -cluster_tol:
            continue
        if not any(abs(lam - r) <= cluster_tol for r in reps):
            reps.append(lam)
    blocks = [Z_stable] if n_stable else []
    count = n_stable
    for rep in reps:
        omega = 0.0 if abs(rep.imag) <= cluster_tol else float(rep.imag)
        members = int(np.sum(np.abs(axis - 1j * omega) <= cluster_tol))
        if members % 2:
            raise NoStabilizingSolution(
                "no minimal solution: odd imaginary-axis multiplicity"
            )
        m = members // 2
        _, _, Vh = np.linalg.svd(H - (1j * omega) * np.eye(2 * n))
        vecs = Vh.conj().T[:, 2 * n - m :]
        if omega == 0.0:
            blocks.append(np.real(vecs))
            count += m
        else:
            blocks.append(np.hstack([np.real(vecs), np.imag(vecs)]))
            count += 2 * m
    if count != n:
        raise NoStabilizingSolution(
            f"no minimal solution: subspace dimension {count} != {n}"
        )
    basis = np.hstack(blocks)
    Q, _ = np.linalg.qr(basis)
    return Q


def _newton_polish(M, D, C, P, max_steps=3):
    """Newton refinement of a dual-form solution with Hurwitz closed loop."""
    best = P
    best_res = _residual_dual(M, D, C, P)
    target = 0.1 * 1e-9 * (1.0 + np.linalg.norm(C, "fro"))
    for _ in range(max_steps):
        if best_res <= target:
            break
        L = M + D @ best
        if not is_hurwitz(L):
            break
        R = symmetrize(M.T @ best + best @ M + best @ D @ best + C)
        try:
            delta = solve_lyapunov_transposed(L, R)
        except Exception:
            break
        cand = symmetrize(best + delta)
        res = _residual_dual(M, D, C, cand)
        if res >= best_res:
            break
        best, best_res = cand, res
    return best, best_res


def _solve_dual_any(M, D, C, want: Kind = "stabilizing"):
    """Core solver for M^T P + P M + P D P + C = 0 with general symmetric D.

    The public wrappers restrict D to be PSD; the general form is needed
    internally for the LQR and game-type equations used by the optimizers.
    """
    n = M.shape[0]
    if np.linalg.norm(D, "fro") == 0.0:
        # degenerate quadratic term: plain Lyapunov equation
        if not is_hurwitz(M):
            raise NoStabilizingSolution(
                "no stabilizing solution: D = 0 with non-Hurwitz M"
            )
        P = solve_lyapunov_transposed(M, C)
        absc = spectral_abscissa(M)
        return RiccatiSolution(
            X=P,
            residual_norm=_residual_dual(M, D, C, P),
            closed_loop_abscissa=absc,
            kind="stabilizing",
            near_boundary=absc > -10 * BOUNDARY_TAU,
        )

    H = np.block([[M, D], [-C, -M.T]])
    ev = np.linalg.eigvals(H)
    scale = max(1.0, float(np.abs(ev).max()))
    on_axis = np.abs(ev.real) <= AXIS_TOL * scale

    if want == "stabilizing" and on_axis.any():
        raise NoStabilizingSolution(
            "no stabilizing solution: Hamiltonian has imaginary-axis eigenvalues"
        )

    if not on_axis.any():
        _, Z, sdim = sla.schur(H, sort=lambda re, im: re < 0.0)
        if sdim != n:
            raise NoStabilizingSolution(
                f"no stabilizing solution: stable subspace has dimension {sdim}"
            )
        P = _subspace_to_solution(Z[:, :n], n)
        P, res = _newton_polish(M, D, C, P)
        absc = spectral_abscissa(M + D @ P)
        return RiccatiSolution(
            X=P,
            residual_norm=res,
            closed_loop_abscissa=absc,
            kind="stabilizing" if absc < 0 else "minimal",
            near_boundary=abs(absc) < 10 * BOUNDARY_TAU,
        )

    # minimal solution with axis eigenvalues: strictly stable Schur vectors
    # plus eigenvector completion
    thr = -AXIS_TOL * scale
    _, Z, sdim = sla.schur(H, sort=lambda re, im: re < thr)
    Q = _axis_completion(H, ev, n, sdim, Z[:, :sdim], scale)
    P = _subspace_to_solution(Q, n)
    absc = spectral_abscissa(M + D @ P)
    return RiccatiSolution(
        X=P,
        residual_norm=_residual_dual(M, D, C, P),
        closed_loop_abscissa=absc,
        kind="minimal",
        near_boundary=True,
    )


def _require_psd(D, name):
    w = np.linalg.eigvalsh(D)
    scale = 1.0 + max(0.0, float(w.max(initial=0.0)))
    if w.min(initial=0.0) < -1e-10 * scale:
        raise ValueError(f"{name} must be positive semidefinite")


def solve_care_dual(M, D, C, want: Kind = "stabilizing") -> RiccatiSolution:
    """Solve M^T P + P M + P D P + C = 0 with D, C >= 0.

    ``want="stabilizing"`` requires M + D P Hurwitz and raises
    NoStabilizingSolution when the Hamiltonian has imaginary-axis
    eigenvalues. ``want="minimal"`` extends to the boundary case, returning
    the smallest symmetric solution (closed loop in the closed left
    half-plane).
    """
    M, D, C = _check_coeffs(M, D, C)
    _require_psd(D, "D")
    _require_psd(C, "C")
    return _solve_dual_any(M, D, C, want)


def solve_care_primal(M, D, C, want: Kind = "stabilizing") -> RiccatiSolution:
    """Solve M X + X M^T + X D X + C = 0 with D, C >= 0 and M + X D closed loop."""
    M, D, C = _check_coeffs(M, D, C)
    _require_psd(D, "D")
    _require_psd(C, "C")
    sol = _solve_dual_any(M.T, D, C, want)
    # same spectrum as the dual closed loop; recompute on the primal matrix
    absc = spectral_abscissa(M + sol.X @ D)
    return RiccatiSolution(
        X=sol.X,
        residual_norm=care_residual(M, D, C, sol.X),
        closed_loop_abscissa=absc,
        kind=sol.kind,
        near_boundary=sol.near_boundary,
    )


def newton_kleinman(M, D, C, max_iter: int = 100, tol: float = 1e-13):
    """Newton iteration for the dual equation, as an independent cross-check.

    Starts from the Lyapunov solution (D = 0), so M must be Hurwitz. Each
    step solves one Lyapunov equation. Returns the final iterate; raises if
    an iterate loses the Hurwitz closed loop or the iteration stalls.
    """
    M, D, C = _check_coeffs(M, D, C)
    if not is_hurwitz(M):
        raise NoStabilizingSolution("newton_kleinman requires Hurwitz M")
    P = solve_lyapunov_transposed(M, C)
    for _ in range(max_iter):
        L = M + D @ P
        if not is_hurwitz(L):
            raise NoStabilizingSolution("newton_kleinman iterate lost stability")
        P_next = solve_lyapunov_transposed(L, symmetrize(C - P @ D @ P))
        step = np.linalg.norm(P_next - P, "fro")
        P = P_next
        if step <= tol * (1.0 + np.linalg.norm(P, "fro")):
            return P
    raise NoStabilizingSolution("newton_kleinman did not converge")
