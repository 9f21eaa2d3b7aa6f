import math

import numpy as np
import pytest
import scipy.linalg as sla

from mixsyn import (
    NoStabilizingSolution,
    care_residual,
    hinf_norm,
    newton_kleinman,
    solve_care_dual,
    solve_care_primal,
    spectral_abscissa,
)
from mixsyn.hinf import Ssm


def random_brl_instance(rng, n):
    """Coefficients (M, D, C) of a bounded-real Riccati equation feasible in
    both the primal and the dual orientation."""
    M = rng.randn(n, n)
    M -= (spectral_abscissa(M) + 1.0) * np.eye(n)
    Cout = rng.randn(n, n)
    B = rng.randn(n, n)
    norm = max(
        hinf_norm(Ssm(A=M, B=B, C=Cout), tol=1e-8),
        hinf_norm(Ssm(A=M.T, B=B, C=Cout), tol=1e-8),
    )
    beta = 1.5 * norm
    return M, (Cout.T @ Cout) / beta**2, B @ B.T


def test_primal_scalar_closed_form():
    sol = solve_care_primal([[-1.0]], [[0.25]], [[1.0]])
    assert sol.X[0, 0] == pytest.approx(4 - 2 * math.sqrt(3), abs=1e-12)
    assert sol.closed_loop_abscissa == pytest.approx(-math.sqrt(3) / 2, abs=1e-9)
    assert sol.kind == "stabilizing"


def test_primal_degenerate_quadratic_term_is_lyapunov():
    sol = solve_care_primal([[-1.0]], [[0.0]], [[2.0]])
    assert sol.X[0, 0] == pytest.approx(1.0, abs=1e-12)


def test_primal_minimal_picks_smaller_root():
    # the scalar quadratic 0.25 X^2 - 2X + 1 = 0 has roots 4 +/- 2*sqrt(3)
    sol = solve_care_primal([[-1.0]], [[0.25]], [[1.0]], want="minimal")
    roots = sorted(np.roots([0.25, -2.0, 1.0]))
    assert sol.X[0, 0] == pytest.approx(roots[0], abs=1e-10)
    assert sol.X[0, 0] <= roots[1] + 1e-7


def test_dual_scalar_matches_primal():
    a = solve_care_primal([[-1.0]], [[0.25]], [[1.0]])
    b = solve_care_dual([[-1.0]], [[0.25]], [[1.0]])
    assert a.X[0, 0] == pytest.approx(b.X[0, 0], abs=1e-13)


def test_dual_is_primal_of_transpose():
    rng = np.random.RandomState(7)
    M, D, C = random_brl_instance(rng, 4)
    a = solve_care_dual(M, D, C)
    b = solve_care_primal(M.T, D, C)
    assert np.abs(a.X - b.X).max() < 1e-10 * (1 + np.abs(a.X).max())


def test_dual_zero_quadratic_zero_rhs():
    # A=-1, B=1, Q=0, R=1, W=1, beta=1: D = W/beta^2 - B R^{-1} B^T = 0, C = 0
    sol = solve_care_dual([[-1.0]], [[0.0]], [[0.0]])
    assert sol.X[0, 0] == pytest.approx(0.0, abs=1e-14)


def test_care_residual_exact_solution_small():
    rng = np.random.RandomState(8)
    M, D, C = random_brl_instance(rng, 3)
    sol = solve_care_primal(M, D, C)
    assert sol.residual_norm <= 1e-9 * (1 + np.linalg.norm(C, "fro"))
    assert care_residual(M, D, C, sol.X) == pytest.approx(sol.residual_norm, rel=1e-6, abs=1e-12)


def test_care_residual_at_zero_is_norm_of_c():
    C = np.diag([1.0, 2.0])
    r = care_residual(-np.eye(2), np.eye(2) * 0.1, C, np.zeros((2, 2)))
    assert r == pytest.approx(np.linalg.norm(C, "fro"), abs=1e-14)


def test_care_residual_grows_with_perturbation():
    rng = np.random.RandomState(9)
    M, D, C = random_brl_instance(rng, 3)
    sol = solve_care_primal(M, D, C)
    r_small = care_residual(M, D, C, sol.X + 1e-4 * np.eye(3))
    r_big = care_residual(M, D, C, sol.X + 1e-2 * np.eye(3))
    assert sol.residual_norm < r_small < r_big


def test_stabilizing_solution_unique_across_algorithms():
    rng = np.random.RandomState(10)
    for n in (2, 3, 5):
        M, D, C = random_brl_instance(rng, n)
        schur_sol = solve_care_dual(M, D, C).X
        nk_sol = newton_kleinman(M, D, C)
        scale = 1 + np.abs(schur_sol).max()
        assert np.abs(schur_sol - nk_sol).max() < 1e-8 * scale
        # third route: scipy's solver on the equivalent formulation
        scipy_sol = sla.solve_continuous_are(
            M, sla.sqrtm(D).real if np.linalg.norm(D) else np.zeros_like(D), C,
            -np.eye(n),
        )
        assert np.abs(schur_sol - scipy_sol).max() < 1e-8 * scale


def test_no_stabilizing_solution_on_boundary():
    # scalar boundary case: X^2 - 2X + 1 = 0 has a double root, closed loop 0
    with pytest.raises(NoStabilizingSolution, match="no stabilizing solution"):
        solve_care_primal([[-1.0]], [[1.0]], [[1.0]], want="stabilizing")


def test_minimal_solution_on_boundary():
    sol = solve_care_primal([[-1.0]], [[1.0]], [[1.0]], want="minimal")
    assert sol.X[0, 0] == pytest.approx(1.0, abs=1e-9)
    assert sol.kind == "minimal"
    assert sol.closed_loop_abscissa <= 1e-7
    assert sol.near_boundary


def test_dimension_mismatch():
    with pytest.raises(Exception, match="dimension mismatch"):
        solve_care_primal(-np.eye(2), np.eye(3), np.eye(2))


def test_rejects_indefinite_quadratic_coefficient():
    with pytest.raises(ValueError, match="positive semidefinite"):
        solve_care_dual(-np.eye(2), -np.eye(2), np.eye(2))


def test_lemma1_equivalence_scalar_grid():
    """Riccati solvability certifies the strict norm bound, and conversely."""
    beta = 2.0
    k0 = (4 - math.sqrt(7)) / 3  # closed-form boundary of the feasible set
    for k in (-2.0, -1.0, 0.0, 0.2, k0 - 1e-3, k0 + 1e-3, 0.7):
        A_K = np.array([[-1.0 + k]])
        S = np.array([[1.0 + k**2]])
        sys = Ssm(A=A_K, B=[[1.0]], C=np.array([[1.0], [k]]))
        norm = hinf_norm(sys, tol=1e-9)
        solvable = True
        try:
            sol = solve_care_primal(A_K, S / beta**2, [[1.0]])
            solvable = sol.closed_loop_abscissa < 0 and sol.X.min() >= -1e-10
        except NoStabilizingSolution:
            solvable = False
        assert solvable == (norm < beta), f"mismatch at k={k}"


def test_residual_and_kind_invariants_random():
    rng = np.random.RandomState(11)
    for _ in range(8):
        n = rng.randint(2, 6)
        M, D, C = random_brl_instance(rng, n)
        sol = solve_care_primal(M, D, C)
        assert sol.residual_norm <= 1e-9 * (1 + np.linalg.norm(C, "fro"))
        assert sol.kind == "stabilizing"
        assert sol.closed_loop_abscissa < 0
        assert np.allclose(sol.X, sol.X.T)
