import math

import numpy as np
import pytest

from mixsyn import (
    LiftedPoint,
    CvxPoint,
    certify_nondegenerate,
    eval_cost_2ch,
    lift_solution_roundtrip,
    member_cvx,
    member_lifted,
    phi,
    psi,
    sample_feasible_policies,
    solve_analytic_1ch,
)
from mixsyn.riccati import solve_care_primal
from mixsyn.verify import sample_ecl_points

from conftest import scalar_problem


@pytest.fixture(scope="module")
def instance0_point(instance0):
    K = sample_feasible_policies(instance0, 1, seed=20)[0]
    j, X = eval_cost_2ch(instance0, K)
    return K, j, X


def test_member_lifted_at_solution(instance0, instance0_point):
    K, j, X = instance0_point
    rep = member_lifted(instance0, LiftedPoint(K=K, gamma=j, X=X))
    assert rep.member
    assert abs(rep.trace_slack) <= 1e-9 * (1 + abs(j))
    assert abs(rep.max_eig) <= rep.tol


def test_member_lifted_rejects_gamma_deficit(instance0, instance0_point):
    K, j, X = instance0_point
    rep = member_lifted(instance0, LiftedPoint(K=K, gamma=j - 1e-3, X=X))
    assert not rep.member
    assert rep.trace_slack < 0


def test_member_lifted_rejects_infeasible_policy(example3):
    # k = 0.5 is outside the feasible set at beta = 1; no X > 0 can witness
    rng = np.random.RandomState(0)
    for _ in range(5):
        x = float(rng.uniform(0.1, 10.0))
        rep = member_lifted(example3, LiftedPoint(K=[[0.5]], gamma=1e6, X=[[x]]))
        assert not rep.member


def test_member_cvx_image_of_member(instance0, instance0_point):
    K, j, X = instance0_point
    q = phi(LiftedPoint(K=K, gamma=j, X=X))
    assert member_cvx(instance0, q).member


def test_member_cvx_rejects_gamma_deficit(instance0, instance0_point):
    K, j, X = instance0_point
    q = phi(LiftedPoint(K=K, gamma=j - 1e-3, X=X))
    assert not member_cvx(instance0, q).member


def test_member_cvx_rejects_huge_y(instance0, instance0_point):
    _, j, X = instance0_point
    rep = member_cvx(instance0, CvxPoint(gamma=j, X=X, Y=1e4 * np.ones((3, 3))))
    assert not rep.member
    assert rep.max_eig > 0


def test_phi_zero_gain():
    p = LiftedPoint(K=np.zeros((2, 2)), gamma=1.0, X=np.eye(2))
    assert np.allclose(phi(p).Y, 0.0)


def test_phi_psi_scalar():
    p = LiftedPoint(K=[[-1.0]], gamma=3.0, X=[[2.0]])
    q = phi(p)
    assert q.Y[0, 0] == pytest.approx(-2.0)
    back = psi(q)
    assert back.K[0, 0] == pytest.approx(-1.0)
    assert psi(CvxPoint(gamma=1.0, X=[[2.0]], Y=[[-2.0]])).K[0, 0] == pytest.approx(-1.0)


def test_round_trips_random():
    rng = np.random.RandomState(21)
    for _ in range(50):
        n, m = rng.randint(1, 5), rng.randint(1, 4)
        G = rng.randn(n, n)
        X = G @ G.T + np.eye(n)
        K = rng.randn(m, n)
        gamma = float(rng.randn())
        p = LiftedPoint(K=K, gamma=gamma, X=X)
        back = psi(phi(p))
        assert np.abs(back.K - p.K).max() <= 1e-12 * (1 + np.abs(p.K).max())
        q = CvxPoint(gamma=gamma, X=X, Y=rng.randn(m, n))
        fwd = phi(psi(q))
        assert np.abs(fwd.Y - q.Y).max() <= 1e-12 * (1 + np.abs(q.Y).max())


def test_lifted_point_rejects_indefinite_x():
    with pytest.raises(ValueError, match="positive definite"):
        LiftedPoint(K=[[0.0]], gamma=0.0, X=[[-1.0]])


def test_cvx_point_rejects_ill_conditioned_x():
    with pytest.raises(ValueError, match="positive definite"):
        CvxPoint(gamma=0.0, X=np.diag([1e4, 1e-9]), Y=np.zeros((1, 2)))


def test_certify_nondegenerate(instance0):
    for K in sample_feasible_policies(instance0, 3, seed=22):
        rep, X = certify_nondegenerate(instance0, K)
        assert rep.member
        assert abs(rep.max_eig) <= rep.tol  # witness satisfies the equality case


def test_boundary_lifting_example3(example3):
    # k = 0 saturates the constraint at beta = 1; the minimal solution X = 1
    # still certifies membership of the boundary pair (K, J~(K))
    sol = solve_care_primal([[-1.0]], [[1.0]], [[1.0]], want="minimal")
    X = sol.X
    assert X[0, 0] == pytest.approx(1.0, abs=1e-9)
    rep = member_lifted(example3, LiftedPoint(K=[[0.0]], gamma=0.0, X=X))
    assert rep.member


def test_epigraph_inclusion_random_gamma(instance0, instance0_point):
    K, j, X = instance0_point
    rng = np.random.RandomState(23)
    for _ in range(10):
        gamma = j + float(rng.uniform(0, 100))
        assert member_lifted(instance0, LiftedPoint(K=K, gamma=gamma, X=X)).member


def test_equivalence_sampling(instance0):
    policies = sample_feasible_policies(instance0, 3, seed=24)
    pts = sample_ecl_points(instance0, policies, 150, seed=25)
    mismatches = 0
    for p in pts:
        lhs = bool(member_lifted(instance0, p))
        rhs = bool(member_cvx(instance0, phi(p)))
        mismatches += lhs != rhs
    assert mismatches == 0


def test_lift_solution_roundtrip_optimum(instance0_1ch):
    K, _ = solve_analytic_1ch(instance0_1ch)
    rep = lift_solution_roundtrip(instance0_1ch, K)
    assert rep.ok
    assert rep.policy_error <= 1e-10


def test_lift_solution_roundtrip_example3_optimum(example3_beta2):
    rep = lift_solution_roundtrip(example3_beta2, [[0.0]])
    assert rep.ok and rep.gamma == pytest.approx(0.0, abs=1e-12)


def test_lift_solution_roundtrip_boundary(example3):
    rep = lift_solution_roundtrip(example3, [[0.0]])
    assert rep.ok
    assert rep.gamma == pytest.approx(0.0, abs=1e-10)


def test_value_agreement_one_sided(instance0_1ch):
    # the lifted gamma of a converged policy is the attained minimum of its
    # fiber: membership holds at gamma = J and fails just below it
    K, _ = solve_analytic_1ch(instance0_1ch)
    j, X = eval_cost_2ch(instance0_1ch, K)
    assert member_lifted(instance0_1ch, LiftedPoint(K=K, gamma=j, X=X)).member
    shrunk = j - 1e-6 * (1 + abs(j))
    assert not member_lifted(instance0_1ch, LiftedPoint(K=K, gamma=shrunk, X=X)).member
