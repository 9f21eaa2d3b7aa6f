"""Self-check suite run by the ``verify`` CLI command.

Groups: gradient-vs-finite-difference agreement, the upper-bound chain
linking the mixed cost to the H2 norm, the lifting equivalence and round
trips, solution lifting, and a multistart global-optimality check. Group
sizes scale down with the state dimension so the suite stays fast on
large generated instances. Deterministic for a fixed (instance, seed).

Setting MIXSYN_FAULT=gradient flips the sign of the analytic gradient
inside this module only; it exists so the suite's own failure detection
can be exercised.
"""
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import ecl
from .cost import eval_cost_2ch, fd_gradient, grad_2ch, h2_norm
from .errors import MixsynError
from .linalg import min_eig_sym, solve_lyapunov
from .optim import (
    CONVERGED,
    SolveOptions,
    gradient_descent,
    multistart_global_check,
    policy_iteration_1ch,
    sample_feasible_policies,
    solve_analytic_1ch,
)
from .problem import MixedProblem

__all__ = ["GroupResult", "run_verification", "sample_ecl_points"]


@dataclass
class GroupResult:
    name: str
    passed: int = 0
    failed: int = 0
    first_failure: str = ""

    def check(self, ok: bool, detail: str):
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            if not self.first_failure:
                self.first_failure = detail

    @property
    def ok(self) -> bool:
        return self.failed == 0 and self.passed > 0


def _grad(problem, K):
    g = grad_2ch(problem, K)
    if os.environ.get("MIXSYN_FAULT") == "gradient":
        g = -g
    return g


def _group_gradient(problem, policies, rng) -> GroupResult:
    res = GroupResult("gradient_fd")
    step = 1e-5
    for K in policies:
        g = _grad(problem, K)
        if problem.n * problem.m <= 25:
            fd = fd_gradient(problem, K, step)
            err = np.linalg.norm(fd - g, "fro") / max(np.linalg.norm(g, "fro"), 1e-12)
            res.check(err <= 1e-4, f"entrywise FD error {err:.3e} at policy norm "
                                   f"{np.linalg.norm(K):.3g}")
        else:
            # directional probes keep the cost bounded on large instances
            for _ in range(3):
                D = rng.randn(*K.shape)
                D /= np.linalg.norm(D, "fro")
                jp, _ = eval_cost_2ch(problem, K + step * D)
                jm, _ = eval_cost_2ch(problem, K - step * D)
                fd_dir = (jp - jm) / (2 * step)
                an_dir = float(np.sum(g * D))
                err = abs(fd_dir - an_dir) / max(abs(an_dir), 1e-12)
                res.check(err <= 1e-4, f"directional FD error {err:.3e}")
    return res


def _group_upper_bound(problem, policies) -> GroupResult:
    res = GroupResult("upper_bound")
    for K in policies:
        j, X = eval_cost_2ch(problem, K)
        Xhat = solve_lyapunov(problem.closed_loop(K), problem.W)
        gap_eig = min_eig_sym(X - Xhat)
        res.check(gap_eig >= -1e-9, f"X_K - Xhat_K has eigenvalue {gap_eig:.3e}")
        h2 = h2_norm(problem, K)
        res.check(
            j >= h2**2 - 1e-8 * (1 + abs(j)),
            f"j_mix {j:.6g} below squared H2 norm {h2**2:.6g}",
        )
    return res


def sample_ecl_points(problem, policies, n_samples, seed):
    """Lifted-set sample points: exact members plus perturbed non-members.

    Perturbation magnitudes are log-spaced over [1e-6, 1] relative to the
    point scale, exercising both near-boundary and gross violations while
    staying clear of the membership tolerance band.
    """
    rng = np.random.RandomState(seed)
    points = []
    base = []
    for K in policies:
        j, X = eval_cost_2ch(problem, K)
        base.append((K, j, X))
        points.append(ecl.LiftedPoint(K=K, gamma=j, X=X))
    while len(points) < n_samples:
        K, j, X = base[rng.randint(len(base))]
        eps = 10.0 ** rng.uniform(-6, 0)
        mode = rng.randint(3)
        if mode == 0:
            # slack in gamma keeps membership, deficit breaks the trace bound
            sign = 1.0 if rng.rand() < 0.5 else -1.0
            points.append(
                ecl.LiftedPoint(K=K, gamma=j + sign * eps * (1 + abs(j)), X=X)
            )
        elif mode == 1:
            G = rng.randn(*X.shape)
            G = 0.5 * (G + G.T)
            G /= np.linalg.norm(G, "fro")
            Xp = X + eps * (1 + np.linalg.norm(X, "fro")) * G
            if min_eig_sym(Xp) <= 1e-8 * (1 + np.abs(Xp).max()):
                continue
            points.append(ecl.LiftedPoint(K=K, gamma=j, X=Xp))
        else:
            G = rng.randn(*K.shape)
            G /= np.linalg.norm(G, "fro")
            points.append(
                ecl.LiftedPoint(K=K + eps * (1 + np.linalg.norm(K)) * G, gamma=j, X=X)
            )
    return points[:n_samples]


def _group_ecl(problem, policies, n_samples, seed) -> GroupResult:
    res = GroupResult("ecl_equivalence")
    for p in sample_ecl_points(problem, policies, n_samples, seed):
        lhs = bool(ecl.member_lifted(problem, p))
        q = ecl.phi(p)
        rhs = bool(ecl.member_cvx(problem, q))
        res.check(lhs == rhs, f"membership mismatch lifted={lhs} cvx={rhs}")
        back = ecl.psi(q)
        err = max(
            np.abs(back.K - p.K).max() / (1 + np.abs(p.K).max()),
            np.abs(back.X - p.X).max() / (1 + np.abs(p.X).max()),
            abs(back.gamma - p.gamma) / (1 + abs(p.gamma)),
        )
        res.check(err <= 1e-12, f"round-trip error {err:.3e}")
    for K in policies:
        rep, _ = ecl.certify_nondegenerate(problem, K)
        res.check(bool(rep), f"non-degeneracy witness rejected (max eig {rep.max_eig:.3e})")
    return res


def _group_lift_roundtrip(problem, policies) -> GroupResult:
    res = GroupResult("solution_lifting")
    candidates = list(policies[:2])
    try:
        if problem.single_channel:
            K_opt, _ = solve_analytic_1ch(problem)
            candidates.append(K_opt)
        else:
            K_opt, trace = gradient_descent(
                problem,
                policies[0],
                SolveOptions(max_iters=300, conv_tol=1e-4, track_norms=False),
                channel="two",
            )
            if trace.outcome == CONVERGED:
                candidates.append(K_opt)
    except MixsynError:
        pass
    for K in candidates:
        rep = ecl.lift_solution_roundtrip(problem, K)
        res.check(
            rep.ok,
            f"lift round trip failed: policy error {rep.policy_error:.3e}, "
            f"lifted={rep.member_lifted} cvx={rep.member_cvx}",
        )
    return res


def _group_multistart(problem, seed, n_starts) -> GroupResult:
    res = GroupResult("multistart_global")
    if problem.single_channel:
        K_ref, _ = solve_analytic_1ch(problem)
        starts = sample_feasible_policies(problem, n_starts, seed + 17)
        for K0 in starts:
            K, trace = policy_iteration_1ch(problem, K0, SolveOptions(track_norms=False))
            ok = trace.outcome == CONVERGED and np.linalg.norm(K - K_ref) <= 1e-4 * (
                1 + np.linalg.norm(K_ref)
            )
            res.check(
                ok,
                f"policy iteration from a random start ended {trace.outcome} at "
                f"distance {np.linalg.norm(K - K_ref):.3e} from the closed form",
            )
    else:
        report = multistart_global_check(problem, n_starts, seed + 17)
        gap = report.max_rel_gap
        ok = report.n_converged >= 2 and gap <= 1e-3
        res.check(
            ok,
            f"multistart converged {report.n_converged}/{n_starts} with cost gap {gap}",
        )
    return res


def run_verification(problem: MixedProblem, seed: int = 0):
    """Run all property groups; returns (results, all_ok)."""
    rng = np.random.RandomState(seed)
    big = problem.n > 20
    n_policies = 2 if big else 4
    n_ecl = 24 if big else 80
    n_starts = 3 if big else 4
    policies = sample_feasible_policies(problem, n_policies, seed)
    results = [
        _group_gradient(problem, policies, rng),
        _group_upper_bound(problem, policies),
        _group_ecl(problem, policies, n_ecl, seed + 1),
        _group_lift_roundtrip(problem, policies),
        _group_multistart(problem, seed, n_starts),
    ]
    return results, all(r.ok for r in results)
