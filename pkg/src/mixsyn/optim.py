"""Solvers: analytic single-channel optimum, policy iteration, gradient descent.

The single-channel optimum is the unique stationary point, obtained from
one Riccati equation independent of K. Policy iteration alternates
evaluation (a Riccati solve) with the closed-form improvement step; the
two-channel variant is a pure fixed-point iteration that can leave the
feasible set or cycle when beta is tight, which the trace reports as an
outcome rather than an exception. Gradient descent with a feasibility
guard is the robust fallback.
"""
import math
import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .cost import (
    _beta_inv2,
    _mixed_trace,
    _stabilizing_P,
    _stabilizing_X,
    extract_alpha,
    grad_1ch,
    grad_2ch,
    h2_norm,
)
from .errors import (
    InfeasiblePolicyError,
    NoStabilizingSolution,
    SamplerError,
    SingleChannelError,
)
from .hinf import close_loop_channel, hinf_norm
from .linalg import min_eig_sym, solve_lyapunov, solve_lyapunov_transposed, symmetrize
from .problem import MixedProblem, validate_policy
from .riccati import _solve_dual_any

__all__ = [
    "SolveOptions",
    "SolveTrace",
    "TraceRow",
    "CONVERGED",
    "MAX_ITERS",
    "LEFT_FEASIBLE_SET",
    "OSCILLATING",
    "solve_analytic_1ch",
    "solve_lqr",
    "policy_iteration_1ch",
    "policy_iteration_2ch",
    "gradient_descent",
    "sample_feasible_policies",
    "multistart_global_check",
    "MultistartReport",
    "worker_count",
]

CONVERGED = "Converged"
MAX_ITERS = "MaxIters"
LEFT_FEASIBLE_SET = "LeftFeasibleSet"
OSCILLATING = "Oscillating"

STEP_FLOOR = 1e-14


def worker_count() -> int:
    """Worker-thread cap: MIXSYN_THREADS if set, else the logical core count."""
    env = os.environ.get("MIXSYN_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 500
    conv_tol: float = 1e-5
    step_init: float = 1.0
    armijo_c: float = 1e-4
    backtrack_ratio: float = 0.5
    oscillation_window: int = 20
    track_norms: bool = True

    def __post_init__(self):
        if self.max_iters <= 0 or self.oscillation_window <= 0:
            raise ValueError("iteration counts must be positive")
        if not (0 < self.conv_tol < 1):
            raise ValueError("conv_tol must be in (0, 1)")
        if self.step_init <= 0:
            raise ValueError("step_init must be positive")
        if not (0 < self.armijo_c < 1) or not (0 < self.backtrack_ratio < 1):
            raise ValueError("armijo_c and backtrack_ratio must be in (0, 1)")


class TraceRow(NamedTuple):
    iteration: int
    j_mix: float
    grad_norm: float
    hinf_norm: float
    step: float


@dataclass
class SolveTrace:
    iterates: list = field(default_factory=list)
    outcome: str = MAX_ITERS
    message: str = ""

    def append(self, *row):
        self.iterates.append(TraceRow(*row))

    def __len__(self):
        return len(self.iterates)


def _trace_norm(problem, K, opts) -> float:
    if not opts.track_norms:
        return math.nan
    try:
        return hinf_norm(close_loop_channel(problem, K, "hinf"), tol=1e-6)
    except Exception:
        return math.inf


# -- closed-form solvers ------------------------------------------------


def solve_lqr(A, B, Q, R, W):
    """Classical LQR: K = -R^{-1} B^T P with the stabilizing Riccati solution.

    Returns (K, P, cost) where cost = tr((Q + K^T R K) Xhat) through the
    closed-loop Lyapunov equation (the squared H2 norm).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    Q = symmetrize(np.atleast_2d(np.asarray(Q, dtype=float)))
    R = symmetrize(np.atleast_2d(np.asarray(R, dtype=float)))
    W = symmetrize(np.atleast_2d(np.asarray(W, dtype=float)))
    G = -B @ np.linalg.solve(R, B.T)
    try:
        sol = _solve_dual_any(A, symmetrize(G), Q, "stabilizing")
    except NoStabilizingSolution as exc:
        raise NoStabilizingSolution(f"non-stabilizable or undetectable LQR data: {exc}")
    P = sol.X
    K = -np.linalg.solve(R, B.T @ P)
    Xhat = solve_lyapunov(A + B @ K, W)
    cost = float(np.trace((Q + K.T @ R @ K) @ Xhat))
    return K, P, cost


def solve_analytic_1ch(problem: MixedProblem):
    """Closed-form single-channel optimum K = -R^{-1} B^T P.

    P is the stabilizing solution of
        A^T P + P A + P (W/beta^2 - B R^{-1} B^T) P + Q = 0,
    which exists exactly when the feasible set is nonempty.
    """
    if not problem.single_channel:
        raise SingleChannelError("not single-channel: Q2 != Qinf or R2 != Rinf")
    G = _beta_inv2(problem.beta) * problem.W - problem.B @ np.linalg.solve(
        problem.R2, problem.B.T
    )
    try:
        sol = _solve_dual_any(problem.A, symmetrize(G), problem.Q2, "stabilizing")
    except NoStabilizingSolution as exc:
        raise NoStabilizingSolution(f"beta below beta_star: {exc}") from exc
    P = sol.X
    scale = 1.0 + float(np.abs(P).max())
    if min_eig_sym(P) < -1e-8 * scale:
        raise NoStabilizingSolution("beta below beta_star: solution indefinite")
    K = -np.linalg.solve(problem.R2, problem.B.T @ P)
    return K, P


# -- policy iteration ----------------------------------------------------


def _oscillating(upd_hist, cost_hist, opts) -> bool:
    if len(upd_hist) < opts.oscillation_window:
        return False
    if min(upd_hist) <= opts.conv_tol:
        return False
    mean = abs(sum(cost_hist)) / len(cost_hist)
    return (max(cost_hist) - min(cost_hist)) < 0.01 * max(mean, 1e-300)


def policy_iteration_1ch(problem: MixedProblem, K0, opts: Optional[SolveOptions] = None):
    """Single-channel policy iteration K' = -R^{-1} B^T P_K.

    Every iterate is certified feasible through the solvability of its
    evaluation Riccati equation. Converges to the analytic optimum.
    """
    if not problem.single_channel:
        raise SingleChannelError("not single-channel: Q2 != Qinf or R2 != Rinf")
    opts = opts or SolveOptions()
    K = validate_policy(problem, K0)
    trace = SolveTrace()
    upd_hist = deque(maxlen=opts.oscillation_window)
    cost_hist = deque(maxlen=opts.oscillation_window)
    try:
        _stabilizing_X(problem, K, allow_marginal=False)
    except InfeasiblePolicyError as exc:
        raise InfeasiblePolicyError(f"infeasible policy: starting point ({exc})")
    for it in range(opts.max_iters):
        try:
            K, sol = _stabilizing_P(problem, K, allow_marginal=False)
        except InfeasiblePolicyError as exc:
            trace.outcome = LEFT_FEASIBLE_SET
            trace.message = str(exc)
            return K, trace
        P = sol.X
        j = float(np.trace(P @ problem.W))
        K_next = -np.linalg.solve(problem.R2, problem.B.T @ P)
        upd = float(np.linalg.norm(K_next - K, "fro"))
        gnorm = float(np.linalg.norm(grad_1ch(problem, K), "fro"))
        trace.append(it, j, gnorm, _trace_norm(problem, K, opts), upd)
        upd_hist.append(upd)
        cost_hist.append(j)
        K = K_next
        if upd < opts.conv_tol:
            trace.outcome = CONVERGED
            return K, trace
        if _oscillating(upd_hist, cost_hist, opts):
            trace.outcome = OSCILLATING
            trace.message = "update norms stalled above tolerance on a flat cost"
            return K, trace
    trace.outcome = MAX_ITERS
    return K, trace


def policy_iteration_2ch(problem: MixedProblem, K0, opts: Optional[SolveOptions] = None):
    """Two-channel fixed-point iteration K' = -R2^{-1} B^T G (I + a^2 X G / b^2)^{-1}.

    Requires Rinf = alpha^2 R2. No line search or safeguarding: for tight
    beta the iterates can leave the feasible set (LeftFeasibleSet) or enter
    a limit cycle (Oscillating); both are reported through the trace.
    """
    opts = opts or SolveOptions()
    alpha = extract_alpha(problem)
    K = validate_policy(problem, K0)
    binv2 = _beta_inv2(problem.beta)
    trace = SolveTrace()
    upd_hist = deque(maxlen=opts.oscillation_window)
    cost_hist = deque(maxlen=opts.oscillation_window)
    try:
        _stabilizing_X(problem, K, allow_marginal=False)
    except InfeasiblePolicyError as exc:
        raise InfeasiblePolicyError(f"infeasible policy: starting point ({exc})")
    for it in range(opts.max_iters):
        try:
            K, sol = _stabilizing_X(problem, K, allow_marginal=False)
        except InfeasiblePolicyError as exc:
            trace.outcome = LEFT_FEASIBLE_SET
            trace.message = str(exc)
            return K, trace
        X = sol.X
        j = _mixed_trace(problem, K, X)
        A_tilde = problem.closed_loop(K) + binv2 * (X @ problem.S_of(K))
        G = solve_lyapunov_transposed(
            A_tilde, symmetrize(problem.Q2 + K.T @ problem.R2 @ K)
        )
        K_next = -np.linalg.solve(problem.R2, problem.B.T @ G) @ np.linalg.inv(
            np.eye(problem.n) + binv2 * alpha**2 * (X @ G)
        )
        upd = float(np.linalg.norm(K_next - K, "fro"))
        gnorm = float(
            np.linalg.norm(
                2.0
                * (problem.R2 @ K + problem.B.T @ G + binv2 * (problem.Rinf @ K @ X @ G))
                @ X,
                "fro",
            )
        )
        trace.append(it, j, gnorm, _trace_norm(problem, K, opts), upd)
        upd_hist.append(upd)
        cost_hist.append(j)
        K = K_next
        if upd < opts.conv_tol:
            trace.outcome = CONVERGED
            return K, trace
        if _oscillating(upd_hist, cost_hist, opts):
            trace.outcome = OSCILLATING
            trace.message = "update norms stalled above tolerance on a flat cost"
            return K, trace
    trace.outcome = MAX_ITERS
    return K, trace


# -- gradient descent ----------------------------------------------------


def _strict_cost(problem, K, channel):
    """Cost of a strictly interior policy; marginal or infeasible raises."""
    if channel == "one":
        K, sol = _stabilizing_P(problem, K, allow_marginal=False)
        return float(np.trace(sol.X @ problem.W))
    K, sol = _stabilizing_X(problem, K, allow_marginal=False)
    return _mixed_trace(problem, K, sol.X)


def _hits_marginal_band(problem, K) -> bool:
    """True when the closed-loop norm sits in the marginal band below beta.

    The norm bisection is only run for steps that already passed the Armijo
    test, so the guard costs one norm evaluation per accepted step.
    """
    if math.isinf(problem.beta):
        return False
    norm = hinf_norm(close_loop_channel(problem, K, "hinf"), tol=1e-8)
    return norm > problem.beta * (1.0 - 1e-6)


def _gradient(problem, K, channel):
    return grad_1ch(problem, K) if channel == "one" else grad_2ch(problem, K)


def gradient_descent(
    problem: MixedProblem,
    K0,
    opts: Optional[SolveOptions] = None,
    channel: str = "two",
):
    """Armijo-backtracking descent on the mixed cost with a feasibility guard.

    Trial steps that leave the feasible set or land on its marginal band
    are rejected and the step is halved; accepted steps strictly decrease
    the cost. Converged means grad_norm < conv_tol * (1 + |j|). Step
    underflow (below 1e-14) reports MaxIters with a diagnostic, which is
    the expected outcome when the infimum sits on the boundary.
    """
    if channel not in ("one", "two"):
        raise ValueError("channel must be 'one' or 'two'")
    if channel == "one" and not problem.single_channel:
        raise SingleChannelError("not single-channel: Q2 != Qinf or R2 != Rinf")
    opts = opts or SolveOptions()
    K = validate_policy(problem, K0)
    try:
        j = _strict_cost(problem, K, channel)
    except InfeasiblePolicyError as exc:
        raise InfeasiblePolicyError(f"infeasible policy: starting point ({exc})")
    step = opts.step_init
    trace = SolveTrace()
    for it in range(opts.max_iters):
        g = _gradient(problem, K, channel)
        gnorm = float(np.linalg.norm(g, "fro"))
        trace.append(it, j, gnorm, _trace_norm(problem, K, opts), step)
        if gnorm < opts.conv_tol * (1.0 + abs(j)):
            trace.outcome = CONVERGED
            return K, trace
        accepted = False
        while step > STEP_FLOOR:
            K_trial = K - step * g
            try:
                j_trial = _strict_cost(problem, K_trial, channel)
            except InfeasiblePolicyError:
                step *= opts.backtrack_ratio
                continue
            if j_trial <= j - opts.armijo_c * step * gnorm**2:
                if _hits_marginal_band(problem, K_trial):
                    step *= opts.backtrack_ratio
                    continue
                K, j = K_trial, j_trial
                accepted = True
                step = min(step / opts.backtrack_ratio, 1e6)
                break
            step *= opts.backtrack_ratio
        if not accepted:
            trace.outcome = MAX_ITERS
            trace.message = (
                "step underflow: no acceptable interior step above 1e-14 "
                "(infimum likely on the feasible-set boundary)"
            )
            return K, trace
    trace.outcome = MAX_ITERS
    trace.message = "iteration budget exhausted"
    return K, trace


# -- feasible-start sampling and multistart ------------------------------


def _central_policy(problem: MixedProblem):
    """Suboptimal robust policy from the beta-level Riccati equation.

    Feasible for any beta above beta*; the fallback when scaled-LQR
    sampling cannot enter the feasible set.
    """
    G = _beta_inv2(problem.beta) * problem.W - problem.B @ np.linalg.solve(
        problem.Rinf, problem.B.T
    )
    sol = _solve_dual_any(problem.A, symmetrize(G), problem.Qinf, "stabilizing")
    return -np.linalg.solve(problem.Rinf, problem.B.T @ sol.X)


def _is_interior(problem, K) -> bool:
    try:
        _stabilizing_X(problem, K, allow_marginal=False)
        return True
    except InfeasiblePolicyError:
        return False


def sample_feasible_policies(problem: MixedProblem, n_starts: int, seed: int):
    """Rejection-sample feasible policies around scaled LQR gains.

    Sweeps LQR gains for (Q2, c R2) over c = 1, 2, 1/2, 4, 1/4, ... until
    one is feasible, falling back to the beta-level robust policy, then
    perturbs within a ball whose radius shrinks until feasibility holds.
    Raises SamplerError after 1000 * n_starts failed trials (in particular
    when beta < beta*, where no feasible policy exists).
    """
    if n_starts <= 0:
        raise ValueError("n_starts must be positive")
    rng = np.random.RandomState(seed)
    budget = 1000 * n_starts
    trials = 0
    base = None
    factors = [1.0]
    for k in range(1, 11):
        factors += [2.0**k, 2.0**-k]
    for c in factors:
        trials += 1
        try:
            Kc, _, _ = solve_lqr(problem.A, problem.B, problem.Q2, c * problem.R2, problem.W)
        except NoStabilizingSolution:
            continue
        if _is_interior(problem, Kc):
            base = Kc
            break
    if base is None:
        trials += 1
        try:
            Kc = _central_policy(problem)
        except NoStabilizingSolution:
            raise SamplerError(
                "sampler failed: no feasible policy found (is beta > beta*?)"
            )
        if _is_interior(problem, Kc):
            base = Kc
    if base is None:
        raise SamplerError("sampler failed: no feasible policy found (is beta > beta*?)")
    starts = []
    base_radius = 0.25 * (1.0 + float(np.linalg.norm(base, "fro")))
    for _ in range(n_starts):
        radius = base_radius
        while True:
            trials += 1
            if trials > budget:
                raise SamplerError(
                    f"sampler failed: exceeded {budget} trials before "
                    f"collecting {n_starts} feasible starts"
                )
            G = rng.randn(problem.m, problem.n)
            G /= max(np.linalg.norm(G, "fro"), 1e-300)
            K_try = base + radius * G
            if _is_interior(problem, K_try):
                starts.append(K_try)
                break
            radius *= 0.5
    return starts


@dataclass(frozen=True)
class MultistartReport:
    n_starts: int
    n_converged: int
    costs: list
    outcomes: list
    policies: list
    max_rel_gap: float
    best_policy: Optional[np.ndarray]
    best_cost: float


def multistart_global_check(
    problem: MixedProblem,
    n_starts: int,
    seed: int,
    channel: Optional[str] = None,
    opts: Optional[SolveOptions] = None,
) -> MultistartReport:
    """Gradient descent from many feasible starts; reports the converged-cost spread.

    A near-zero max pairwise relative gap across converged runs is the
    statistical signature of a landscape without spurious stationary
    points. Runs fan out over worker threads (capped by MIXSYN_THREADS)
    and the report is deterministic given (problem, n_starts, seed).
    """
    channel = channel or ("one" if problem.single_channel else "two")
    opts = opts or SolveOptions(max_iters=2000, track_norms=False)
    starts = sample_feasible_policies(problem, n_starts, seed)

    def run(idx):
        K, trace = gradient_descent(problem, starts[idx], opts, channel=channel)
        j = _strict_cost(problem, K, channel)
        return idx, trace.outcome, j, K

    results = [None] * n_starts
    with ThreadPoolExecutor(max_workers=min(worker_count(), n_starts)) as pool:
        for idx, outcome, j, K in pool.map(run, range(n_starts)):
            results[idx] = (outcome, j, K)
    outcomes = [r[0] for r in results]
    costs = [r[1] for r in results]
    policies = [r[2] for r in results]
    converged = [j for (o, j, _) in results if o == CONVERGED]
    if len(converged) >= 2:
        gap = (max(converged) - min(converged)) / max(abs(min(converged)), 1e-300)
    else:
        gap = math.nan
    best_idx = int(np.argmin(costs))
    return MultistartReport(
        n_starts=n_starts,
        n_converged=len(converged),
        costs=costs,
        outcomes=outcomes,
        policies=policies,
        max_rel_gap=gap,
        best_policy=results[best_idx][2],
        best_cost=costs[best_idx],
    )
