"""Mixed H2/H-infinity state-feedback synthesis via policy optimization.

Library layers, bottom up: ``linalg`` (Lyapunov kernel), ``riccati``
(Hamiltonian Riccati solvers with stabilizing/minimal selection), ``hinf``
(norm, feasibility, beta*), ``cost`` (mixed cost and exact gradients),
``optim`` (closed forms, policy iteration, guarded gradient descent),
``ecl`` (convex lifting machinery), ``instances`` (file I/O and random
generation), ``verify`` (property self-checks), and ``cli``.
"""
from .cost import (
    CostReport,
    OptimalityReport,
    check_optimality_2ch,
    eval_cost_1ch,
    eval_cost_2ch,
    eval_cost_boundary,
    evaluate_policy,
    extract_alpha,
    fd_gradient,
    grad_1ch,
    grad_2ch,
    h2_norm,
)
from .ecl import (
    CvxPoint,
    LiftedPoint,
    certify_nondegenerate,
    lift_solution_roundtrip,
    member_cvx,
    member_lifted,
    phi,
    psi,
)
from .errors import (
    AssumptionError,
    DimensionMismatch,
    InfeasiblePolicyError,
    MixsynError,
    NoStabilizingSolution,
    ParseError,
    SamplerError,
    SingleChannelError,
    UnstableSystemError,
)
from .hinf import FeasibilityReport, Ssm, beta_star, close_loop_channel, hinf_norm, is_feasible
from .instances import (
    generate_instance,
    load_instance,
    problem_from_dict,
    problem_to_dict,
    save_instance,
)
from .linalg import (
    is_hurwitz,
    solve_lyapunov,
    solve_lyapunov_transposed,
    spectral_abscissa,
    sqrtm_psd,
    symmetrize,
)
from .optim import (
    CONVERGED,
    LEFT_FEASIBLE_SET,
    MAX_ITERS,
    OSCILLATING,
    MultistartReport,
    SolveOptions,
    SolveTrace,
    gradient_descent,
    multistart_global_check,
    policy_iteration_1ch,
    policy_iteration_2ch,
    sample_feasible_policies,
    solve_analytic_1ch,
    solve_lqr,
)
from .problem import MixedProblem
from .riccati import (
    RiccatiSolution,
    care_residual,
    newton_kleinman,
    solve_care_dual,
    solve_care_primal,
)
from .verify import run_verification

__version__ = "0.1.0"
