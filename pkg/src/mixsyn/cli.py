"""Command-line front-end.

Subcommands: solve, sweep, betastar, verify, gen, feasible, hinf-norm.
Exit codes: 0 success, 2 infeasibility or assumption failures, 3 solver
non-convergence, 4 I/O or parse errors.
"""
import argparse
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .cost import eval_cost_2ch, evaluate_policy
from .errors import (
    AssumptionError,
    InfeasiblePolicyError,
    MixsynError,
    NoStabilizingSolution,
    ParseError,
    SamplerError,
    SingleChannelError,
    UnstableSystemError,
)
from .hinf import beta_star, close_loop_channel, hinf_norm, is_feasible
from .instances import (
    generate_instance,
    load_instance,
    problem_to_dict,
    save_instance,
)
from .optim import (
    CONVERGED,
    SolveOptions,
    gradient_descent,
    policy_iteration_1ch,
    policy_iteration_2ch,
    sample_feasible_policies,
    solve_analytic_1ch,
    worker_count,
)
from .verify import run_verification

__all__ = ["main", "build_parser"]


def _add_common(p):
    p.add_argument("--beta", type=float, default=None, help="override the instance beta")
    p.add_argument("--tol", type=float, default=None, help="tolerance override")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument(
        "--check-assumptions",
        action="store_true",
        help="verify the model assumptions (including beta > beta*) at load",
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mixsyn",
        description="Mixed H2/H-infinity state-feedback synthesis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an instance and report the policy")
    p.add_argument("instance", help="instance file or bundled name")
    p.add_argument("--method", choices=("are", "pi", "gd"), required=True)
    chan = p.add_mutually_exclusive_group()
    chan.add_argument("--single-channel", dest="channel", action="store_const", const="one")
    chan.add_argument("--two-channel", dest="channel", action="store_const", const="two")
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("-o", "--output", default=None, help="write the JSON report here")
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="evaluate the cost over a 2-D policy grid")
    p.add_argument("instance")
    p.add_argument("--spec", required=True, help="JSON sweep specification")
    p.add_argument("-o", "--output", default="-", help="CSV output path (default stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("betastar", help="estimate the best achievable H-infinity norm")
    p.add_argument("instance")
    _add_common(p)
    p.set_defaults(func=cmd_betastar)

    p = sub.add_parser("verify", help="run the property-suite self check")
    p.add_argument("instance")
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen", help="generate a random instance file")
    p.add_argument("n", type=int)
    p.add_argument("m", type=int)
    p.add_argument("--two-channel", action="store_true")
    p.add_argument("-o", "--output", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("feasible", help="test a policy against the robustness constraint")
    p.add_argument("instance")
    p.add_argument("--policy", required=True, help="JSON array (inline or file path)")
    _add_common(p)
    p.set_defaults(func=cmd_feasible)

    p = sub.add_parser("hinf-norm", help="closed-loop H-infinity norm of a policy")
    p.add_argument("instance")
    p.add_argument("--policy", required=True, help="JSON array (inline or file path)")
    _add_common(p)
    p.set_defaults(func=cmd_hinf_norm)

    return parser


def _load(args, single_channel=False):
    return load_instance(
        args.instance,
        beta=args.beta,
        single_channel=single_channel,
        check_assumptions=args.check_assumptions,
    )


def _parse_policy(arg, problem):
    text = arg
    path = Path(arg)
    if path.exists():
        text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"parse error in policy: {exc.msg}")
    K = np.asarray(data, dtype=float).reshape(problem.m, problem.n)
    return K


def _solve_dispatch(problem, method, channel, seed, opts):
    if method == "are":
        t0 = time.perf_counter()
        K, _ = solve_analytic_1ch(problem)
        elapsed = time.perf_counter() - t0
        return K, CONVERGED, 0, elapsed, ""
    K0 = sample_feasible_policies(problem, 1, seed)[0]
    t0 = time.perf_counter()
    if method == "pi":
        runner = policy_iteration_1ch if channel == "one" else policy_iteration_2ch
        K, trace = runner(problem, K0, opts)
    else:
        K, trace = gradient_descent(problem, K0, opts, channel=channel)
    elapsed = time.perf_counter() - t0
    return K, trace.outcome, len(trace), elapsed, trace.message


def cmd_solve(args):
    channel = args.channel
    problem = _load(args, single_channel=(channel == "one"))
    if channel is None:
        channel = "one" if problem.single_channel else "two"
    if channel == "one" and not problem.single_channel:
        raise AssumptionError(
            "Assumption 2", "single-channel solve requires Q2 = Qinf and R2 = Rinf"
        )
    if args.method == "are" and channel != "one":
        print("error: --method are requires --single-channel", file=sys.stderr)
        return 2
    opts_kwargs = {}
    if args.max_iters:
        opts_kwargs["max_iters"] = args.max_iters
    if args.tol:
        opts_kwargs["conv_tol"] = args.tol
    opts = SolveOptions(**opts_kwargs)
    K, outcome, iters, elapsed, message = _solve_dispatch(
        problem, args.method, channel, args.seed, opts
    )
    rep = evaluate_policy(problem, K)
    report = {
        "instance_name": problem.name,
        "method": args.method,
        "channel": channel,
        "beta": problem.beta,
        "outcome": outcome,
        "iterations": iters,
        "time_s": elapsed,
        "K": K.tolist(),
        "j_mix": rep.j_mix,
        "sqrt_j_mix": math.sqrt(rep.j_mix) if rep.j_mix == rep.j_mix and rep.j_mix >= 0 else math.nan,
        "h2_norm": rep.h2_norm,
        "hinf_norm": rep.hinf_norm,
        "grad_norm": rep.grad_norm,
        "feasible": rep.feasible,
        "marginal": rep.marginal,
        "instance": problem_to_dict(problem),
    }
    if args.output:
        Path(args.output).write_text(json.dumps(report, indent=1) + "\n")
    if args.json:
        print(json.dumps(report, indent=1))
    else:
        print(f"instance   : {problem.name} (beta={problem.beta:g}, {channel}-channel)")
        print(f"method     : {args.method}")
        print(f"outcome    : {outcome}" + (f"  [{message}]" if message else ""))
        print(f"iterations : {iters}")
        print(f"time       : {elapsed:.4f} s")
        print(f"sqrt(Jmix) : {report['sqrt_j_mix']:.6g}")
        print(f"H2 norm    : {rep.h2_norm:.6g}")
        print(f"Hinf norm  : {rep.hinf_norm:.6g}")
        print(f"grad norm  : {rep.grad_norm:.3e}")
        print("K:")
        for row in K:
            print("  " + "  ".join(f"{x: .10g}" for x in row))
    if outcome != CONVERGED:
        print(f"warning: solver did not converge ({outcome}) {message}", file=sys.stderr)
        return 3
    return 0


def _sweep_spec(path, problem):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"parse error in sweep spec: {exc.msg}")
    m, n = problem.m, problem.n
    base = np.asarray(data.get("base", np.zeros((m, n))), dtype=float).reshape(m, n)
    try:
        dir1 = np.asarray(data["dir1"], dtype=float).reshape(m, n)
        dir2 = np.asarray(data["dir2"], dtype=float).reshape(m, n)
        t1 = data["t1"]
        t2 = data["t2"]
    except KeyError as exc:
        raise ParseError(f"parse error in sweep spec: missing field {exc}")
    if np.linalg.norm(dir1) == 0 or np.linalg.norm(dir2) == 0:
        raise ParseError("parse error in sweep spec: directions must be nonzero")
    lo1, hi1, c1 = float(t1[0]), float(t1[1]), int(t1[2])
    lo2, hi2, c2 = float(t2[0]), float(t2[1]), int(t2[2])
    if c1 < 2 or c2 < 2:
        raise ParseError("parse error in sweep spec: grid counts must be >= 2")
    return base, dir1, dir2, np.linspace(lo1, hi1, c1), np.linspace(lo2, hi2, c2)


def cmd_sweep(args):
    problem = _load(args)
    base, dir1, dir2, ts1, ts2 = _sweep_spec(args.spec, problem)
    grid = [(i, j) for i in range(len(ts1)) for j in range(len(ts2))]

    def eval_point(idx):
        i, j = idx
        K = base + ts1[i] * dir1 + ts2[j] * dir2
        rep = is_feasible(problem, K, norm_tol=1e-8)
        if rep.feasible:
            jmix, _ = eval_cost_2ch(problem, K)
        else:
            jmix = math.nan
        return i, j, rep.feasible, jmix, rep.hinf_norm

    rows = []
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        rows = sorted(pool.map(eval_point, grid))
    lines = ["t1,t2,feasible,j_mix,hinf_norm"]
    for i, j, feas, jmix, norm in rows:
        lines.append(
            f"{float(ts1[i])!r},{float(ts2[j])!r},{int(feas)},"
            f"{float(jmix)!r},{float(norm)!r}"
        )
    text = "\n".join(lines) + "\n"
    if args.output == "-":
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text)
        print(f"wrote {len(rows)} grid points to {args.output}")
    return 0


def cmd_betastar(args):
    problem = _load(args)
    tol = args.tol or 1e-4
    value = beta_star(problem, tol=tol)
    if args.json:
        print(json.dumps({"beta_star": value, "tol": tol}))
    else:
        print(f"{value:.10g}")
    return 0


def cmd_verify(args):
    problem = _load(args)
    results, ok = run_verification(problem, seed=args.seed)
    if args.json:
        print(
            json.dumps(
                {
                    "ok": ok,
                    "groups": [
                        {
                            "name": r.name,
                            "passed": r.passed,
                            "failed": r.failed,
                            "first_failure": r.first_failure,
                        }
                        for r in results
                    ],
                }
            )
        )
    else:
        for r in results:
            status = "PASS" if r.ok else "FAIL"
            line = f"{r.name:<22} {status}  ({r.passed} passed, {r.failed} failed)"
            if r.first_failure:
                line += f"  first failure: {r.first_failure}"
            print(line)
        print("verification", "PASSED" if ok else "FAILED")
    return 0 if ok else 1


def cmd_gen(args):
    problem = generate_instance(args.n, args.m, args.seed, two_channel=args.two_channel)
    out = args.output or f"{problem.name}.json"
    save_instance(problem, out)
    if args.json:
        print(json.dumps({"path": str(out), "beta": problem.beta, "name": problem.name}))
    else:
        print(f"wrote {out} (beta={problem.beta:.6g})")
    return 0


def cmd_feasible(args):
    problem = _load(args)
    K = _parse_policy(args.policy, problem)
    rep = is_feasible(problem, K, norm_tol=args.tol or 1e-9)
    if args.json:
        print(
            json.dumps(
                {
                    "feasible": rep.feasible,
                    "marginal": rep.marginal,
                    "stable": rep.stable,
                    "hinf_norm": rep.hinf_norm,
                    "beta": problem.beta,
                }
            )
        )
    else:
        verdict = "feasible" if rep.feasible else "infeasible"
        if rep.marginal:
            verdict += " (marginal)"
        print(f"{verdict}: Hinf norm {rep.hinf_norm:.8g} vs beta {problem.beta:g}")
    return 0 if rep.feasible else 2


def cmd_hinf_norm(args):
    problem = _load(args)
    K = _parse_policy(args.policy, problem)
    value = hinf_norm(close_loop_channel(problem, K, "hinf"), tol=args.tol or 1e-6)
    if args.json:
        print(json.dumps({"hinf_norm": value}))
    else:
        print(f"{value:.10g}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        AssumptionError,
        InfeasiblePolicyError,
        NoStabilizingSolution,
        SamplerError,
        SingleChannelError,
        UnstableSystemError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except MixsynError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
