"""Instance files: load, save, generate, and the bundled fixtures.

An instance file is JSON with explicit dimensions and row-major matrix
arrays:

    {"name": str, "n": int, "m": int, "p": int,
     "A": [...], "B": [...], "Bw": [...],
     "Q2": [...], "R2": [...], "Qinf": [...], "Rinf": [...],
     "beta": float, "single_channel": bool (optional)}

Matrix arrays are flat row-major lists validated against the declared
dimensions. Loading constructs a validated MixedProblem; violated model
assumptions are reported by name.
"""
import json
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ParseError
from .hinf import close_loop_channel, hinf_norm
from .optim import solve_lqr
from .problem import MixedProblem

__all__ = [
    "load_instance",
    "save_instance",
    "problem_to_dict",
    "problem_from_dict",
    "generate_instance",
    "bundled_names",
    "resolve_instance_path",
]

_BUNDLED = (
    "instance0",
    "instance0_1ch",
    "example1",
    "example2",
    "example3",
    "example3_1ch",
)


def bundled_names():
    return list(_BUNDLED)


def resolve_instance_path(name_or_path, single_channel: bool = False):
    """Resolve a bundled fixture name or a filesystem path.

    With single_channel=True a bundled name "x" resolves to "x_1ch" when
    that variant exists.
    """
    p = Path(str(name_or_path))
    if p.exists():
        return p
    base = str(name_or_path)
    if single_channel and not base.endswith("_1ch") and f"{base}_1ch" in _BUNDLED:
        base = f"{base}_1ch"
    if base in _BUNDLED:
        ref = resources.files("mixsyn").joinpath(f"data/{base}.json")
        with resources.as_file(ref) as fp:
            return Path(fp)
    raise ParseError(f"no such instance file or bundled name: {name_or_path!r}")


def _matrix(d, key, rows, cols):
    if key not in d:
        raise ParseError(f"parse error: missing field {key!r}")
    arr = np.asarray(d[key], dtype=float)
    flat = arr.reshape(-1)
    if flat.size != rows * cols:
        raise ParseError(
            f"parse error: field {key!r} has {flat.size} entries, expected {rows * cols}"
        )
    return flat.reshape(rows, cols)


def problem_from_dict(d: dict) -> MixedProblem:
    for key in ("n", "m", "p", "beta"):
        if key not in d:
            raise ParseError(f"parse error: missing field {key!r}")
    try:
        n, m, p = int(d["n"]), int(d["m"]), int(d["p"])
        beta = float(d["beta"])
    except (TypeError, ValueError) as exc:
        raise ParseError(f"parse error: bad scalar field ({exc})")
    A = _matrix(d, "A", n, n)
    B = _matrix(d, "B", n, m)
    Bw = _matrix(d, "Bw", n, p)
    Q2 = _matrix(d, "Q2", n, n)
    R2 = _matrix(d, "R2", m, m)
    Qinf = _matrix(d, "Qinf", n, n)
    Rinf = _matrix(d, "Rinf", m, m)
    problem = MixedProblem(
        A=A, B=B, Bw=Bw, Q2=Q2, R2=R2, Qinf=Qinf, Rinf=Rinf,
        beta=beta, name=str(d.get("name", "")),
    )
    if d.get("single_channel") and not problem.single_channel:
        raise ParseError(
            "parse error: file declares single_channel but the channels differ"
        )
    return problem


def problem_to_dict(problem: MixedProblem) -> dict:
    return {
        "name": problem.name,
        "n": problem.n,
        "m": problem.m,
        "p": problem.p,
        "A": problem.A.reshape(-1).tolist(),
        "B": problem.B.reshape(-1).tolist(),
        "Bw": problem.Bw.reshape(-1).tolist(),
        "Q2": problem.Q2.reshape(-1).tolist(),
        "R2": problem.R2.reshape(-1).tolist(),
        "Qinf": problem.Qinf.reshape(-1).tolist(),
        "Rinf": problem.Rinf.reshape(-1).tolist(),
        "beta": problem.beta,
        "single_channel": problem.single_channel,
    }


def load_instance(
    name_or_path,
    beta: float = None,
    single_channel: bool = False,
    check_assumptions: bool = False,
) -> MixedProblem:
    """Load and validate an instance file (or bundled fixture name)."""
    path = resolve_instance_path(name_or_path, single_channel=single_channel)
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"parse error in {path}: line {exc.lineno}: {exc.msg}")
    problem = problem_from_dict(data)
    if beta is not None:
        problem = problem.with_beta(beta)
    if single_channel and not problem.single_channel:
        raise ParseError(
            f"parse error: instance {problem.name or path} is not single-channel"
        )
    if check_assumptions:
        problem.check_assumptions()
    return problem


def save_instance(problem: MixedProblem, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(problem_to_dict(problem), indent=1) + "\n")
    return path


def generate_instance(
    n: int, m: int, seed: int, two_channel: bool = False, name: str = ""
) -> MixedProblem:
    """Random stabilizable instance at a comfortably feasible beta.

    A is scaled white noise shifted to a mild instability (spectral
    abscissa 0.25) so stabilization is nontrivial; W = I. The default
    weights make the instance single-channel (Q = R = I); two_channel
    instead sets Q2 = I, R2 = Rinf/4. beta is set to 1.5x the closed-loop
    norm of the robustness-weight LQR policy, which keeps beta > beta*.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be at least 1")
    rng = np.random.RandomState(seed)
    for _ in range(50):
        A = rng.randn(n, n) / np.sqrt(n)
        A += (0.25 - np.linalg.eigvals(A).real.max()) * np.eye(n)
        B = rng.randn(n, m) / np.sqrt(m)
        Bw = np.eye(n)
        Qinf = np.eye(n)
        Rinf = np.eye(m)
        if two_channel:
            Q2, R2 = np.eye(n), 0.25 * np.eye(m)
        else:
            Q2, R2 = Qinf, Rinf
        try:
            K, _, _ = solve_lqr(A, B, Qinf, Rinf, Bw @ Bw.T)
        except Exception:
            continue
        probe = MixedProblem(
            A=A, B=B, Bw=Bw, Q2=Q2, R2=R2, Qinf=Qinf, Rinf=Rinf, beta=1.0,
            name=name or f"gen_n{n}_m{m}_seed{seed}",
        )
        norm = hinf_norm(close_loop_channel(probe, K, "hinf"), tol=1e-6)
        return probe.with_beta(1.5 * norm)
    raise RuntimeError("failed to generate a stabilizable instance")
