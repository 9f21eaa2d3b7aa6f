"""Problem data for mixed H2/H-infinity state-feedback design.

A MixedProblem bundles the plant (A, B, Bw), the H2 performance weights
(Q2, R2), the H-infinity robustness weights (Qinf, Rinf), and the
robustness level beta. The model assumptions enforced here are:

  Assumption 1: (A, B) stabilizable, and beta > beta* (the best achievable
                closed-loop H-infinity norm); the latter is checked on
                demand because it requires a bisection.
  Assumption 2: W = Bw Bw^T, R2 and Rinf positive definite; Q2 positive
                semidefinite. Strict definiteness of Qinf is only required
                by the theory and is checked by ``check_assumptions``; load
                accepts semidefinite Qinf so degenerate single-channel
                instances remain usable.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionError, DimensionMismatch
from .linalg import as_symmetric, min_eig_sym, sqrtm_psd

__all__ = ["MixedProblem", "validate_policy"]


def _eig_floor(M):
    w = np.linalg.eigvalsh(M)
    return float(w.min()), float(w.max())


@dataclass(frozen=True)
class MixedProblem:
    A: np.ndarray
    B: np.ndarray
    Bw: np.ndarray
    Q2: np.ndarray
    R2: np.ndarray
    Qinf: np.ndarray
    Rinf: np.ndarray
    beta: float
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        Bw = np.atleast_2d(np.asarray(self.Bw, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionMismatch(f"dimension mismatch: A must be square, got {A.shape}")
        if B.shape[0] != n or Bw.shape[0] != n:
            raise DimensionMismatch("dimension mismatch: B and Bw must have n rows")
        m = B.shape[1]
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "Bw", Bw)
        for attr, dim, label in (
            ("Q2", n, "Q_2"),
            ("R2", m, "R_2"),
            ("Qinf", n, "Q_infinity"),
            ("Rinf", m, "R_infinity"),
        ):
            M = as_symmetric(np.atleast_2d(np.asarray(getattr(self, attr), dtype=float)), label)
            if M.shape != (dim, dim):
                raise DimensionMismatch(f"dimension mismatch: {label} must be {dim}x{dim}")
            object.__setattr__(self, attr, M)
        for mat, label in ((A, "A"), (B, "B"), (Bw, "Bw")):
            if not np.all(np.isfinite(mat)):
                raise ValueError(f"{label} has non-finite entries")
        if not (self.beta > 0):
            raise ValueError("beta must be positive")

        W = Bw @ Bw.T
        lo, hi = _eig_floor(W)
        if lo <= 1e-10 * (1.0 + hi):
            raise AssumptionError("Assumption 2", "W not positive definite")
        for attr, label in (("R2", "R_2"), ("Rinf", "R_infinity")):
            lo, hi = _eig_floor(getattr(self, attr))
            if lo <= 1e-10 * (1.0 + hi):
                raise AssumptionError("Assumption 2", f"{label} not positive definite")
        for attr, label in (("Q2", "Q_2"), ("Qinf", "Q_infinity")):
            lo, hi = _eig_floor(getattr(self, attr))
            if lo < -1e-10 * (1.0 + hi):
                raise AssumptionError("Assumption 2", f"{label} not positive semidefinite")
        self._cache["W"] = W
        self._certify_stabilizable()

    def _certify_stabilizable(self):
        # PBH test on the closed right half-plane eigenvalues
        n = self.n
        ev = np.linalg.eigvals(self.A)
        scale = 1.0 + float(np.abs(ev).max())
        for lam in ev:
            if lam.real < -1e-10 * scale:
                continue
            pencil = np.hstack([self.A - lam * np.eye(n), self.B])
            s = np.linalg.svd(pencil, compute_uv=False)
            if s[-1] <= 1e-10 * scale:
                raise AssumptionError("Assumption 1", "(A, B) not stabilizable")

    # -- dimensions ----------------------------------------------------
    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.Bw.shape[1]

    # -- derived data, cached ------------------------------------------
    @property
    def W(self) -> np.ndarray:
        return self._cache["W"]

    def _sqrt(self, attr):
        key = f"sqrt_{attr}"
        if key not in self._cache:
            self._cache[key] = sqrtm_psd(getattr(self, attr))
        return self._cache[key]

    @property
    def Q2_sqrt(self):
        return self._sqrt("Q2")

    @property
    def R2_sqrt(self):
        return self._sqrt("R2")

    @property
    def Qinf_sqrt(self):
        return self._sqrt("Qinf")

    @property
    def Rinf_sqrt(self):
        return self._sqrt("Rinf")

    @property
    def single_channel(self) -> bool:
        """True when the two performance channels coincide."""
        tol_q = 1e-12 * (1.0 + np.abs(self.Qinf).max())
        tol_r = 1e-12 * (1.0 + np.abs(self.Rinf).max())
        return bool(
            np.abs(self.Q2 - self.Qinf).max() <= tol_q
            and np.abs(self.R2 - self.Rinf).max() <= tol_r
        )

    def S_of(self, K) -> np.ndarray:
        """Robustness output weight Qinf + K^T Rinf K for a policy."""
        return self.Qinf + K.T @ self.Rinf @ K

    def closed_loop(self, K) -> np.ndarray:
        return self.A + self.B @ K

    def with_beta(self, beta: float) -> "MixedProblem":
        return MixedProblem(
            A=self.A, B=self.B, Bw=self.Bw, Q2=self.Q2, R2=self.R2,
            Qinf=self.Qinf, Rinf=self.Rinf, beta=float(beta), name=self.name,
        )

    def beta_star(self, tol: float = 1e-4) -> float:
        """Best achievable closed-loop H-infinity norm (cached)."""
        key = ("beta_star", tol)
        if key not in self._cache:
            from .hinf import beta_star

            self._cache[key] = beta_star(self, tol=tol)
        return self._cache[key]

    def check_assumptions(self, beta_tol: float = 1e-4):
        """Raise AssumptionError unless the strict theory assumptions hold."""
        lo, hi = _eig_floor(self.Qinf)
        if lo <= 1e-10 * (1.0 + hi):
            raise AssumptionError("Assumption 2", "Q_infinity not positive definite")
        if np.isfinite(self.beta):
            bs = self.beta_star(tol=beta_tol)
            if self.beta <= bs + beta_tol:
                raise AssumptionError(
                    "Assumption 1", f"beta <= beta_star ({self.beta:.6g} <= {bs:.6g})"
                )


def validate_policy(problem: MixedProblem, K) -> np.ndarray:
    """Check a gain against the problem dimensions and return it as float array."""
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if K.shape != (problem.m, problem.n):
        raise DimensionMismatch(
            f"dimension mismatch: policy must be {problem.m}x{problem.n}, got {K.shape}"
        )
    if not np.all(np.isfinite(K)):
        raise ValueError("policy has non-finite entries")
    return K
