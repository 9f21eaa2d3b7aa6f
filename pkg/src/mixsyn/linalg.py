"""Dense real-matrix kernel: stability tests and Lyapunov solving.

Everything here is a pure function of its inputs; no global state.
"""
import numpy as np
import scipy.linalg as sla

from .errors import DimensionMismatch, UnstableSystemError

__all__ = [
    "spectral_abscissa",
    "is_hurwitz",
    "solve_lyapunov",
    "solve_lyapunov_transposed",
    "symmetrize",
    "as_symmetric",
    "sqrtm_psd",
    "min_eig_sym",
]

# SymMatrix asymmetry tolerance, relative to max |entry|.
SYM_TOL = 1e-12


def _as_square(M, name="matrix"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"dimension mismatch: {name} must be square, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def symmetrize(M):
    """Return (M + M^T)/2."""
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def as_symmetric(M, name="matrix"):
    """Validate that M is symmetric within tolerance and return it symmetrized."""
    M = _as_square(M, name)
    scale = 1.0 + np.abs(M).max(initial=0.0)
    skew = np.abs(M - M.T).max(initial=0.0)
    if skew > SYM_TOL * scale:
        raise ValueError(f"{name} is not symmetric (max asymmetry {skew:.3e})")
    return symmetrize(M)


def spectral_abscissa(M) -> float:
    """Largest real part over the eigenvalues of a square matrix."""
    M = _as_square(M)
    return float(np.linalg.eigvals(M).real.max())


def is_hurwitz(M, margin: float = 0.0) -> bool:
    """True iff every eigenvalue of M has real part < -margin."""
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    return spectral_abscissa(M) < -margin


def min_eig_sym(M) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    return float(np.linalg.eigvalsh(symmetrize(M)).min())


def sqrtm_psd(M):
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in [-1e-12 * scale, 0) are treated as round-off and zeroed;
    anything more negative raises.
    """
    M = as_symmetric(M)
    w, V = np.linalg.eigh(M)
    scale = 1.0 + max(0.0, w.max(initial=0.0))
    if w.min(initial=0.0) < -1e-12 * scale:
        raise ValueError(f"matrix is not positive semidefinite (min eig {w.min():.3e})")
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.T


def _lyapunov_residual(M, X, C):
    return float(np.linalg.norm(M @ X + X @ M.T + C, "fro"))


def solve_lyapunov(M, C):
    """Solve M X + X M^T + C = 0 for symmetric X, with M Hurwitz.

    Parameters
    ----------
    M : (n, n) array
        Hurwitz coefficient matrix.
    C : (n, n) array
        Symmetric right-hand side.

    Returns
    -------
    X : (n, n) ndarray, symmetric, with residual
        ||M X + X M^T + C|| <= 1e-10 * (1 + ||C||).
    """
    M = _as_square(M, "M")
    C = as_symmetric(C, "C")
    if M.shape != C.shape:
        raise DimensionMismatch(f"dimension mismatch: M {M.shape} vs C {C.shape}")
    if not is_hurwitz(M):
        raise UnstableSystemError("unstable coefficient: M is not Hurwitz")
    # scipy solves M X + X M^T = Q (Bartels-Stewart)
    X = symmetrize(sla.solve_continuous_lyapunov(M, -C))
    bound = 1e-10 * (1.0 + np.linalg.norm(C, "fro"))
    if _lyapunov_residual(M, X, C) > 0.25 * bound:
        # one pass of iterative refinement
        R = symmetrize(M @ X + X @ M.T + C)
        X = symmetrize(X + sla.solve_continuous_lyapunov(M, -R))
    return X


def solve_lyapunov_transposed(M, C):
    """Solve M^T X + X M + C = 0 for symmetric X, with M Hurwitz."""
    M = _as_square(M, "M")
    return solve_lyapunov(M.T, C)
