"""Dense complex matrix substrate.

Hermitian eigendecomposition, PSD projection, partial transposes on block
matrices, null spaces and the Hilbert-Schmidt inner product, plus the random
ensembles used throughout the test suites. All matrices are plain complex
numpy arrays; block matrices of shape (n*d, n*d) carry their block structure
``(n, d)`` as explicit arguments.

Conventions: ``vec`` is row-major (C order) flattening, so the HS inner
product <A, B> = tr(A^dag B) equals ``vec(A).conj() @ vec(B)``.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "NotHermitianError",
    "DimensionMismatchError",
    "dagger",
    "vec",
    "unvec",
    "hs_inner",
    "hermitian_defect",
    "assert_hermitian",
    "eigh_checked",
    "min_eigenvalue",
    "psd_project",
    "partial_transpose",
    "null_space",
    "swap_matrix",
    "max_entangled_state",
    "random_complex",
    "random_hermitian",
    "random_psd",
    "random_unitary",
]

#: Default absolute tolerance; Choi matrices at desk scale have norms O(d).
DEFAULT_TOL = 1e-8

#: Hermitian defect beyond which inputs are rejected rather than symmetrized.
HERMITIAN_DEFECT_TOL = 1e-10


class NotHermitianError(ValueError):
    """Raised when an operation requires a Hermitian matrix and the input
    has a relative defect ||M - M^dag||_F larger than the admitted bound."""

    def __init__(self, defect: float, message: str = ""):
        self.defect = defect
        super().__init__(message or f"matrix is not Hermitian (defect {defect:.3e})")


class DimensionMismatchError(ValueError):
    """Raised on incompatible matrix / map dimensions."""


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def vec(m: np.ndarray) -> np.ndarray:
    """Row-major vectorization."""
    return np.asarray(m).reshape(-1)


def unvec(v: np.ndarray, rows: int, cols: int | None = None) -> np.ndarray:
    if cols is None:
        cols = rows
    return np.asarray(v).reshape(rows, cols)


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product tr(a^dag b)."""
    return complex(np.vdot(a, b))


def hermitian_defect(m: np.ndarray) -> float:
    """Relative Hermitian defect ||M - M^dag||_F / max(1, ||M||_F)."""
    m = np.asarray(m)
    return float(np.linalg.norm(m - dagger(m)) / max(1.0, np.linalg.norm(m)))


def assert_hermitian(m: np.ndarray, tol: float = HERMITIAN_DEFECT_TOL) -> np.ndarray:
    """Return the symmetrized (M + M^dag)/2, rejecting defects above tol.

    Silent symmetrization of badly non-Hermitian data hides bugs, so inputs
    with relative defect beyond ``tol`` raise NotHermitianError.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    defect = hermitian_defect(m)
    if defect > tol:
        raise NotHermitianError(defect)
    return 0.5 * (m + dagger(m))


def eigh_checked(m: np.ndarray, tol: float = HERMITIAN_DEFECT_TOL):
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, unitary of eigenvectors as columns).
    Non-Hermitian inputs (relative defect > tol) are rejected.
    """
    return np.linalg.eigh(assert_hermitian(m, tol))


def min_eigenvalue(m: np.ndarray, tol: float = HERMITIAN_DEFECT_TOL) -> float:
    return float(eigh_checked(m, tol)[0][0])


def psd_project(m: np.ndarray, tol: float = HERMITIAN_DEFECT_TOL) -> np.ndarray:
    """Nearest positive semidefinite matrix in Frobenius norm.

    Clips negative eigenvalues to zero in the eigenbasis of the symmetrized
    input; idempotent and a metric projection onto the PSD cone.
    """
    w, u = eigh_checked(m, tol)
    w = np.maximum(w, 0.0)
    out = (u * w) @ dagger(u)
    return 0.5 * (out + dagger(out))


def partial_transpose(m: np.ndarray, n: int, d: int, which: str = "outer") -> np.ndarray:
    """Partial transpose of an element of M_n(M_d) given as an (nd, nd) array.

    ``outer``: block (i, j) -> block (j, i); ``inner``: each d x d block is
    transposed. Both are involutive and preserve the Frobenius norm.
    """
    m = np.asarray(m)
    if m.shape != (n * d, n * d):
        raise DimensionMismatchError(f"expected shape {(n * d, n * d)}, got {m.shape}")
    m4 = m.reshape(n, d, n, d)
    if which == "outer":
        out = m4.transpose(2, 1, 0, 3)
    elif which == "inner":
        out = m4.transpose(0, 3, 2, 1)
    else:
        raise ValueError(f"unknown partial transpose kind {which!r}")
    return out.reshape(n * d, n * d)


def null_space(l: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis of ker(L) as columns; dimension is the number of
    singular values <= tol * sigma_max."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    l = np.asarray(l, dtype=complex)
    if l.size == 0 or not np.any(l):
        return np.eye(l.shape[1], dtype=complex)
    _, s, vh = np.linalg.svd(l)
    rank = int(np.sum(s > tol * s[0]))
    return dagger(vh)[:, rank:]


def swap_matrix(d: int) -> np.ndarray:
    """The swap operator on C^d (x) C^d."""
    s = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            s[i * d + j, j * d + i] = 1.0
    return s


def max_entangled_state(d: int) -> np.ndarray:
    """Normalized maximally entangled vector (1/sqrt(d)) sum_i e_i (x) e_i."""
    omega = np.zeros(d * d, dtype=complex)
    omega[:: d + 1] = 1.0 / np.sqrt(d)
    return omega


def random_complex(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. standard complex Gaussian (Ginibre) matrix."""
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2.0)


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = random_complex(dim, dim, rng)
    return 0.5 * (g + dagger(g))


def random_psd(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """G G^dag with Ginibre G; full rank almost surely when rank is None."""
    g = random_complex(dim, rank or dim, rng)
    return g @ dagger(g)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(random_complex(dim, dim, rng))
    return q * (np.diag(r) / np.abs(np.diag(r)))
