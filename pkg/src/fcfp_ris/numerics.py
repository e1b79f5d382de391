"""Dense complex linear-algebra kernel.

Matrices are plain ``numpy`` arrays. ``vec`` stacks columns (Fortran
order), so ``vec([[a, c], [b, d]]) == [a, b, c, d]``; every module that
flattens an ``M x N`` channel matrix relies on this order.
"""

import numpy as np
import scipy.linalg

__all__ = [
    "ContractError",
    "SingularMatrixError",
    "hermitian_eig",
    "psd_eig",
    "solve_hpd",
    "vec",
    "unvec",
    "kron",
    "herm",
    "real_embed",
]

HERMITIAN_RTOL = 1e-10
PSD_CLAMP_RTOL = 1e-12
MAX_DENSE_DIM = 4096
SINGULAR_COND = 1e14


class ContractError(ValueError):
    """Raised when an input violates an operation's precondition."""


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a matrix that must be positive definite is numerically singular."""


def herm(A):
    """Conjugate transpose."""
    return np.conj(np.swapaxes(A, -1, -2))


def _check_hermitian(A):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ContractError("matrix has non-finite entries")
    scale = max(np.linalg.norm(A), np.finfo(float).tiny)
    if np.linalg.norm(A - herm(A)) > HERMITIAN_RTOL * scale:
        raise ContractError("matrix is not Hermitian within tolerance")
    return A


def hermitian_eig(A):
    """Eigendecomposition of a dense Hermitian matrix.

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
        Real eigenvalues in descending order.
    eigenvectors : ndarray, shape (n, n)
        Orthonormal eigenvectors stored as columns, matching ``eigenvalues``.
    """
    A = _check_hermitian(A)
    if A.shape[0] > MAX_DENSE_DIM:
        raise ContractError(f"dense eigendecomposition capped at {MAX_DENSE_DIM}")
    w, V = scipy.linalg.eigh(0.5 * (A + herm(A)))
    return w[::-1].copy(), V[:, ::-1].copy()


def psd_eig(A, rtol=PSD_CLAMP_RTOL):
    """Eigendecomposition of a PSD matrix with round-off negatives clamped to zero.

    Eigenvalues below ``rtol * max`` are set to exactly zero.
    """
    w, V = hermitian_eig(A)
    top = w[0] if w.size and w[0] > 0 else 0.0
    w = np.where(w < rtol * top, 0.0, w)
    return w, V


def solve_hpd(A, B):
    """Solve ``A X = B`` for Hermitian positive-definite ``A`` via Cholesky.

    Raises
    ------
    SingularMatrixError
        If ``A`` is not numerically positive definite or its condition
        number exceeds 1e14.
    """
    A = _check_hermitian(A)
    B = np.asarray(B)
    try:
        c, low = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("matrix is not positive definite") from exc
    d = np.abs(np.diag(c)) ** 2
    if d.min() <= 0 or d.max() / d.min() > SINGULAR_COND:
        raise SingularMatrixError("matrix is numerically singular")
    return scipy.linalg.cho_solve((c, low), B, check_finite=False)


def vec(A):
    """Column-stacking vectorization of a 2-D array."""
    A = np.asarray(A)
    if A.ndim != 2:
        raise ContractError(f"vec expects a matrix, got ndim={A.ndim}")
    return A.reshape(-1, order="F")


def unvec(v, rows, cols):
    """Inverse of :func:`vec`."""
    v = np.asarray(v)
    if v.ndim != 1 or v.size != rows * cols:
        raise ContractError(f"cannot reshape length {v.size} into {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def kron(A, B):
    """Kronecker product ``[a_ij * B]``."""
    return np.kron(np.asarray(A), np.asarray(B))


def real_embed(M):
    """Real ``2n x 2n`` form of a complex matrix acting on ``[Re x; Im x]``."""
    M = np.asarray(M)
    return np.block([[M.real, -M.imag], [M.imag, M.real]])
