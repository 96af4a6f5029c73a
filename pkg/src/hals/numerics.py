"""Complex linear-algebra helpers shared across the package."""

import numpy as np

from hals import kernels
from hals.errors import DomainError, NumericalError


def real_embed_vec(v):
    """Stack real and imaginary parts: ``[Re v; Im v]``."""
    v = np.asarray(v, dtype=complex).ravel()
    return np.concatenate([v.real, v.imag])


def real_embed_mat(M):
    """Real ``2N x 2M`` form ``[[Re M, -Im M], [Im M, Re M]]`` of a complex matrix.

    Satisfies ``real_embed_mat(M) @ real_embed_vec(v) == real_embed_vec(M @ v)``.
    """
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    re, im = M.real, M.imag
    return np.block([[re, -im], [im, re]])


def herm_toeplitz(iota):
    """Hermitian Toeplitz matrix whose first column is ``iota``.

    The imaginary part of ``iota[0]`` is dropped so the diagonal is real.
    """
    iota = np.ascontiguousarray(np.asarray(iota, dtype=np.complex128).ravel())
    if iota.size == 0:
        return np.zeros((0, 0), dtype=complex)
    return kernels.herm_toeplitz_fill(iota)


def psd_project(H):
    """Frobenius-nearest positive semidefinite matrix to a Hermitian ``H``.

    ``H`` is symmetrized first, so small asymmetries from iterative updates
    are tolerated.
    """
    H = np.asarray(H, dtype=complex)
    H = 0.5 * (H + H.conj().T)
    try:
        w, U = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    return (U * np.maximum(w, 0.0)) @ U.conj().T


def orthonormal_range(M, tol=1e-9):
    """Orthonormal basis for the column span of a real matrix.

    Singular values below ``tol * sigma_max`` count as zero.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0 or not np.any(M):
        raise DomainError("cannot build a range basis for an all-zero matrix")
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    rank = int(np.sum(s > tol * s[0]))
    return U[:, :rank]


def projector(M, rcond=1e-10):
    """Orthogonal projector ``M M^+`` onto the column space of ``M``."""
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    n = M.shape[0]
    if M.shape[1] == 0 or not np.any(M):
        return np.zeros((n, n), dtype=complex)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    U = U[:, s > rcond * s[0]]
    return U @ U.conj().T


def pinv_trace(A, rcond=1e-10):
    """``trace(pinv(A))`` for a symmetric PSD matrix via its eigenvalues."""
    A = 0.5 * (A + A.T)
    w = np.linalg.eigvalsh(A)
    if w.size == 0:
        return 0.0
    keep = w > rcond * max(w.max(), 0.0)
    return float(np.sum(1.0 / w[keep]))
