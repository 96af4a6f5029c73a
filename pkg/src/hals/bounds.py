"""Constrained Cramer-Rao bounds for the sparse and diffuse components.

Each bound treats the other component as extra Gaussian noise.  Complex
quantities are handled through the real embedding, in which a CN(0, K)
vector has covariance ``K_tilde / 2`` and Fisher information
``(K_tilde / 2)^{-1}``.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from hals.errors import DomainError, NumericalError
from hals.numerics import orthonormal_range, pinv_trace, projector, real_embed_mat, real_embed_vec

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CrbInputs:
    G: np.ndarray
    D: np.ndarray
    K_s: np.ndarray
    K_d: np.ndarray
    sigma: float
    pilots: object
    h_d: np.ndarray = None
    rho2: float = None
    h_s: np.ndarray = None

    @classmethod
    def from_truth(cls, truth, sigma, pilots):
        h_d = truth.h_d
        return cls(
            G=truth.G, D=truth.D, K_s=truth.K_s, K_d=truth.K_d, sigma=sigma, pilots=pilots,
            h_d=h_d, rho2=float(np.vdot(h_d, h_d).real), h_s=truth.h_s,
        )


@dataclass(frozen=True)
class CrbReport:
    crb_sparse: float
    crb_diffuse: float
    epsilon: float
    # NaN when the corresponding true component has zero energy.
    ncrb_sparse: float = math.nan
    ncrb_diffuse: float = math.nan


def _pilot_noise(pilots, sigma, N):
    s_inv = 1.0 / pilots.s if pilots is not None else np.ones(N)
    return sigma**2 * np.diag(np.abs(s_inv) ** 2).astype(complex)


def noise_covariance_sparse(D, K_d, pilots, sigma):
    """``D K_d D^H + sigma^2 S^{-1} S^{-H}``."""
    N = D.shape[0]
    K = D @ K_d @ D.conj().T + _pilot_noise(pilots, sigma, N)
    return 0.5 * (K + K.conj().T)


def noise_covariance_diffuse(G, K_s, pilots, sigma):
    """``G K_s G^H + sigma^2 S^{-1} S^{-H}``."""
    N = G.shape[0]
    K = _pilot_noise(pilots, sigma, N)
    if G.shape[1]:
        K = K + G @ K_s @ G.conj().T
    return 0.5 * (K + K.conj().T)


def _inv_spd(K):
    """Inverse of a symmetric positive definite matrix, with jitter if needed."""
    n = K.shape[0]
    try:
        c = np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        jitter = 1e-12 * np.trace(K) / n
        log.info("Cholesky failed; adding jitter %.3g", jitter)
        try:
            c = np.linalg.cholesky(K + jitter * np.eye(n))
        except np.linalg.LinAlgError as exc:
            raise NumericalError("noise covariance is singular") from exc
    ci = np.linalg.inv(c)
    return ci.T @ ci


def _constrained_trace(U, K_tilde):
    """``trace(U (U^T K^{-1} U)^+ U^T)`` for orthonormal ``U``."""
    A = U.T @ _inv_spd(K_tilde) @ U
    return pinv_trace(A)


def crb_sparse(inputs):
    """Bound on E||h_s_hat - h_s||^2 for estimators unbiased on range(G)."""
    if inputs.G.shape[1] == 0 or not np.any(inputs.G):
        raise DomainError("sparse support matrix is empty")
    U = orthonormal_range(real_embed_mat(inputs.G))
    K = real_embed_mat(noise_covariance_sparse(inputs.D, inputs.K_d, inputs.pilots, inputs.sigma))
    return 0.5 * _constrained_trace(U, K)


def diffuse_constraint_projector(D, h_d, rho2):
    """``P_{D~} - h~_d h~_d^T / rho^2``: the tangent space of the fixed-norm set in range(D)."""
    h_d = np.asarray(h_d, dtype=complex)
    energy = float(np.vdot(h_d, h_d).real)
    if rho2 <= 0:
        raise DomainError("rho2 must be positive")
    if abs(energy - rho2) > 1e-8 * max(1.0, rho2):
        raise DomainError(f"rho2={rho2} does not match ||h_d||^2={energy}")
    Dt = real_embed_mat(D)
    P = projector(Dt).real
    ht = real_embed_vec(h_d)
    if np.linalg.norm(ht - P @ ht) > 1e-8 * max(1.0, np.linalg.norm(ht)):
        raise DomainError("h_d is not in the range of D")
    Q = P - np.outer(ht, ht) / rho2
    return 0.5 * (Q + Q.T)


def constraint_basis(Q):
    """Orthonormal eigenvectors of the projector ``Q`` at eigenvalue one."""
    w, V = np.linalg.eigh(Q)
    return V[:, w > 0.5]


def diffuse_bound_from_epsilon(epsilon, rho2):
    return 2.0 * rho2 * (1.0 - 1.0 / math.sqrt(1.0 + epsilon / (2.0 * rho2)))


def diffuse_epsilon(inputs):
    Q = diffuse_constraint_projector(inputs.D, inputs.h_d, inputs.rho2)
    Un = constraint_basis(Q)
    K = real_embed_mat(noise_covariance_diffuse(inputs.G, inputs.K_s, inputs.pilots, inputs.sigma))
    return _constrained_trace(Un, K)


def crb_diffuse(inputs, epsilon=None):
    """Norm-constrained bound ``2 rho^2 (1 - (1 + eps / (2 rho^2))^{-1/2})``.

    ``epsilon`` may be supplied directly, bypassing its computation.
    """
    if inputs.rho2 is None or inputs.rho2 <= 0:
        raise DomainError("diffuse energy rho2 must be positive")
    if epsilon is None:
        epsilon = diffuse_epsilon(inputs)
    return diffuse_bound_from_epsilon(epsilon, inputs.rho2)


def crb_report(inputs):
    cs = crb_sparse(inputs)
    ncs = math.nan
    if inputs.h_s is not None:
        es = float(np.vdot(inputs.h_s, inputs.h_s).real)
        ncs = cs / es if es > 0 else math.nan
    if inputs.rho2 is not None and inputs.rho2 > 0:
        eps = diffuse_epsilon(inputs)
        cd = diffuse_bound_from_epsilon(eps, inputs.rho2)
        ncd = cd / inputs.rho2
    else:
        eps, cd, ncd = 0.0, 0.0, math.nan
    return CrbReport(crb_sparse=cs, crb_diffuse=cd, epsilon=eps, ncrb_sparse=ncs, ncrb_diffuse=ncd)
