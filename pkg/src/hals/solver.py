"""Hybrid atomic / ridge channel denoiser.

The estimator solves

    min_{h_s, c_d}  1/2 ||r - h_s - D c_d||^2 + tau ||h_s||_A + lambda/2 ||c_d||^2

with ``r = S^{-1} y``.  For fixed ``h_s`` the diffuse coefficients are a ridge
regression with closed form, and substituting it back leaves a weighted
atomic-norm denoiser ``1/2 (r - h_s)^H W (r - h_s) + tau ||h_s||_A`` with
``W = I - D (D^H D + lambda I)^{-1} D^H``.  That problem is solved through the
usual Toeplitz-bordered semidefinite representation of the atomic norm,

    ||x||_A = min { (t + u_0) / 2 :  [[Toep(u), x], [x^H, t]] PSD },

by ADMM with a consensus PSD variable.  The dual vector
``z = r - h_s - D c_d`` certifies optimality: ``||z||_A^* <= tau``,
``D^H z = lambda c_d`` and ``Re <z, h_s> = tau ||h_s||_A``.
"""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from hals import atomic, kernels
from hals.errors import DomainError

log = logging.getLogger(__name__)

GAP_TOL = 1e-4


@dataclass(frozen=True)
class HalsOptions:
    tau: float
    lam: float = 1.0
    admm_rho: float = 2.0
    tol_abs: float = 1e-7
    tol_rel: float = 1e-5
    max_iter: int = 5000
    diffuse_enabled: bool = True
    # Residual balancing: rescale rho by ``rho_factor`` every
    # ``check_every`` iterations when residuals drift apart by ``rho_ratio``.
    adaptive_rho: bool = True
    rho_factor: float = 2.0
    rho_ratio: float = 10.0
    check_every: int = 100

    def __post_init__(self):
        if not (self.tau > 0 and self.lam > 0 and self.admm_rho > 0):
            raise DomainError("tau, lambda and admm_rho must be positive")
        if not (self.tol_abs > 0 and self.tol_rel > 0):
            raise DomainError("tolerances must be positive")
        if self.max_iter < 1 or self.check_every < 1:
            raise DomainError("max_iter and check_every must be >= 1")


@dataclass
class HalsSolution:
    h_s: np.ndarray
    c_d: np.ndarray
    t: float
    iota: np.ndarray
    z: np.ndarray
    primal_value: float
    dual_value: float
    iterations: int
    converged: bool
    primal_residual: float = 0.0
    dual_residual: float = 0.0
    rho: float = 0.0
    history: list = None

    @property
    def atomic_norm_sdp(self):
        """SDP surrogate ``(t + iota_0) / 2`` of ``||h_s||_A`` (exact at optimum)."""
        return 0.5 * (self.t + float(self.iota[0].real))

    @property
    def duality_gap(self):
        return self.primal_value - self.dual_value

    @property
    def relative_gap(self):
        return abs(self.duality_gap) / (1.0 + abs(self.primal_value))


@dataclass(frozen=True)
class KktReport:
    """Residuals of the optimality conditions.

    ``alignment_residual`` uses the SDP value ``(t + iota_0) / 2`` in place of
    ``||h_s||_A``, which is not directly computable.
    """

    dual_norm: float
    dual_norm_residual: float
    ridge_residual: float
    alignment_residual: float
    energy_bound_ok: bool

    @property
    def max_residual(self):
        return max(self.dual_norm_residual, self.ridge_residual, self.alignment_residual)


def _width(D):
    return 0 if D is None else D.shape[1]


def _empty_basis(N):
    return np.zeros((N, 0), dtype=complex)


def ridge_diffuse(r, h_s, D, lam):
    """``(D^H D + lam I)^{-1} D^H (r - h_s)``."""
    if lam <= 0:
        raise DomainError("lambda must be positive")
    L = _width(D)
    if L == 0:
        return np.zeros(0, dtype=complex)
    e = np.asarray(r, dtype=complex) - np.asarray(h_s, dtype=complex)
    A = D.conj().T @ D + lam * np.eye(L)
    return np.linalg.solve(A, D.conj().T @ e)


def eliminate_diffuse(D, lam, N=None):
    """Weighting ``W = I - D (D^H D + lam I)^{-1} D^H`` left after ridge elimination."""
    if lam <= 0:
        raise DomainError("lambda must be positive")
    if N is None:
        N = D.shape[0]
    if _width(D) == 0:
        return np.eye(N, dtype=complex)
    A = D.conj().T @ D + lam * np.eye(D.shape[1])
    W = np.eye(N) - D @ np.linalg.solve(A, D.conj().T)
    return 0.5 * (W + W.conj().T)


def reduced_objective(h_s, r, W, tau, atomic_norm):
    e = r - h_s
    return 0.5 * float(np.vdot(e, W @ e).real) + tau * atomic_norm


def primal_objective(r, h_s, c_d, D, tau, lam, atomic_norm):
    res = r - h_s
    if _width(D):
        res = res - D @ c_d
    return 0.5 * float(np.vdot(res, res).real) + tau * atomic_norm + 0.5 * lam * float(np.vdot(c_d, c_d).real)


def dual_objective(z, obs, D, lam):
    """``1/2 ||r||^2 - 1/2 ||r - z||^2 - ||D^H z||^2 / (2 lam)``."""
    r = obs.r
    val = 0.5 * float(np.vdot(r, r).real) - 0.5 * float(np.sum(np.abs(r - z) ** 2))
    if _width(D):
        Dz = D.conj().T @ z
        val -= 0.5 / lam * float(np.vdot(Dz, Dz).real)
    return val


def recover_dual(obs, D, sol):
    z = obs.r - sol.h_s
    if _width(D):
        z = z - D @ sol.c_d
    return z


def _finish(obs, D, opts, h_s, t, iota, iterations, converged, r_prim=0.0, r_dual=0.0, rho=0.0, history=None):
    c_d = ridge_diffuse(obs.r, h_s, D, opts.lam) if _width(D) else np.zeros(0, dtype=complex)
    sol = HalsSolution(
        h_s=h_s,
        c_d=c_d,
        t=float(t),
        iota=iota,
        z=None,
        primal_value=0.0,
        dual_value=0.0,
        iterations=iterations,
        converged=converged,
        primal_residual=r_prim,
        dual_residual=r_dual,
        rho=rho,
        history=history or [],
    )
    sol.z = recover_dual(obs, D, sol)
    sol.primal_value = primal_objective(obs.r, h_s, c_d, D, opts.tau, opts.lam, sol.atomic_norm_sdp)
    sol.dual_value = dual_objective(sol.z, obs, D, opts.lam)
    return sol


def solve_hals(obs, D, opts):
    """Minimize the hybrid objective; see the module docstring.

    Non-convergence is not an error: the solution comes back with
    ``converged=False`` and its residuals for the caller to judge.
    """
    N = obs.N
    if not opts.diffuse_enabled or D is None:
        D = _empty_basis(N)
    r = np.ascontiguousarray(obs.r, dtype=np.complex128)
    W = eliminate_diffuse(D, opts.lam, N)
    Wr = W @ r

    # h_s = 0 is optimal whenever z = W r is already dual feasible.
    if atomic.dual_atomic_norm(Wr).value <= opts.tau:
        return _finish(obs, D, opts, np.zeros(N, dtype=complex), 0.0, np.zeros(N, dtype=complex), 0, True)

    wvals, V = np.linalg.eigh(W)
    V = np.ascontiguousarray(V)
    wvals = np.ascontiguousarray(wvals)

    x = np.zeros(N, dtype=np.complex128)
    u = np.zeros(N, dtype=np.complex128)
    Z = np.zeros((N + 1, N + 1), dtype=np.complex128)
    Lam = np.zeros((N + 1, N + 1), dtype=np.complex128)
    t = 0.0
    rho = float(opts.admm_rho)
    sqrt_dim = N + 1.0

    history = []
    best = math.inf
    it = 0
    converged = False
    r_prim = r_dual = math.inf
    chunk = 50
    while it < opts.max_iter:
        n = min(chunk, opts.max_iter - it)
        t, r_prim, r_dual, th_norm, z_norm, lam_norm = kernels.admm_chunk(
            Wr, V, wvals, opts.tau, rho, x, u, t, Z, Lam, n
        )
        it += n

        e = r - x
        z = W @ e
        primal = 0.5 * float(np.vdot(e, z).real) + 0.5 * opts.tau * (t + u[0].real)
        # Dual objective via the ridge identity D^H z = lam c_d.
        c = ridge_diffuse(r, x, D, opts.lam) if D.shape[1] else np.zeros(0)
        dual = 0.5 * float(np.vdot(r, r).real) - 0.5 * float(np.sum(np.abs(r - z) ** 2)) - 0.5 * opts.lam * float(
            np.vdot(c, c).real
        )
        best = min(best, primal)
        history.append((it, primal, best, r_prim, r_dual, rho))

        eps_prim = opts.tol_abs * sqrt_dim + opts.tol_rel * max(th_norm, z_norm)
        eps_dual = opts.tol_abs * sqrt_dim + opts.tol_rel * lam_norm
        gap = abs(primal - dual) / (1.0 + abs(primal))
        if r_prim <= eps_prim and r_dual <= eps_dual and gap < GAP_TOL:
            converged = True
            break

        if opts.adaptive_rho and it % opts.check_every == 0:
            if r_prim > opts.rho_ratio * r_dual:
                rho *= opts.rho_factor
            elif r_dual > opts.rho_ratio * r_prim:
                rho /= opts.rho_factor

    if not converged:
        log.debug("ADMM stopped at max_iter=%d (r_prim=%.3g, r_dual=%.3g)", it, r_prim, r_dual)
    return _finish(obs, D, opts, x.copy(), t, u.copy(), it, converged, r_prim, r_dual, rho, history)


def solve_anm(obs, opts):
    """Plain atomic-norm denoising: the hybrid problem without diffuse terms."""
    return solve_hals(obs, None, replace(opts, diffuse_enabled=False))


def kkt_report(obs, D, opts, sol, oversample=atomic.DEFAULT_OVERSAMPLE):
    N = obs.N
    if not opts.diffuse_enabled or D is None:
        D = _empty_basis(N)
    z = recover_dual(obs, D, sol)
    dn = atomic.dual_atomic_norm(z, oversample=oversample).value
    dual_norm_residual = max(0.0, dn - opts.tau)

    if D.shape[1]:
        Dz = D.conj().T @ z
        lc = opts.lam * sol.c_d
        denom = float(np.linalg.norm(Dz) + np.linalg.norm(lc))
        ridge = float(np.linalg.norm(Dz - lc)) / denom if denom > 0 else 0.0
    else:
        ridge = 0.0

    anorm = sol.atomic_norm_sdp
    target = opts.tau * anorm
    align = abs(float(np.vdot(sol.h_s, z).real) - target)
    if target > 0:
        align /= target

    L = D.shape[1]
    cd_norm = float(np.linalg.norm(sol.c_d)) if L else 0.0
    energy_ok = cd_norm <= math.sqrt(L) * opts.tau / opts.lam + 1e-9
    return KktReport(
        dual_norm=dn,
        dual_norm_residual=dual_norm_residual,
        ridge_residual=ridge,
        alignment_residual=align,
        energy_bound_ok=bool(energy_ok),
    )


def default_hyperparams(sigma, N, L, cd_norm_hint):
    """``tau = 1.2 sigma sqrt(N ln N)`` and ``lambda = sqrt(L) sigma / ||c_d||``."""
    if sigma <= 0 or cd_norm_hint <= 0 or N < 1:
        raise DomainError("sigma, N and cd_norm_hint must be positive")
    tau = 1.2 * sigma * math.sqrt(N * math.log(N))
    lam = math.sqrt(L) * sigma / cd_norm_hint
    return tau, lam
