"""Hot numeric kernels.

Every function here is restricted to the numpy subset supported by numba so
that :func:`hals._accel.jit` can compile it.  With numba disabled they run as
ordinary numpy code.
"""

import numpy as np

from hals._accel import jit

TWO_PI = 2.0 * np.pi


@jit
def toeplitz_diag_sums(M):
    """Sums along the main and lower diagonals of a square matrix.

    ``out[k] = sum_i M[i + k, i]`` for ``k = 0 .. n-1``.  This is the adjoint
    of the map from a Toeplitz generator to its lower triangle.
    """
    n = M.shape[0]
    out = np.zeros(n, dtype=M.dtype)
    for k in range(n):
        acc = 0.0 + 0.0j
        for i in range(n - k):
            acc += M[i + k, i]
        out[k] = acc
    return out


@jit
def herm_toeplitz_fill(iota):
    n = iota.shape[0]
    T = np.empty((n, n), dtype=np.complex128)
    d = iota[0].real
    for i in range(n):
        T[i, i] = d
        for j in range(i):
            T[i, j] = iota[i - j]
            T[j, i] = np.conj(iota[i - j])
    return T


@jit
def trig_poly(z, freqs):
    """Evaluate ``p(f) = sum_n z[n] exp(-2j pi f n)`` at each frequency."""
    n = z.shape[0]
    out = np.empty(freqs.shape[0], dtype=np.complex128)
    for g in range(freqs.shape[0]):
        w = -TWO_PI * freqs[g]
        acc = 0.0 + 0.0j
        for k in range(n):
            acc += z[k] * np.exp(1j * w * k)
        out[g] = acc
    return out


@jit
def _abs2_at(z, f):
    n = z.shape[0]
    w = -TWO_PI * f
    acc = 0.0 + 0.0j
    for k in range(n):
        acc += z[k] * np.exp(1j * w * k)
    return acc.real * acc.real + acc.imag * acc.imag


@jit
def golden_max(z, lo, hi, iters):
    """Golden-section search for the maximum of ``|p(f)|^2`` on ``[lo, hi]``.

    Returns ``(f, |p(f)|)`` for the best point seen, endpoints included.
    """
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a = lo
    b = hi
    best_f = lo
    best_v = _abs2_at(z, lo)
    v_hi = _abs2_at(z, hi)
    if v_hi > best_v:
        best_f = hi
        best_v = v_hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = _abs2_at(z, c)
    fd = _abs2_at(z, d)
    for _ in range(iters):
        if fc >= fd:
            b = d
            d = c
            fd = fc
            c = b - invphi * (b - a)
            fc = _abs2_at(z, c)
        else:
            a = c
            c = d
            fc = fd
            d = a + invphi * (b - a)
            fd = _abs2_at(z, d)
    if fc > best_v:
        best_f = c
        best_v = fc
    if fd > best_v:
        best_f = d
        best_v = fd
    return best_f, np.sqrt(best_v)


@jit
def admm_chunk(Wr, V, wvals, tau, rho, x, u, t, Z, Lam, n_iter):
    """Run ``n_iter`` ADMM sweeps for the weighted atomic-norm SDP.

    Solves ``min 1/2 (r-x)^H W (r-x) + tau/2 (t + u[0])`` subject to
    ``[[Toep(u), x], [x^H, t]] == Z`` and ``Z`` PSD.  ``W = V diag(wvals) V^H``
    and ``Wr = W r``.  ``Z`` and ``Lam`` are updated in place; the new
    ``(x, u, t)`` are returned together with the last primal and dual
    residual norms and the Frobenius norms needed for relative stopping.
    """
    n = x.shape[0]
    theta = np.zeros((n + 1, n + 1), dtype=np.complex128)
    r_prim = 0.0
    r_dual = 0.0
    for _ in range(n_iter):
        sz = toeplitz_diag_sums(Z[:n, :n])
        sl = toeplitz_diag_sums(Lam[:n, :n])
        u0 = (sz[0].real - (sl[0].real + 0.5 * tau) / rho) / n
        u[0] = u0 + 0.0j
        for k in range(1, n):
            u[k] = (sz[k] - sl[k] / rho) / (n - k)
        t = Z[n, n].real - (Lam[n, n].real + 0.5 * tau) / rho
        rhs = Wr - 2.0 * Lam[:n, n] + 2.0 * rho * Z[:n, n]
        coef = (V.conj().T @ rhs) / (wvals + 2.0 * rho)
        x[:] = V @ coef

        theta[:n, :n] = herm_toeplitz_fill(u)
        theta[:n, n] = x
        theta[n, :n] = np.conj(x)
        theta[n, n] = t

        M = theta + Lam / rho
        M = 0.5 * (M + M.conj().T)
        ev, U = np.linalg.eigh(M)
        ev = np.maximum(ev, 0.0)
        Znew = (U * ev) @ U.conj().T

        diff = theta - Znew
        Lam += rho * diff
        r_prim = np.sqrt(np.sum(np.abs(diff) ** 2))
        r_dual = rho * np.sqrt(np.sum(np.abs(Znew - Z) ** 2))
        Z[:, :] = Znew
    theta_norm = np.sqrt(np.sum(np.abs(theta) ** 2))
    z_norm = np.sqrt(np.sum(np.abs(Z) ** 2))
    lam_norm = np.sqrt(np.sum(np.abs(Lam) ** 2))
    return t, r_prim, r_dual, theta_norm, z_norm, lam_norm
