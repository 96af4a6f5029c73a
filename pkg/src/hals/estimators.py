"""Channel estimators built on the solver, plus the LS and genie baselines."""

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from hals import atomic
from hals.channel import support_matrix
from hals.errors import DomainError
from hals.numerics import projector
from hals.solver import kkt_report, ridge_diffuse, solve_anm, solve_hals

log = logging.getLogger(__name__)

DEFAULT_DELTA = 1e-2


@dataclass(frozen=True)
class SupportEstimate:
    freqs: np.ndarray
    peak_values: np.ndarray
    delta: float
    truncated: bool = False

    def __len__(self):
        return len(self.freqs)


@dataclass
class ChannelEstimate:
    h_hat: np.ndarray
    h_s_hat: np.ndarray
    h_d_hat: np.ndarray
    method: str
    support: SupportEstimate = None
    runtime_ms: float = 0.0
    diagnostics: dict = field(default_factory=dict)


def _circ_dist(a, b):
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def estimate_support(z, tau, delta=DEFAULT_DELTA, oversample=atomic.DEFAULT_OVERSAMPLE, merge_radius=None):
    """Frequencies where the dual polynomial ``|<z, a(f)>|`` touches ``tau``.

    Exact equality is replaced by refined local maxima at or above
    ``(1 - delta) tau``.  Peaks closer than ``merge_radius`` (default
    ``1/(4N)``, circular distance) keep only the larger one, and at most
    ``N - 1`` peaks are kept.
    """
    if tau <= 0:
        raise DomainError("tau must be positive")
    if not 0 < delta < 1:
        raise DomainError("delta must lie in (0, 1)")
    z = np.asarray(z, dtype=complex).ravel()
    N = z.size
    if merge_radius is None:
        merge_radius = 1.0 / (4 * N)
    thresh = (1.0 - delta) * tau
    # Coarse samples can undershoot a refined peak by a hair; refine a bit
    # below the threshold and filter afterwards.
    freqs, vals = atomic.refined_peaks(z, oversample, floor=0.9 * thresh)
    keep = vals >= thresh
    freqs, vals = freqs[keep], vals[keep]

    chosen = []
    for i in np.argsort(-vals, kind="stable"):
        if all(_circ_dist(freqs[i], freqs[j]) >= merge_radius for j in chosen):
            chosen.append(i)
    truncated = len(chosen) > N - 1
    if truncated:
        log.debug("support truncated from %d to %d peaks", len(chosen), N - 1)
        chosen = chosen[: N - 1]
    chosen = np.array(sorted(chosen, key=lambda i: freqs[i]), dtype=int)
    return SupportEstimate(
        freqs=freqs[chosen] if chosen.size else np.zeros(0),
        peak_values=vals[chosen] if chosen.size else np.zeros(0),
        delta=delta,
        truncated=truncated,
    )


def debias(obs, D, c_d_hat, support):
    """Project the diffuse-corrected observation onto the estimated atoms."""
    N = obs.N
    if len(support) == 0:
        return np.zeros(N, dtype=complex)
    target = obs.r.copy()
    if D is not None and D.shape[1]:
        target = target - D @ c_d_hat
    G_hat = support_matrix(support.freqs, N)
    return projector(G_hat) @ target


def _pipeline(obs, D, opts, method, solve):
    t0 = time.perf_counter()
    sol = solve()
    support = estimate_support(sol.z, opts.tau)
    h_s_db = debias(obs, D, sol.c_d, support)
    h_d = D @ sol.c_d if D is not None and D.shape[1] else np.zeros(obs.N, dtype=complex)
    runtime = 1e3 * (time.perf_counter() - t0)
    kkt = kkt_report(obs, D, opts, sol)
    log.debug(
        "%s: iters=%d converged=%s gap=%.2e kkt=%.2e support=%d",
        method, sol.iterations, sol.converged, sol.relative_gap, kkt.max_residual, len(support),
    )
    return ChannelEstimate(
        h_hat=h_s_db + h_d,
        h_s_hat=h_s_db,
        h_d_hat=h_d,
        method=method,
        support=support,
        runtime_ms=runtime,
        diagnostics={
            "solution": sol,
            "kkt": kkt,
            "h_s_raw": sol.h_s,
            "h_raw": sol.h_s + h_d,
            "converged": sol.converged,
            "duality_gap": sol.relative_gap,
        },
    )


def pipeline_hals(obs, D, opts):
    if not opts.diffuse_enabled:
        return pipeline_anm(obs, opts)
    return _pipeline(obs, D, opts, "hals", lambda: solve_hals(obs, D, opts))


def pipeline_anm(obs, opts):
    opts = replace(opts, diffuse_enabled=False)
    return _pipeline(obs, None, opts, "anm", lambda: solve_anm(obs, opts))


def least_squares(obs):
    """``S^{-1} y``; the whole estimate is booked as the sparse part."""
    r = obs.r.copy()
    return ChannelEstimate(h_hat=r, h_s_hat=r.copy(), h_d_hat=np.zeros_like(r), method="ls")


def genie(obs, G, D, mu):
    """Closed-form regularized LS with known sparse support ``G`` and basis ``D``.

    Solves ``min ||r - G c_s - D c_d||^2 + mu ||c_d||^2``.
    """
    if mu <= 0:
        raise DomainError("mu must be positive")
    t0 = time.perf_counter()
    N = obs.N
    r = obs.r
    P = projector(G)
    P_perp = np.eye(N) - P
    if D is None or D.shape[1] == 0:
        h_d = np.zeros(N, dtype=complex)
    else:
        T = D.conj().T @ P_perp @ D + mu * np.eye(D.shape[1])
        h_d = D @ np.linalg.solve(T, D.conj().T @ (P_perp @ r))
    h_s = P @ (r - h_d)
    return ChannelEstimate(
        h_hat=h_s + h_d,
        h_s_hat=h_s,
        h_d_hat=h_d,
        method="genie",
        runtime_ms=1e3 * (time.perf_counter() - t0),
    )


def raw_hals_estimate(obs, D, opts):
    """Biased (non-debiased) solver output ``h_s + D c_d``."""
    sol = solve_hals(obs, D, opts)
    return sol.h_s + (D @ ridge_diffuse(obs.r, sol.h_s, D, opts.lam) if D is not None and D.shape[1] else 0)
