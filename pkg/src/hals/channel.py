"""Synthetic hybrid sparse/diffuse channels and measured-trace ingestion.

A channel is a handful of specular paths at continuous delays plus weak
diffuse scattering on every tap of a uniform delay grid.  In the frequency
domain a path at delay ``tau`` becomes the complex sinusoid
``atom((T_s - tau) / T_s, N)`` and the diffuse taps are columns of the
basis :func:`diffuse_basis`.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from hals.errors import DomainError, TraceFormatError, TraceLengthError


@dataclass(frozen=True)
class ChannelConfig:
    N: int = 50
    L: int = 40
    m: int = 4
    omega: float = 0.05
    beta: float = 0.01
    delta_t: float = 1.0
    seed: int = 0
    # Reject delay draws whose atoms sit closer than 1/N (circularly).
    enforce_separation: bool = False

    def __post_init__(self):
        if self.N < 1 or self.L < 1:
            raise DomainError("N and L must be >= 1")
        if not 0 <= self.m <= self.L:
            raise DomainError("need 0 <= m <= L")
        if self.omega < 0 or self.beta < 0:
            raise DomainError("omega and beta must be nonnegative")
        if self.delta_t <= 0:
            raise DomainError("delta_t must be positive")

    @property
    def symbol_time(self):
        return self.L * self.delta_t


@dataclass(frozen=True)
class SparsePath:
    tau: float
    alpha: complex
    f: float


@dataclass(frozen=True)
class DiffuseGains:
    gamma: np.ndarray
    c_d: np.ndarray


@dataclass(frozen=True)
class HsdChannelTruth:
    config: ChannelConfig
    paths: list
    diffuse: DiffuseGains
    h_s: np.ndarray
    h_d: np.ndarray
    h: np.ndarray
    D: np.ndarray
    G: np.ndarray
    # Generative covariances of the coefficient vectors c_s (h_s = G c_s)
    # and c_d (h_d = D c_d).
    K_s: np.ndarray = field(repr=False, default=None)
    K_d: np.ndarray = field(repr=False, default=None)

    @property
    def freqs(self):
        return np.array([p.f for p in self.paths], dtype=float)


def atom(f, N):
    """Complex sinusoid ``[1, e^{j2pi f}, ..., e^{j2pi f (N-1)}]``."""
    if not 0.0 <= f <= 1.0:
        raise DomainError(f"frequency {f} outside [0, 1]")
    return np.exp(2j * np.pi * f * np.arange(N))


def _atoms(freqs, N):
    freqs = np.asarray(freqs, dtype=float).ravel()
    if np.any((freqs < 0.0) | (freqs > 1.0)):
        raise DomainError("frequencies must lie in [0, 1]")
    return np.exp(2j * np.pi * np.outer(np.arange(N), freqs))


def diffuse_basis(N, L):
    """``N x L`` basis with unit-norm columns ``atom(l/L, N) / sqrt(N)``."""
    if N < 1 or L < 1:
        raise DomainError("N and L must be >= 1")
    return _atoms(np.arange(L) / L, N) / math.sqrt(N)


def support_matrix(freqs, N):
    """Unit-norm atom columns for the given frequencies (may be empty)."""
    if len(freqs) == 0:
        return np.zeros((N, 0), dtype=complex)
    return _atoms(freqs, N) / math.sqrt(N)


def sparse_freq_response(paths, N):
    h = np.zeros(N, dtype=complex)
    for p in paths:
        h += p.alpha * atom(p.f, N)
    return h


def delay_to_freq(tau, symbol_time):
    return (symbol_time - tau) / symbol_time


def complex_normal(rng, variance):
    """Draw CN(0, variance) samples with E|x|^2 = variance."""
    variance = np.asarray(variance, dtype=float)
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(variance.shape) + 1j * rng.standard_normal(variance.shape))


def _circular_gap(freqs):
    if len(freqs) < 2:
        return 1.0
    f = np.sort(np.mod(freqs, 1.0))
    gaps = np.diff(np.concatenate([f, [f[0] + 1.0]]))
    return float(gaps.min())


def sample_hsd(cfg):
    """Draw one channel realization, deterministic in ``cfg.seed``."""
    rng = np.random.default_rng(cfg.seed)
    Ts = cfg.symbol_time
    N, L = cfg.N, cfg.L

    while True:
        taus = rng.uniform(0.0, Ts, size=cfg.m)
        freqs = delay_to_freq(taus, Ts)
        if not cfg.enforce_separation or _circular_gap(freqs) >= 1.0 / N:
            break
    path_var = np.exp(-cfg.omega * taus / cfg.delta_t)
    alphas = complex_normal(rng, path_var)

    tap_var = cfg.beta * np.exp(-cfg.omega * np.arange(L))
    gamma = complex_normal(rng, tap_var)
    perm = (-np.arange(L)) % L
    c_d = math.sqrt(N) * gamma[perm]

    paths = [SparsePath(float(t), complex(a), float(f)) for t, a, f in zip(taus, alphas, freqs)]
    D = diffuse_basis(N, L)
    G = support_matrix(freqs, N)
    h_s = sparse_freq_response(paths, N)
    h_d = D @ c_d
    return HsdChannelTruth(
        config=cfg,
        paths=paths,
        diffuse=DiffuseGains(gamma=gamma, c_d=c_d),
        h_s=h_s,
        h_d=h_d,
        h=h_s + h_d,
        D=D,
        G=G,
        K_s=np.diag(N * path_var).astype(complex),
        K_d=np.diag(N * tap_var[perm]).astype(complex),
    )


def load_trace(path, N):
    """Read a ``index,re,im`` CSV trace and return its first ``N`` samples.

    Rows are sorted by index before truncation.
    """
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, rec in enumerate(reader, start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            if lineno == 1 and rec[0].strip().lower() == "index":
                continue
            if len(rec) != 3:
                raise TraceFormatError(f"expected 3 fields, got {len(rec)}", line=lineno)
            try:
                idx = int(rec[0])
                re_, im_ = float(rec[1]), float(rec[2])
            except ValueError as exc:
                raise TraceFormatError(f"non-numeric field ({exc})", line=lineno) from None
            if not (math.isfinite(re_) and math.isfinite(im_)):
                raise TraceFormatError("non-finite sample", line=lineno)
            rows.append((idx, complex(re_, im_)))
    if len(rows) < N:
        raise TraceLengthError(f"trace {path} has {len(rows)} samples, need {N}")
    rows.sort(key=lambda r: r[0])
    return np.array([v for _, v in rows[:N]], dtype=complex)
