"""Pilot symbols, noisy observations and the SNR/NMSE metrics."""

import math
from dataclasses import dataclass

import numpy as np

from hals.channel import complex_normal
from hals.errors import DomainError

QPSK = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / math.sqrt(2.0)


@dataclass(frozen=True)
class Pilots:
    s: np.ndarray

    @property
    def N(self):
        return self.s.shape[0]


@dataclass(frozen=True)
class Observation:
    """Received samples ``y = diag(s) h + n`` and the equalized ``r = y / s``."""

    y: np.ndarray
    pilots: Pilots
    sigma: float
    r: np.ndarray

    @property
    def N(self):
        return self.y.shape[0]


def qpsk_pilots(N, seed):
    if N < 1:
        raise DomainError("N must be >= 1")
    rng = np.random.default_rng(seed)
    return Pilots(s=QPSK[rng.integers(0, 4, size=N)])


def make_observation(y, pilots, sigma):
    y = np.asarray(y, dtype=complex)
    return Observation(y=y, pilots=pilots, sigma=float(sigma), r=y / pilots.s)


def observe(h, pilots, sigma, seed):
    """Pass ``h`` through the pilot channel and add CN(0, sigma^2) noise."""
    h = np.asarray(h, dtype=complex)
    if h.shape != pilots.s.shape:
        raise DomainError(f"channel length {h.shape} does not match pilots {pilots.s.shape}")
    if sigma < 0:
        raise DomainError("sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    noise = complex_normal(rng, np.full(h.shape, float(sigma) ** 2))
    return make_observation(pilots.s * h + noise, pilots, sigma)


def sigma_for_snr(h, snr_db):
    """Noise level giving ``10 log10(||h||^2 / (N sigma^2)) == snr_db``."""
    h = np.asarray(h, dtype=complex)
    energy = float(np.vdot(h, h).real)
    if energy == 0.0:
        raise DomainError("SNR undefined for a zero channel")
    return math.sqrt(energy / (h.size * 10.0 ** (snr_db / 10.0)))


def snr_db(h, sigma):
    h = np.asarray(h, dtype=complex)
    return 10.0 * math.log10(float(np.vdot(h, h).real) / (h.size * sigma**2))


def nmse(h_true, h_est):
    h_true = np.asarray(h_true, dtype=complex)
    h_est = np.asarray(h_est, dtype=complex)
    if h_true.shape != h_est.shape:
        raise DomainError("length mismatch")
    ref = float(np.vdot(h_true, h_true).real)
    if ref == 0.0:
        raise DomainError("NMSE undefined for a zero reference")
    err = h_true - h_est
    return float(np.vdot(err, err).real) / ref
