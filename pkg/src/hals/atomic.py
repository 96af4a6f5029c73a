"""Dual atomic norm and dual-polynomial profiles over the frequency atoms.

Inner products follow ``<z, a(f)> = a(f)^H z = sum_n z[n] exp(-2j pi f n)``,
so sampling the dual polynomial on a uniform grid is a zero-padded FFT.
"""

from dataclasses import dataclass

import numpy as np

from hals import kernels
from hals.errors import DomainError

DEFAULT_OVERSAMPLE = 64
DEFAULT_REFINE_ITERS = 60


@dataclass(frozen=True)
class PolyProfile:
    freqs: np.ndarray
    magnitude: np.ndarray

    @property
    def grid(self):
        return list(zip(self.freqs.tolist(), self.magnitude.tolist()))


@dataclass(frozen=True)
class DualNormResult:
    value: float
    argmax_f: float
    profile_grid_size: int


def trig_profile(z, grid_size):
    """``|<z, a(g / grid_size)>|`` for ``g = 0 .. grid_size - 1``."""
    z = np.asarray(z, dtype=complex).ravel()
    if grid_size < z.size:
        raise DomainError(f"grid_size {grid_size} smaller than signal length {z.size}")
    mag = np.abs(np.fft.fft(z, n=grid_size))
    return PolyProfile(freqs=np.arange(grid_size) / grid_size, magnitude=mag)


def poly_values(z, freqs):
    """Complex values of the dual polynomial at arbitrary frequencies."""
    z = np.ascontiguousarray(np.asarray(z, dtype=np.complex128).ravel())
    freqs = np.ascontiguousarray(np.atleast_1d(np.asarray(freqs, dtype=float)))
    return kernels.trig_poly(z, freqs)


def _coarse_peaks(mag):
    left = np.roll(mag, 1)
    right = np.roll(mag, -1)
    return np.flatnonzero((mag >= left) & (mag > right) & (mag > 0))


def refined_peaks(z, oversample=DEFAULT_OVERSAMPLE, refine_iters=DEFAULT_REFINE_ITERS, floor=0.0):
    """All local maxima of ``|<z, a(f)>|`` refined off the grid.

    Coarse maxima come from a grid of ``oversample * N`` points; each one is
    polished by golden-section search over its two neighbouring cells.
    Only coarse peaks at or above ``floor`` are refined.  Returns frequencies
    in ``[0, 1)`` and magnitudes, unsorted.
    """
    z = np.ascontiguousarray(np.asarray(z, dtype=np.complex128).ravel())
    grid = oversample * z.size
    mag = trig_profile(z, grid).magnitude
    idx = _coarse_peaks(mag)
    idx = idx[mag[idx] >= floor]
    freqs = np.empty(idx.size)
    vals = np.empty(idx.size)
    for i, g in enumerate(idx):
        f, v = kernels.golden_max(z, (g - 1) / grid, (g + 1) / grid, refine_iters)
        freqs[i] = f % 1.0
        vals[i] = v
    return freqs, vals


def dual_atomic_norm(z, oversample=DEFAULT_OVERSAMPLE, refine_iters=DEFAULT_REFINE_ITERS):
    """``sup_f |<z, a(f)>|`` with the maximizing frequency."""
    if oversample < 16:
        raise DomainError("oversample must be >= 16")
    z = np.asarray(z, dtype=complex).ravel()
    grid = oversample * z.size
    if not np.any(z):
        return DualNormResult(0.0, 0.0, grid)
    mag = trig_profile(z, grid).magnitude
    # Polish the strongest few coarse peaks; the global maximum can sit in
    # a different cell than the largest grid sample.
    top = mag.max()
    freqs, vals = refined_peaks(z, oversample, refine_iters, floor=0.9 * top)
    k = int(np.argmax(vals))
    return DualNormResult(float(vals[k]), float(freqs[k]), grid)
