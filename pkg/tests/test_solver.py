import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hals.atomic import dual_atomic_norm
from hals.channel import atom, diffuse_basis
from hals.errors import DomainError
from hals.ofdm import make_observation, qpsk_pilots
from hals.solver import (
    HalsOptions,
    default_hyperparams,
    dual_objective,
    eliminate_diffuse,
    kkt_report,
    primal_objective,
    ridge_diffuse,
    solve_anm,
    solve_hals,
)

from conftest import crandn, make_instance


def _obs(r, seed=0):
    p = qpsk_pilots(len(r), seed)
    return make_observation(p.s * r, p, 0.1)


@pytest.mark.parametrize("kw", [dict(tau=0), dict(tau=1, lam=0), dict(tau=1, admm_rho=-1), dict(tau=1, tol_abs=0),
                                dict(tau=1, max_iter=0)])
def test_options_validation(kw):
    with pytest.raises(DomainError):
        HalsOptions(**kw)


def test_default_hyperparams_values():
    tau, lam = default_hyperparams(0.5, 50, 40, 2.0)
    assert tau == pytest.approx(1.2 * 0.5 * math.sqrt(50 * math.log(50)))
    assert lam == pytest.approx(math.sqrt(40) * 0.5 / 2.0)
    with pytest.raises(DomainError):
        default_hyperparams(0.5, 50, 40, 0.0)


def test_ridge_matches_stacked_lstsq(rng):
    N, L, lam = 12, 7, 0.3
    D = crandn(rng, N, L)
    r, h = crandn(rng, N), crandn(rng, N)
    A = np.vstack([D, math.sqrt(lam) * np.eye(L)])
    b = np.concatenate([r - h, np.zeros(L)])
    ref = np.linalg.lstsq(A, b, rcond=None)[0]
    np.testing.assert_allclose(ridge_diffuse(r, h, D, lam), ref, atol=1e-12)
    with pytest.raises(DomainError):
        ridge_diffuse(r, h, D, 0.0)


def test_weighting_matrix(rng):
    N, L, lam = 10, 6, 0.5
    D = crandn(rng, N, L)
    W = eliminate_diffuse(D, lam)
    # Push-through identity: W = lam (D D^H + lam I)^{-1}.
    np.testing.assert_allclose(W, lam * np.linalg.inv(D @ D.conj().T + lam * np.eye(N)), atol=1e-12)
    w = np.linalg.eigvalsh(W)
    assert w.min() > 0 and w.max() <= 1 + 1e-12
    # Minimizing over c_d reproduces the reduced quadratic.
    r, h = crandn(rng, N), crandn(rng, N)
    c = ridge_diffuse(r, h, D, lam)
    full = 0.5 * np.linalg.norm(r - h - D @ c) ** 2 + 0.5 * lam * np.linalg.norm(c) ** 2
    e = r - h
    assert full == pytest.approx(0.5 * np.vdot(e, W @ e).real, rel=1e-12)


@pytest.mark.parametrize("amp, f0", [(2.0, 0.3), (1.0 + 1.0j, 0.71)])
def test_anm_single_atom_closed_form(amp, f0):
    # For r = c a(f) the denoiser shrinks c by tau / N along the same atom.
    N, tau = 16, 3.0
    r = amp * atom(f0, N)
    sol = solve_anm(_obs(r), HalsOptions(tau=tau, tol_abs=1e-9, tol_rel=1e-8, max_iter=20000))
    expected = amp * (1 - tau / (N * abs(amp))) * atom(f0, N)
    assert sol.converged
    np.testing.assert_allclose(sol.h_s, expected, atol=1e-4 * np.linalg.norm(expected))
    assert sol.atomic_norm_sdp == pytest.approx(abs(amp) - tau / N, rel=1e-3)


def test_zero_shortcut():
    N = 16
    r = 0.1 * atom(0.2, N)
    sol = solve_anm(_obs(r), HalsOptions(tau=10.0))
    assert sol.iterations == 0 and sol.converged
    assert not np.any(sol.h_s)
    np.testing.assert_allclose(sol.z, r)


def test_hals_kkt_and_gap(instance):
    truth, pilots, obs, opts = instance
    sol = solve_hals(obs, truth.D, opts)
    assert sol.converged
    rep = kkt_report(obs, truth.D, opts, sol)
    assert rep.dual_norm <= opts.tau * (1 + 1e-3)
    assert rep.ridge_residual <= 1e-6
    assert rep.alignment_residual <= 1e-3
    assert rep.energy_bound_ok
    assert sol.relative_gap <= 1e-4
    np.testing.assert_allclose(truth.D.conj().T @ sol.z, opts.lam * sol.c_d, atol=1e-10)


def test_anm_is_hals_without_diffuse(instance):
    truth, pilots, obs, opts = instance
    a = solve_anm(obs, opts)
    b = solve_hals(obs, None, opts)
    np.testing.assert_array_equal(a.h_s, b.h_s)
    assert a.c_d.size == 0


def test_history_is_monotone_best(instance):
    truth, pilots, obs, opts = instance
    sol = solve_hals(obs, truth.D, opts)
    best = [h[2] for h in sol.history]
    assert all(b1 >= b2 for b1, b2 in zip(best, best[1:]))
    assert sol.history[-1][0] == sol.iterations


def test_nonconvergence_is_reported(instance):
    truth, pilots, obs, opts = instance
    from dataclasses import replace

    sol = solve_hals(obs, truth.D, replace(opts, max_iter=10))
    assert not sol.converged and sol.iterations == 10


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 1.0))
def test_weak_duality(seed, scale):
    # Any dual-feasible z lower-bounds the primal value at any point.
    rng = np.random.default_rng(seed)
    N, L, lam, tau = 12, 6, 0.4, 2.0
    D = diffuse_basis(N, L)
    obs = _obs(crandn(rng, N), seed % 1000)
    z = crandn(rng, N)
    z *= scale * tau / dual_atomic_norm(z).value
    h = crandn(rng, N)
    c = crandn(rng, L)
    # h expands over the DFT atoms with coefficients fft(h) / N, whose
    # 1-norm upper-bounds ||h||_A.
    anorm_upper = np.sum(np.abs(np.fft.fft(h) / N))
    assert dual_objective(z, obs, D, lam) <= primal_objective(obs.r, h, c, D, tau, lam, anorm_upper) + 1e-9
