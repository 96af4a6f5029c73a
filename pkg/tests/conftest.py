import numpy as np
import pytest

from hals.channel import ChannelConfig, sample_hsd
from hals.ofdm import observe, qpsk_pilots, sigma_for_snr
from hals.solver import HalsOptions, default_hyperparams


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_instance(seed, N=32, L=16, m=3, beta=0.01, snr_db=10.0, **kw):
    """Sampled channel, pilots, observation and auto hyperparameters."""
    truth = sample_hsd(ChannelConfig(N=N, L=L, m=m, beta=beta, seed=seed, **kw))
    pilots = qpsk_pilots(N, seed + 10_000)
    sigma = sigma_for_snr(truth.h, snr_db)
    obs = observe(truth.h, pilots, sigma, seed + 20_000)
    tau, lam = default_hyperparams(sigma, N, L, np.linalg.norm(truth.diffuse.c_d))
    return truth, pilots, obs, HalsOptions(tau=tau, lam=lam)


@pytest.fixture
def instance():
    return make_instance(3)


# One summary line per acceptance criterion, printed after the run.
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
