"""Hybrid atomic-norm / least-squares estimation of sparse-plus-diffuse channels."""

__version__ = "0.1.0"

from hals.channel import ChannelConfig, HsdChannelTruth, atom, diffuse_basis, sample_hsd, support_matrix
from hals.ofdm import Observation, Pilots, nmse, observe, qpsk_pilots, sigma_for_snr
from hals.solver import HalsOptions, HalsSolution, default_hyperparams, solve_anm, solve_hals
from hals.estimators import genie, least_squares, pipeline_anm, pipeline_hals
from hals.bounds import CrbInputs, crb_diffuse, crb_report, crb_sparse

__all__ = [
    "ChannelConfig", "HsdChannelTruth", "atom", "diffuse_basis", "sample_hsd", "support_matrix",
    "Observation", "Pilots", "nmse", "observe", "qpsk_pilots", "sigma_for_snr",
    "HalsOptions", "HalsSolution", "default_hyperparams", "solve_anm", "solve_hals",
    "genie", "least_squares", "pipeline_anm", "pipeline_hals",
    "CrbInputs", "crb_diffuse", "crb_report", "crb_sparse",
]
