"""Monte Carlo NMSE-vs-SNR sweeps.

Each ``(snr index, trial)`` pair owns a seed derived from the master seed,
so records do not depend on execution order or thread count.
"""

import csv
import dataclasses
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from hals import __version__
from hals._accel import backend_name
from hals.bounds import CrbInputs, crb_report
from hals.channel import ChannelConfig, diffuse_basis, load_trace, sample_hsd
from hals.errors import DomainError
from hals.estimators import genie, least_squares, pipeline_anm, pipeline_hals
from hals.ofdm import nmse, observe, qpsk_pilots, sigma_for_snr
from hals.solver import HalsOptions, default_hyperparams

log = logging.getLogger(__name__)

METHODS = ("hals", "anm", "ls", "genie")


@dataclass(frozen=True)
class TrialRecord:
    snr_db: float
    method: str
    trial_index: int
    seed: int
    nmse_total: float
    nmse_sparse: float
    nmse_diffuse: float
    support_size: int
    duality_gap: float
    kkt_max_residual: float
    converged: bool
    runtime_ms: float
    tau: float
    lam: float


CSV_HEADER = [
    "snr_db", "method", "trial_index", "seed", "nmse_total", "nmse_sparse", "nmse_diffuse",
    "support_size", "duality_gap", "kkt_max_residual", "converged", "runtime_ms", "tau", "lambda",
]


@dataclass(frozen=True)
class BenchConfig:
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    snr_db_list: tuple = (0.0, 5.0, 10.0, 15.0, 20.0)
    trials: int = 100
    methods: tuple = METHODS
    # "auto" or a dict with any of tau, lambda (numbers or "auto"),
    # tau_scale, admm_rho, tol_abs, tol_rel, max_iter.
    hals_opts: object = "auto"
    genie_mu: float = None
    compute_crb: bool = False
    trace_path: str = None
    diffuse_width_for_trace: int = 200
    master_seed: int = 0
    output_path: str = None
    # Wall-clock timings make the CSV non-reproducible, so they are opt-in.
    record_runtime: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError("trials must be >= 1")
        if not self.snr_db_list:
            raise DomainError("snr_db_list must be nonempty")
        if not self.methods:
            raise DomainError("methods must be nonempty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise DomainError(f"unknown methods: {bad}")
        if self.genie_mu is not None and self.genie_mu <= 0:
            raise DomainError("genie_mu must be positive")
        if self.trace_path is not None:
            if "genie" in self.methods:
                raise DomainError("genie needs the true sparse support; unavailable for traces")
            if self.compute_crb:
                raise DomainError("CRBs need generative covariances; unavailable for traces")
            opts = self.hals_opts if isinstance(self.hals_opts, dict) else {}
            if opts.get("lambda", "auto") == "auto" and ({"hals"} & set(self.methods)):
                raise DomainError("trace mode needs an explicit lambda (auto uses the true diffuse energy)")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        ch = d.pop("channel", {})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        if "snr_db_list" in d:
            d["snr_db_list"] = tuple(float(s) for s in d["snr_db_list"])
        if "methods" in d:
            d["methods"] = tuple(d["methods"])
        try:
            channel = ChannelConfig(**ch)
        except TypeError as exc:
            raise DomainError(f"bad channel config: {exc}") from None
        return cls(channel=channel, **d)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["snr_db_list"] = list(self.snr_db_list)
        d["methods"] = list(self.methods)
        return d


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return BenchConfig.from_dict(json.load(fh))


def derive_seed(*keys):
    """64-bit seed from a tuple of nonnegative integers."""
    state = np.random.SeedSequence([int(k) for k in keys]).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


def resolve_hyperparams(config_opts, sigma, N, L, cd_norm, need_lambda=True):
    """Turn the ``hals_opts`` config entry into a :class:`HalsOptions`."""
    opts = {} if config_opts == "auto" or config_opts is None else dict(config_opts)
    tau = opts.pop("tau", "auto")
    lam = opts.pop("lambda", "auto")
    scale = float(opts.pop("tau_scale", 1.0))
    if tau == "auto" or lam == "auto":
        hint = cd_norm if cd_norm and cd_norm > 0 else None
        tau_auto = 1.2 * sigma * math.sqrt(N * math.log(N))
        lam_auto = default_hyperparams(sigma, N, L, hint)[1] if hint else None
        if tau == "auto":
            tau = scale * tau_auto
        if lam == "auto":
            if lam_auto is None:
                if need_lambda:
                    raise DomainError("auto lambda needs a nonzero diffuse energy")
                lam_auto = 1.0  # unused by ANM
            lam = lam_auto
    return HalsOptions(tau=float(tau), lam=float(lam), **opts)


def _component_nmse(truth, est):
    if truth is None or not np.any(truth):
        return math.nan
    return nmse(truth, est)


def _record(snr, method, trial, seed, h, h_s, h_d, est, tau, lam, support, gap, kkt, conv, runtime):
    return TrialRecord(
        snr_db=float(snr),
        method=method,
        trial_index=trial,
        seed=seed,
        nmse_total=nmse(h, est.h_hat),
        nmse_sparse=_component_nmse(h_s, est.h_s_hat),
        nmse_diffuse=_component_nmse(h_d, est.h_d_hat),
        support_size=support,
        duality_gap=gap,
        kkt_max_residual=kkt,
        converged=conv,
        runtime_ms=runtime,
        tau=tau,
        lam=lam,
    )


@dataclass
class TrialResult:
    records: list
    crb: object = None
    # Method name -> KktReport for the solver-based methods.
    kkt: dict = field(default_factory=dict)


def run_trial(config, snr_idx, trial, h_trace=None):
    snr = config.snr_db_list[snr_idx]
    seed = derive_seed(config.master_seed, snr_idx, trial)
    N = config.channel.N

    if h_trace is None:
        truth = sample_hsd(replace(config.channel, seed=derive_seed(seed, 0)))
        h, h_s, h_d, D = truth.h, truth.h_s, truth.h_d, truth.D
        cd_norm = float(np.linalg.norm(truth.diffuse.c_d))
    else:
        truth = None
        h, h_s, h_d = h_trace, None, None
        D = diffuse_basis(N, config.diffuse_width_for_trace)
        cd_norm = None

    pilots = qpsk_pilots(N, derive_seed(seed, 1))
    sigma = sigma_for_snr(h, snr)
    obs = observe(h, pilots, sigma, derive_seed(seed, 2))

    needs_opts = {"hals", "anm"} & set(config.methods) or ("genie" in config.methods and config.genie_mu is None)
    need_lambda = bool({"hals", "genie"} & set(config.methods))
    opts = None
    if needs_opts:
        opts = resolve_hyperparams(config.hals_opts, sigma, N, D.shape[1], cd_norm, need_lambda)

    timed = config.record_runtime
    records = []
    kkt = {}
    for method in config.methods:
        if method in ("hals", "anm"):
            est = pipeline_hals(obs, D, opts) if method == "hals" else pipeline_anm(obs, opts)
            dg = est.diagnostics
            kkt[method] = dg["kkt"]
            records.append(_record(
                snr, method, trial, seed, h, h_s, h_d, est, opts.tau, opts.lam, len(est.support),
                dg["duality_gap"], dg["kkt"].max_residual, dg["converged"], est.runtime_ms if timed else 0.0,
            ))
        elif method == "ls":
            est = least_squares(obs)
            records.append(_record(snr, method, trial, seed, h, h_s, h_d, est, 0.0, 0.0, 0, 0.0, 0.0, True, 0.0))
        else:
            mu = config.genie_mu if config.genie_mu is not None else opts.lam
            est = genie(obs, truth.G, D, mu)
            records.append(_record(
                snr, method, trial, seed, h, h_s, h_d, est, 0.0, mu, truth.G.shape[1], 0.0, 0.0, True,
                est.runtime_ms if timed else 0.0,
            ))

    crb = None
    if config.compute_crb and truth is not None and truth.G.shape[1]:
        crb = crb_report(CrbInputs.from_truth(truth, sigma, pilots))
    return TrialResult(records, crb, kkt)


def _thread_count(threads):
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("HALS_THREADS")
    return max(1, int(env)) if env else 1


def _nanmean(vals):
    vals = [v for v in vals if not math.isnan(v)]
    return float(np.mean(vals)) if vals else math.nan


def run_bench(config, threads=None, write=True):
    """Run the sweep; returns the list of :class:`TrialRecord`.

    CRB rows (``method`` ``ncrb_sparse`` / ``ncrb_diffuse``, ``trial_index``
    -1) carry per-SNR averages of the per-trial normalized bounds.
    """
    h_trace = None
    if config.trace_path is not None:
        h_trace = load_trace(config.trace_path, config.channel.N)

    tasks = [(i, k) for i in range(len(config.snr_db_list)) for k in range(config.trials)]
    n_threads = _thread_count(threads)
    t0 = time.perf_counter()
    if n_threads == 1:
        results = [run_trial(config, i, k, h_trace) for i, k in tasks]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(lambda ik: run_trial(config, ik[0], ik[1], h_trace), tasks))
    wall = time.perf_counter() - t0

    records = []
    for i, snr in enumerate(config.snr_db_list):
        block = results[i * config.trials:(i + 1) * config.trials]
        for res in block:
            records.extend(res.records)
        crbs = [res.crb for res in block if res.crb is not None]
        if crbs:
            ns = _nanmean([c.ncrb_sparse for c in crbs])
            nd = _nanmean([c.ncrb_diffuse for c in crbs])
            for method, val, sp, df in (("ncrb_sparse", ns, ns, math.nan), ("ncrb_diffuse", nd, math.nan, nd)):
                records.append(TrialRecord(
                    snr_db=float(snr), method=method, trial_index=-1, seed=config.master_seed,
                    nmse_total=val, nmse_sparse=sp, nmse_diffuse=df, support_size=0, duality_gap=0.0,
                    kkt_max_residual=0.0, converged=True, runtime_ms=0.0, tau=0.0, lam=0.0,
                ))

    if write and config.output_path:
        write_csv(records, config.output_path)
        meta = {
            "version": __version__,
            "backend": backend_name(),
            "config": config.to_dict(),
            "trials_per_snr": config.trials,
            "hyperparameters": "auto (default_hyperparams with true diffuse energy)" if config.hals_opts == "auto" else "explicit",
            "crb_covariances": "generative (K_s, K_d of the channel sampler)" if config.compute_crb else None,
            "wall_seconds": wall,
            "threads": n_threads,
        }
        with open(config.output_path + ".meta.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2)
    return records


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(records, path_or_file):
    if hasattr(path_or_file, "write"):
        _write_rows(records, path_or_file)
        return
    with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
        _write_rows(records, fh)


def _write_rows(records, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rec in records:
        w.writerow([_fmt(getattr(rec, f.name)) for f in dataclasses.fields(TrialRecord)])


def read_csv(path):
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise DomainError(f"unexpected CSV header {header}")
        for row in reader:
            vals = {}
            for f, cell in zip(dataclasses.fields(TrialRecord), row):
                if f.type in ("float", float):
                    vals[f.name] = float(cell)
                elif f.type in ("int", int):
                    vals[f.name] = int(cell)
                elif f.type in ("bool", bool):
                    vals[f.name] = cell == "true"
                else:
                    vals[f.name] = cell
            out.append(TrialRecord(**vals))
    return out


def summarize(records):
    """Median and mean ``nmse_total`` per ``(snr_db, method)``."""
    groups = {}
    for rec in records:
        groups.setdefault((rec.snr_db, rec.method), []).append(rec)
    out = {}
    for key, recs in groups.items():
        vals = np.array([r.nmse_total for r in recs])
        out[key] = {
            "median": float(np.median(vals)),
            "mean": float(np.mean(vals)),
            "nmse_sparse_mean": _nanmean([r.nmse_sparse for r in recs]),
            "nmse_diffuse_mean": _nanmean([r.nmse_diffuse for r in recs]),
            "n": len(recs),
        }
    return out


def failure_fraction(records):
    solved = [r for r in records if r.method in ("hals", "anm")]
    if not solved:
        return 0.0
    return sum(not r.converged for r in solved) / len(solved)
