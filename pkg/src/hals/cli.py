"""Command line entry point: ``hals simulate|estimate|bench|crb``.

Exit codes: 0 success, 2 usage/config error, 3 I/O error, 4 numerical
failure in more than 10% of solver runs.
"""

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import replace

import numpy as np

from hals import bench
from hals.bounds import CrbInputs, crb_report
from hals.channel import (
    ChannelConfig,
    DiffuseGains,
    HsdChannelTruth,
    SparsePath,
    diffuse_basis,
    load_trace,
    sample_hsd,
    support_matrix,
)
from hals.errors import DomainError, HalsError, NumericalError, TraceFormatError, TraceLengthError
from hals.estimators import genie, least_squares, pipeline_anm, pipeline_hals
from hals.ofdm import Pilots, make_observation, nmse, observe, qpsk_pilots, sigma_for_snr

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4
BUNDLE_KIND = "hals-bundle"

log = logging.getLogger("hals")


class UsageError(HalsError):
    pass


def _pairs(v):
    return [[float(c.real), float(c.imag)] for c in np.asarray(v, dtype=complex).ravel()]


def _unpairs(p):
    a = np.asarray(p, dtype=float).reshape(-1, 2)
    return a[:, 0] + 1j * a[:, 1]


def _read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _write_text(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- bundles -----------------------------------------------------------------

def make_bundle(truth, pilots, obs, seed, snr_db):
    cfg = truth.config
    return {
        "kind": BUNDLE_KIND,
        "seed": int(seed),
        "snr_db": float(snr_db),
        "channel": {
            "config": {
                "N": cfg.N, "L": cfg.L, "m": cfg.m, "omega": cfg.omega, "beta": cfg.beta,
                "delta_t": cfg.delta_t, "seed": int(cfg.seed), "enforce_separation": cfg.enforce_separation,
            },
            "paths": [{"tau": p.tau, "alpha": [p.alpha.real, p.alpha.imag], "f": p.f} for p in truth.paths],
            "gamma": _pairs(truth.diffuse.gamma),
            "c_d": _pairs(truth.diffuse.c_d),
            "h_s": _pairs(truth.h_s),
            "h_d": _pairs(truth.h_d),
            "h": _pairs(truth.h),
            "K_s_diag": np.real(np.diag(truth.K_s)).tolist(),
            "K_d_diag": np.real(np.diag(truth.K_d)).tolist(),
        },
        "pilots": _pairs(pilots.s),
        "observation": {"y": _pairs(obs.y), "sigma": obs.sigma},
    }


def read_bundle(doc):
    """Rebuild ``(truth, pilots, observation)`` from a bundle document."""
    ch = doc["channel"]
    cfg = ChannelConfig(**ch["config"])
    paths = [SparsePath(float(p["tau"]), complex(*p["alpha"]), float(p["f"])) for p in ch["paths"]]
    freqs = [p.f for p in paths]
    truth = HsdChannelTruth(
        config=cfg,
        paths=paths,
        diffuse=DiffuseGains(gamma=_unpairs(ch["gamma"]), c_d=_unpairs(ch["c_d"])),
        h_s=_unpairs(ch["h_s"]),
        h_d=_unpairs(ch["h_d"]),
        h=_unpairs(ch["h"]),
        D=diffuse_basis(cfg.N, cfg.L),
        G=support_matrix(freqs, cfg.N),
        K_s=np.diag(np.asarray(ch["K_s_diag"], dtype=float)).astype(complex),
        K_d=np.diag(np.asarray(ch["K_d_diag"], dtype=float)).astype(complex),
    )
    pilots = Pilots(s=_unpairs(doc["pilots"]))
    obs = make_observation(_unpairs(doc["observation"]["y"]), pilots, doc["observation"]["sigma"])
    return truth, pilots, obs


def simulate_bundle(channel_cfg, snr_db, seed):
    truth = sample_hsd(replace(channel_cfg, seed=bench.derive_seed(seed, 0)))
    pilots = qpsk_pilots(channel_cfg.N, bench.derive_seed(seed, 1))
    sigma = sigma_for_snr(truth.h, snr_db)
    obs = observe(truth.h, pilots, sigma, bench.derive_seed(seed, 2))
    return truth, pilots, obs


# -- commands ----------------------------------------------------------------

def _bench_config(args):
    cfg = bench.load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.out:
        cfg = replace(cfg, output_path=args.out)
    if args.method:
        cfg = replace(cfg, methods=tuple(args.method.split(",")))
    if args.tau is not None or args.lam is not None:
        opts = {} if cfg.hals_opts == "auto" else dict(cfg.hals_opts)
        if args.tau is not None:
            opts["tau"] = args.tau
        if args.lam is not None:
            opts["lambda"] = args.lam
        cfg = replace(cfg, hals_opts=opts)
    if args.mu is not None:
        cfg = replace(cfg, genie_mu=args.mu)
    return cfg


def cmd_simulate(args):
    doc = _read_json(args.config)
    channel = ChannelConfig(**doc.get("channel", {}))
    snr = float(doc.get("snr_db", doc.get("snr_db_list", [10.0])[0]))
    seed = args.seed if args.seed is not None else int(doc.get("master_seed", doc.get("seed", 0)))
    truth, pilots, obs = simulate_bundle(channel, snr, seed)
    _write_text(json.dumps(make_bundle(truth, pilots, obs, seed, snr), indent=1) + "\n", args.out)
    return 0


def estimate(truth, obs, D, method, tau=None, lam=None, mu=None, hals_opts="auto"):
    """Run one estimator and build the JSON-ready summary."""
    N = obs.N
    cd_norm = float(np.linalg.norm(truth.diffuse.c_d)) if truth is not None else None
    opts = None
    if method in ("hals", "anm") or (method == "genie" and mu is None):
        cfg_opts = {} if hals_opts == "auto" else dict(hals_opts)
        if tau is not None:
            cfg_opts["tau"] = tau
        if lam is not None:
            cfg_opts["lambda"] = lam
        opts = bench.resolve_hyperparams(cfg_opts, obs.sigma, N, D.shape[1], cd_norm, method != "anm")

    if method == "hals":
        est = pipeline_hals(obs, D, opts)
    elif method == "anm":
        est = pipeline_anm(obs, opts)
    elif method == "ls":
        est = least_squares(obs)
    elif method == "genie":
        if truth is None:
            raise UsageError("genie needs the true sparse support (bundle input)")
        mu = mu if mu is not None else opts.lam
        est = genie(obs, truth.G, D, mu)
    else:
        raise UsageError(f"unknown method {method!r}")

    out = {"method": method, "h_hat": _pairs(est.h_hat)}
    if opts is not None:
        out.update(tau=opts.tau, **{"lambda": opts.lam})
    if method == "genie":
        out["mu"] = mu
    if truth is not None:
        out["nmse"] = nmse(truth.h, est.h_hat)
        out["nmse_sparse"] = nmse(truth.h_s, est.h_s_hat) if np.any(truth.h_s) else None
        out["nmse_diffuse"] = nmse(truth.h_d, est.h_d_hat) if np.any(truth.h_d) else None
    if est.support is not None:
        out["support_freqs"] = est.support.freqs.tolist()
        out["support_peaks"] = est.support.peak_values.tolist()
    if "kkt" in est.diagnostics:
        k = est.diagnostics["kkt"]
        out["kkt"] = {
            "dual_norm": k.dual_norm,
            "dual_norm_residual": k.dual_norm_residual,
            "ridge_residual": k.ridge_residual,
            "alignment_residual": k.alignment_residual,
            "energy_bound_ok": k.energy_bound_ok,
        }
        out["converged"] = est.diagnostics["converged"]
        out["duality_gap"] = est.diagnostics["duality_gap"]
    return out, est


def cmd_estimate(args):
    doc = _read_json(args.config)
    method = args.method or "hals"
    if doc.get("kind") == BUNDLE_KIND:
        truth, _, obs = read_bundle(doc)
        D = truth.D
        hals_opts = "auto"
    else:
        cfg = bench.BenchConfig.from_dict(doc)
        if cfg.trace_path is None:
            raise UsageError("estimate needs a bundle or a config with trace_path")
        N = cfg.channel.N
        h = load_trace(cfg.trace_path, N)
        seed = args.seed if args.seed is not None else cfg.master_seed
        pilots = qpsk_pilots(N, bench.derive_seed(seed, 1))
        sigma = sigma_for_snr(h, cfg.snr_db_list[0])
        obs = observe(h, pilots, sigma, bench.derive_seed(seed, 2))
        D = diffuse_basis(N, cfg.diffuse_width_for_trace)
        truth = None
        hals_opts = cfg.hals_opts
    out, _ = estimate(truth, obs, D, method, args.tau, args.lam, args.mu, hals_opts)
    if truth is None:
        out["nmse"] = nmse(h, _unpairs(out["h_hat"]))
    _write_text(json.dumps(out, indent=1) + "\n", args.out)
    return 0


def cmd_bench(args):
    cfg = _bench_config(args)
    records = bench.run_bench(cfg)
    if not cfg.output_path:
        bench.write_csv(records, sys.stdout)
    summary = bench.summarize(records)
    for (snr, method), s in sorted(summary.items()):
        log.info("snr=%5.1f %-12s median=%.4g mean=%.4g n=%d", snr, method, s["median"], s["mean"], s["n"])
    if bench.failure_fraction(records) > 0.10:
        log.error("solver failed to converge in more than 10%% of runs")
        return EXIT_NUMERICAL
    return 0


CRB_HEADER = ["snr_db", "ncrb_sparse", "ncrb_diffuse", "crb_sparse", "crb_diffuse", "epsilon", "trials"]


def crb_rows(cfg):
    """Per-SNR averages of the per-trial bounds for a synthetic config."""
    if cfg.trace_path is not None:
        raise UsageError("CRBs need generative covariances; trace input is unsupported")
    rows = []
    for i, snr in enumerate(cfg.snr_db_list):
        reps = []
        for k in range(cfg.trials):
            seed = bench.derive_seed(cfg.master_seed, i, k)
            truth, pilots, obs = simulate_bundle(cfg.channel, snr, seed)
            if truth.G.shape[1] == 0:
                continue
            reps.append(crb_report(CrbInputs.from_truth(truth, obs.sigma, pilots)))
        if not reps:
            raise UsageError("config has no sparse paths (m = 0)")

        def avg(name):
            vals = [getattr(r, name) for r in reps if not math.isnan(getattr(r, name))]
            return float(np.mean(vals)) if vals else math.nan

        rows.append([float(snr), avg("ncrb_sparse"), avg("ncrb_diffuse"), avg("crb_sparse"),
                     avg("crb_diffuse"), avg("epsilon"), len(reps)])
    return rows


def cmd_crb(args):
    cfg = _bench_config(args)
    rows = crb_rows(cfg)
    out = args.out or cfg.output_path
    fh = open(out, "w", newline="", encoding="utf-8") if out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CRB_HEADER)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    finally:
        if out:
            fh.close()
    return 0


COMMANDS = {"simulate": cmd_simulate, "estimate": cmd_estimate, "bench": cmd_bench, "crb": cmd_crb}


def build_parser():
    p = argparse.ArgumentParser(prog="hals", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON config, bundle, or trace config")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--tau", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--method", help="hals, anm, ls or genie (comma list for bench)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s")
    if args.method and args.command != "bench" and args.method not in bench.METHODS:
        parser.error(f"unknown method {args.method!r}")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, DomainError, KeyError, TypeError) as exc:
        print(f"hals: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TraceFormatError, TraceLengthError, OSError, json.JSONDecodeError) as exc:
        print(f"hals: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericalError as exc:
        print(f"hals: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
