"""Command-line interface: ``spinmple {gen,sample,estimate,verify,bench}``.

Options may also come from a JSON file given with ``--config``; explicit
flags override it.  Exit codes: 0 success, 1 usage/validation error,
2 no existence witness, 3 no convergence, 4 I/O error.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from ._seeding import derive_seed, resolve_threads
from .bench import (
    BenchConfig,
    er_probability,
    read_csv,
    run_consistency,
    summarize,
    write_csv,
    write_summary,
)
from .coupling import build_coupling, matvec
from .diagnostics import Thresholds, verify_conditions
from .estimator import existence_check, mple_grid_oracle, mple_newton
from .exceptions import InsufficientData, NonExistence, SpinGlassError
from .graph import gen_complete, gen_erdos_renyi
from .io import dump_coupling, dump_edge_list, dump_samples, load_coupling, load_edge_list, load_samples
from .sampler import EXACT_MAX_N, exact_enumerate, exact_sample, gibbs_samples, sample_gibbs

EXIT_OK, EXIT_USAGE, EXIT_NO_WITNESS, EXIT_NO_CONVERGENCE, EXIT_IO = 0, 1, 2, 3, 4

DEFAULTS = {
    "gen": {"graph": "complete", "n": 64, "p": None, "edges": None, "disorder": "gaussian",
            "seed": 0, "out": "spinglass", "hexfloat": False},
    "sample": {"coupling": None, "beta": 0.5, "h": 0.3, "seed": 0, "burnin": None, "count": 1,
               "thin": 10, "exact": False, "out": None},
    "estimate": {"coupling": None, "samples": None, "tol": 1e-10, "max_iters": 200,
                 "force": False, "oracle_grid": False, "grid_resolution": 1e-3,
                 "grid_halfwidth": 0.5},
    "verify": {"coupling": None, "beta": 0.5, "h": 0.3, "seed": 0, "replicates": 20,
               "num_configs": 10_000, "score_samples": 100, "burnin": None,
               "j_norm_threshold": 4.0, "t_tilde_threshold": 1e-3, "json": None,
               "threads": None},
    "bench": {"graph": "complete", "disorder": "gaussian", "beta0": 0.5, "h0": 0.3,
              "n_grid": "128,256,512,1024", "replicates": 50, "burnin": None, "seed": 0,
              "out": "bench.csv", "summary": None, "dry_run": False, "resume": False,
              "threads": None},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _flag(p, *names, **kw):
    kw.setdefault("default", argparse.SUPPRESS)
    p.add_argument(*names, **kw)


def build_parser():
    parser = _Parser(prog="spinmple", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a graph and its coupling matrix")
    _flag(p, "--graph", choices=["complete", "er", "file"])
    _flag(p, "--n", type=int)
    _flag(p, "--p", type=float, help="edge probability (default: max(0.05, 10 log n / n))")
    _flag(p, "--edges", help="edge list to read when --graph file")
    _flag(p, "--disorder", choices=["gaussian", "rademacher", "uniform"])
    _flag(p, "--seed", type=int)
    _flag(p, "--out", help="output prefix; writes PREFIX.edges and PREFIX.coupling")
    _flag(p, "--hexfloat", action="store_true")

    p = sub.add_parser("sample", help="draw spin configurations")
    _flag(p, "--coupling")
    _flag(p, "--beta", type=float)
    _flag(p, "--h", type=float)
    _flag(p, "--seed", type=int)
    _flag(p, "--burnin", type=int)
    _flag(p, "--count", type=int)
    _flag(p, "--thin", type=int)
    _flag(p, "--exact", action="store_true", help=f"exact enumeration (n <= {EXACT_MAX_N})")
    _flag(p, "--out")

    p = sub.add_parser("estimate", help="joint MPLE of (beta, h)")
    _flag(p, "--coupling")
    _flag(p, "--samples")
    _flag(p, "--tol", type=float)
    _flag(p, "--max-iters", dest="max_iters", type=int)
    _flag(p, "--force", action="store_true")
    _flag(p, "--oracle-grid", dest="oracle_grid", action="store_true")
    _flag(p, "--grid-resolution", dest="grid_resolution", type=float)
    _flag(p, "--grid-halfwidth", dest="grid_halfwidth", type=float)

    p = sub.add_parser("verify", help="check the consistency conditions")
    _flag(p, "--coupling")
    _flag(p, "--beta", type=float)
    _flag(p, "--h", type=float)
    _flag(p, "--seed", type=int)
    _flag(p, "--replicates", type=int)
    _flag(p, "--num-configs", dest="num_configs", type=int)
    _flag(p, "--score-samples", dest="score_samples", type=int)
    _flag(p, "--burnin", type=int)
    _flag(p, "--j-norm-threshold", dest="j_norm_threshold", type=float)
    _flag(p, "--t-tilde-threshold", dest="t_tilde_threshold", type=float)
    _flag(p, "--json", help="write the report here instead of stdout")
    _flag(p, "--threads", type=int)

    p = sub.add_parser("bench", help="consistency benchmark over a grid of n")
    _flag(p, "--graph", choices=["complete", "er"])
    _flag(p, "--disorder", choices=["gaussian", "rademacher", "uniform"])
    _flag(p, "--beta0", type=float)
    _flag(p, "--h0", type=float)
    _flag(p, "--n-grid", dest="n_grid", help="comma-separated sizes")
    _flag(p, "--replicates", type=int)
    _flag(p, "--burnin", type=int)
    _flag(p, "--seed", type=int)
    _flag(p, "--out")
    _flag(p, "--summary")
    _flag(p, "--dry-run", dest="dry_run", action="store_true")
    _flag(p, "--resume", action="store_true")
    _flag(p, "--threads", type=int)

    for name in sub.choices:
        _flag(sub.choices[name], "--config", help="JSON file with option values")
    return parser


def resolve_config(command, ns):
    """Defaults, then the ``--config`` file, then explicit flags."""
    explicit = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    cfg = dict(DEFAULTS[command])
    path = getattr(ns, "config", None)
    if path:
        with open(path) as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    cfg.update(explicit)
    return cfg


def _meta(command, cfg):
    return {"tool": "spinmple", "version": __version__, "command": command, "config": cfg,
            "seed": cfg.get("seed")}


def _require(cfg, key):
    if not cfg.get(key):
        raise UsageError(f"--{key.replace('_', '-')} is required")
    return cfg[key]


def _read(path, loader):
    with open(path) as fh:
        return loader(fh)


def cmd_gen(cfg, out):
    n, seed = int(cfg["n"]), int(cfg["seed"])
    if cfg["graph"] == "complete":
        g = gen_complete(n)
    elif cfg["graph"] == "er":
        p = cfg["p"] if cfg["p"] is not None else er_probability(n)
        g = gen_erdos_renyi(n, p, derive_seed(seed, 1))
    else:
        g = _read(_require(cfg, "edges"), load_edge_list)
    j = build_coupling(g, cfg["disorder"], derive_seed(seed, 2))
    meta = _meta("gen", cfg)
    prefix = cfg["out"]
    with open(prefix + ".edges", "w") as fh:
        dump_edge_list(g, fh, meta=meta)
    with open(prefix + ".coupling", "w") as fh:
        dump_coupling(j, fh, hexfloat=cfg["hexfloat"], meta=meta)
    s = g.summary()
    print(f"n={s['n']} edges={s['n_edges']} d_avg={s['d_avg']:.6g} d_max={s['d_max']} "
          f"ratio_c={s['ratio_c']:.6g}", file=out)
    if g.d_avg < 4.0 * math.log(g.n):
        print(f"warning: d_avg={g.d_avg:.3g} < 4 log n = {4 * math.log(g.n):.3g}; "
              "the graph may be too sparse for consistency", file=out)
    for w in g.warnings:
        print(f"warning: {w}", file=out)
    return EXIT_OK


def cmd_sample(cfg, out):
    j = _read(_require(cfg, "coupling"), load_coupling)
    beta, h, seed, count = float(cfg["beta"]), float(cfg["h"]), int(cfg["seed"]), int(cfg["count"])
    if count < 1:
        raise UsageError("--count must be positive")
    if cfg["exact"]:
        if j.n > 16:
            raise UsageError("--exact is limited to n <= 16")
        xs = exact_sample(exact_enumerate(j, beta, h), seed, size=count)
    elif count == 1:
        xs = sample_gibbs(j, beta, h, burnin=cfg["burnin"], seed=seed)[None, :]
    else:
        xs = gibbs_samples(j, beta, h, count, thin=int(cfg["thin"]), burnin=cfg["burnin"],
                           seed=seed)
    meta = _meta("sample", cfg)
    if cfg["out"]:
        with open(cfg["out"], "w") as fh:
            dump_samples(xs, fh, meta=meta)
    else:
        dump_samples(xs, out, meta=meta)
    return EXIT_OK


def cmd_estimate(cfg, out):
    j = _read(_require(cfg, "coupling"), load_coupling)
    xs = _read(_require(cfg, "samples"), load_samples)
    if xs.shape[1] != j.n:
        raise UsageError(f"samples have {xs.shape[1]} sites, coupling has n={j.n}")
    sigma, m = xs.ravel(), matvec(j, xs).ravel()
    result = {"provenance": _meta("estimate", cfg)}
    try:
        rep = mple_newton(sigma, m, tol=float(cfg["tol"]), max_iters=int(cfg["max_iters"]),
                          force=bool(cfg["force"]))
    except NonExistence as exc:
        result.update({"exists": False, "reason": str(exc)})
        print(json.dumps(result, indent=2), file=out)
        return EXIT_NO_WITNESS
    result["report"] = rep.to_dict()
    result["witness"] = existence_check(sigma, m).__dict__
    if cfg["oracle_grid"]:
        w, res = float(cfg["grid_halfwidth"]), float(cfg["grid_resolution"])
        box = (rep.beta_hat - w, rep.beta_hat + w, rep.h_hat - w, rep.h_hat + w)
        grid = mple_grid_oracle(sigma, m, box, res)
        agree = abs(grid.beta - rep.beta_hat) <= res * (1 + 1e-9) and abs(grid.h - rep.h_hat) <= res * (1 + 1e-9)
        result["oracle_grid"] = {**grid._asdict(), "within_cell": agree}
    print(json.dumps(result, indent=2, default=_json_default), file=out)
    return EXIT_OK if rep.converged else EXIT_NO_CONVERGENCE


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(type(o).__name__)


def cmd_verify(cfg, out):
    j = _read(_require(cfg, "coupling"), load_coupling)
    th = Thresholds(j_norm=float(cfg["j_norm_threshold"]), t_tilde=float(cfg["t_tilde_threshold"]))
    rep = verify_conditions(j, float(cfg["beta"]), float(cfg["h"]), seed=int(cfg["seed"]),
                            replicates=int(cfg["replicates"]), num_configs=int(cfg["num_configs"]),
                            score_samples=int(cfg["score_samples"]), thresholds=th,
                            threads=cfg["threads"], burnin=cfg["burnin"])
    payload = {"provenance": _meta("verify", cfg), "report": rep.to_dict()}
    rows = [
        ("operator_norm", f"{rep.j_norm:.4g} <= {rep.j_norm_threshold:g}"),
        ("t_tilde_positive", f"min {rep.t_tilde_min:.4g} ({rep.t_tilde_min_method}) >= {rep.t_tilde_threshold:g}"),
        ("existence", f"{rep.existence_fraction:.3f} >= {rep.existence_threshold:g}"),
        ("score_moments", f"S {rep.score_moment_s:.4g}, Q {rep.score_moment_q:.4g} <= {rep.score_moment_threshold:g}"),
    ]
    table = sys.stderr if cfg["json"] is None else out
    for name, detail in rows:
        print(f"{'PASS' if rep.passed[name] else 'FAIL':4}  {name:18} {detail}", file=table)
    text = json.dumps(payload, indent=2, sort_keys=True)
    if cfg["json"]:
        with open(cfg["json"], "w") as fh:
            fh.write(text + "\n")
    else:
        print(text, file=out)
    return EXIT_OK


def cmd_bench(cfg, out):
    try:
        grid = tuple(int(v) for v in str(cfg["n_grid"]).split(","))
    except ValueError:
        raise UsageError(f"bad --n-grid {cfg['n_grid']!r}") from None
    bc = BenchConfig(graph=cfg["graph"], disorder=cfg["disorder"], beta0=float(cfg["beta0"]),
                     h0=float(cfg["h0"]), n_grid=grid, replicates=int(cfg["replicates"]),
                     burnin=cfg["burnin"], seed=int(cfg["seed"]))
    threads = resolve_threads(cfg["threads"])
    if cfg["dry_run"]:
        plan = {"config": bc.to_dict(), "cells": len(bc.cells()), "threads": threads,
                "out": cfg["out"]}
        if bc.graph == "er":
            plan["er_p"] = {n: er_probability(n, bc.er_floor, bc.er_scale) for n in bc.n_grid}
        print(json.dumps(plan, indent=2), file=out)
        return EXIT_OK
    completed = []
    if cfg["resume"] and os.path.exists(cfg["out"]):
        cells = set(bc.cells())
        completed = [r for r in read_csv(cfg["out"]) if r.key() in cells]
    rows = run_consistency(bc, threads=threads, completed=completed)
    write_csv(rows, cfg["out"])
    meta = {"provenance": _meta("bench", cfg), "resumed_rows": len(completed)}
    try:
        summary = summarize(rows, bc, meta)
    except InsufficientData as exc:
        summary = {**meta, "error": str(exc), "rows": len(rows)}
    summary_path = cfg["summary"] or os.path.splitext(cfg["out"])[0] + ".summary.json"
    write_summary(summary, summary_path)
    print(json.dumps({k: summary[k] for k in ("slope", "scaled_error_ratio", "medians") if k in summary}),
          file=out)
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "sample": cmd_sample, "estimate": cmd_estimate,
            "verify": cmd_verify, "bench": cmd_bench}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    ns = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(ns.command, ns)
        return COMMANDS[ns.command](cfg, out)
    except OSError as exc:
        print(f"spinmple: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ValueError, SpinGlassError) as exc:
        print(f"spinmple: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
