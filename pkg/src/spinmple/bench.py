"""Consistency experiment: estimation error of the MPLE as ``n`` grows."""

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional

import numpy as np

from ._seeding import derive_seed, resolve_threads
from .coupling import build_coupling, matvec, operator_norm
from .estimator import existence_check, mple_newton
from .exceptions import InsufficientData, NonExistence
from .graph import gen_complete, gen_erdos_renyi
from .model import t_tilde
from .sampler import sample_gibbs

__all__ = [
    "BenchConfig",
    "BenchRow",
    "CSV_FIELDS",
    "er_probability",
    "run_consistency",
    "fit_slope",
    "write_csv",
    "read_csv",
    "summarize",
]

CSV_FIELDS = ("n", "replicate", "beta_hat", "h_hat", "err2", "t_tilde", "j_norm", "exists",
              "iters", "wall_ms", "status")

# stream keys for the per-cell sub-seeds
_GRAPH, _DISORDER, _SAMPLE, _NORM = 1, 2, 3, 4


def er_probability(n, floor=0.05, scale=10.0):
    """Default edge probability ``max(floor, scale * log(n) / n)``."""
    return min(1.0, max(floor, scale * math.log(n) / n))


@dataclass(frozen=True)
class BenchConfig:
    graph: str = "complete"
    disorder: str = "gaussian"
    beta0: float = 0.5
    h0: float = 0.3
    n_grid: tuple = (128, 256, 512, 1024)
    replicates: int = 50
    burnin: Optional[int] = None
    seed: int = 0
    er_floor: float = 0.05
    er_scale: float = 10.0
    tol: float = 1e-10
    max_iters: int = 200

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if self.graph not in ("complete", "er"):
            raise ValueError(f"graph must be 'complete' or 'er', got {self.graph!r}")
        if not self.beta0 > 0:
            raise ValueError("beta0 must be positive")
        if not self.n_grid or any(n < 32 for n in self.n_grid):
            raise ValueError("every n in the grid must be at least 32")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n grid must be strictly increasing")
        if self.replicates < 10:
            raise ValueError("at least 10 replicates per n are required")

    def to_dict(self):
        return asdict(self)

    def cells(self):
        return [(n, r) for n in self.n_grid for r in range(self.replicates)]


@dataclass
class BenchRow:
    n: int
    replicate: int
    beta_hat: float = math.nan
    h_hat: float = math.nan
    err2: float = math.nan
    t_tilde: float = math.nan
    j_norm: float = math.nan
    exists: bool = False
    iters: int = 0
    wall_ms: float = 0.0
    status: str = "ok"

    @property
    def ok(self):
        return self.status == "ok"

    def key(self):
        return (self.n, self.replicate)

    def values(self):
        """Row contents without the timing column."""
        d = asdict(self)
        d.pop("wall_ms")
        return d


def _graph_for(cfg, n, r):
    if cfg.graph == "complete":
        return gen_complete(n)
    p = er_probability(n, cfg.er_floor, cfg.er_scale)
    return gen_erdos_renyi(n, p, derive_seed(cfg.seed, _GRAPH, n, r))


def run_cell(cfg, n, r):
    """One (n, replicate) cell: graph, disorder, Gibbs sample, MPLE."""
    t0 = time.perf_counter()
    row = BenchRow(n, r)
    try:
        g = _graph_for(cfg, n, r)
        j = build_coupling(g, cfg.disorder, derive_seed(cfg.seed, _DISORDER, n, r))
        row.j_norm = operator_norm(j, seed=derive_seed(cfg.seed, _NORM, n, r)).value
        tau = sample_gibbs(j, cfg.beta0, cfg.h0, burnin=cfg.burnin,
                           seed=derive_seed(cfg.seed, _SAMPLE, n, r))
        m = matvec(j, tau)
        row.t_tilde = t_tilde(cfg.beta0, cfg.h0, m)
        row.exists = existence_check(tau, m).exists
        rep = mple_newton(tau, m, tol=cfg.tol, max_iters=cfg.max_iters)
        row.beta_hat, row.h_hat, row.iters = rep.beta_hat, rep.h_hat, rep.iterations
        row.err2 = math.hypot(rep.beta_hat - cfg.beta0, rep.h_hat - cfg.h0)
        if not rep.converged:
            row.status = rep.status
    except NonExistence:
        row.status = "no_witness"
    except Exception as exc:  # recorded, never dropped
        row.status = f"error:{type(exc).__name__}"
    row.wall_ms = 1e3 * (time.perf_counter() - t0)
    return row


def run_consistency(cfg, threads=None, completed=(), progress=None):
    """Run every cell of ``cfg``; rows come back in (n, replicate) order.

    ``completed`` rows (e.g. loaded from a partial CSV) are reused verbatim
    and their cells are skipped.
    """
    done = {row.key(): row for row in completed}
    todo = [c for c in cfg.cells() if c not in done]
    with ThreadPoolExecutor(resolve_threads(threads)) as ex:
        for row in ex.map(lambda c: run_cell(cfg, *c), todo):
            done[row.key()] = row
            if progress is not None:
                progress(row)
    return [done[c] for c in cfg.cells()]


class SlopeFit(NamedTuple):
    slope: float
    intercept: float
    medians: dict


def fit_slope(rows, min_rows=10):
    """Least-squares line through ``(log n, log median err2)``.

    Only successful rows count; needs at least 3 values of ``n`` with
    ``min_rows`` successes each.
    """
    by_n = {}
    for row in rows:
        if row.ok and math.isfinite(row.err2):
            by_n.setdefault(int(row.n), []).append(row.err2)
    usable = {n: v for n, v in sorted(by_n.items()) if len(v) >= min_rows}
    if len(usable) < 3:
        raise InsufficientData(f"need 3 sizes with >= {min_rows} successful rows, got {len(usable)}")
    ns = np.array(list(usable), dtype=np.float64)
    med = np.array([np.median(v) for v in usable.values()])
    slope, intercept = np.polyfit(np.log(ns), np.log(med), 1)
    return SlopeFit(float(slope), float(intercept), {int(n): float(v) for n, v in zip(ns, med)})


def scaled_error_ratio(medians):
    """``max / min`` over n of ``sqrt(n) * median err2``."""
    vals = [math.sqrt(n) * e for n, e in medians.items()]
    return max(vals) / min(vals)


def summarize(rows, cfg=None, extra=None):
    fit = fit_slope(rows)
    out = {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "medians": {str(k): v for k, v in fit.medians.items()},
        "scaled_error_ratio": scaled_error_ratio(fit.medians),
        "rows": len(rows),
        "failures": sum(not r.ok for r in rows),
    }
    if cfg is not None:
        out["config"] = cfg.to_dict()
    if extra:
        out.update(extra)
    return out


def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_FIELDS)
        for row in rows:
            d = asdict(row)
            w.writerow([_fmt(d[k]) for k in CSV_FIELDS])


def read_csv(path):
    types = {"n": int, "replicate": int, "iters": int, "exists": lambda s: s == "1",
             "status": str}
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            kw = {k: types.get(k, float)(rec[k]) for k in CSV_FIELDS}
            rows.append(BenchRow(**kw))
    return rows


def write_summary(summary, path):
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
