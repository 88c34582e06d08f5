"""Geodesic switch counts for (0,0) -> (n,n) and their scaling in n."""
from __future__ import annotations

import math

import numpy as np

from ..dynamics import run_pair_dynamics
from ..grid import GridSpec, sample_field
from ..lpp import Point
from .common import (ExperimentConfig, ExperimentOutput, fit_loglog, jackknife, map_trials,
                     mean_se, ratio_of_means)


def band(n: int, beta: float) -> tuple[int, int]:
    return math.ceil(beta * n), math.floor((1 - beta) * n)


def switch_trial(cfg: ExperimentConfig, n: int, trial: int) -> dict:
    """One run over ``[0, 2 dt]`` with a checkpoint at ``dt``."""
    seed = cfg.trial_seed(n, trial)
    field = sample_field(GridSpec(cfg.G, -1, n + 1, 0, n), seed)
    K = band(n, cfg.beta)
    res = run_pair_dynamics(field, [(Point(0, 0), Point(n, n))], K, (0.0, 2 * cfg.dt),
                            seed=seed, check=cfg.check, checkpoints=(cfg.dt,))
    half = res.checkpoints[0][1] if res.checkpoints else 0
    return {"switch_dt": half, "switch_2dt": res.ledger.total, "events": res.events,
            "buckets": _level_sums(res.ledger.buckets),
            "hitset_slack": res.hitset_slack()}


def _level_sums(buckets) -> dict:
    out: dict = {}
    for (ell, _m), v in buckets.items():
        out[str(ell)] = out.get(str(ell), 0) + v
    return out


def exp_switch_scaling(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentOutput:
    tasks = [(n, k) for n in cfg.n for k in range(cfg.trials)]
    results = map_trials(switch_trial, cfg, tasks, jobs)
    rows, bucket_rows = [], []
    checks = {"hitset_min_slack": None, "runs": len(results)}
    slacks = []
    for n in cfg.n:
        rs = [r for (nn, _), r in zip(tasks, results) if nn == n]
        s1 = np.array([r["switch_dt"] for r in rs], float)
        s2 = np.array([r["switch_2dt"] for r in rs], float)
        m1, se1 = mean_se(s1)
        m2, se2 = mean_se(s2)
        ratio, ratio_se = jackknife(ratio_of_means, s2, s1) if m1 > 0 else (math.nan, math.nan)
        rows.append({"n": n, "trials": len(rs), "dt": cfg.dt, "mean_switch": m1, "stderr": se1,
                     "mean_switch_2dt": m2, "stderr_2dt": se2, "ratio": ratio, "ratio_stderr": ratio_se,
                     "mean_events": float(np.mean([r["events"] for r in rs]))})
        levels = sorted({int(l) for r in rs for l in r["buckets"]})
        for ell in levels:
            v = [r["buckets"].get(str(ell), 0) for r in rs]
            mb, sb = mean_se(v)
            bucket_rows.append({"n": n, "ell": ell, "mean_switch_2dt": mb, "stderr": sb})
        slacks += [r["hitset_slack"] for r in rs]
    checks["hitset_min_slack"] = int(min(slacks)) if slacks else None
    fits = {"switch_vs_n": None}
    pts = [(r["n"], r["mean_switch"], r["stderr"]) for r in rows if r["mean_switch"] > 0]
    if len(pts) >= 3 and len(pts) == len(rows):
        fits["switch_vs_n"] = fit_loglog(pts)
    return ExperimentOutput("switch_scaling", cfg, {"main": rows, "buckets": bucket_rows}, fits, checks)
