"""Hitsets between the segments L_{-n} and L_n, and the hit probability of one cell."""
from __future__ import annotations

import math

import numpy as np

from ..dynamics import hitset_pairs_mesh, run_pair_dynamics
from ..grid import GridSpec, sample_field
from .common import (ExperimentConfig, ExperimentOutput, fit_linear, fit_loglog, map_trials,
                     mean_se, require_slope)


def mesh_spacing(cfg: ExperimentConfig, n: int, default_frac: float) -> float:
    """Configured spacing, or ``default_frac * n^{2/3}`` rounded to the grid (at least 1/G)."""
    sigma = cfg.sigma if cfg.sigma is not None else default_frac * n ** (2 / 3)
    return max(1, round(sigma * cfg.G)) / cfg.G


def mesh_field(cfg: ExperimentConfig, n: int, seed: int):
    pad = math.ceil(n ** (2 / 3)) + 1
    return sample_field(GridSpec(cfg.G, -n - pad, n + pad, -n, n), seed)


def middle_band(n: int, gamma: float) -> tuple[int, int]:
    return math.ceil(-(1 - gamma) * n), math.floor((1 - gamma) * n)


def hitset_trial(cfg: ExperimentConfig, n: int, trial: int) -> dict:
    seed = cfg.trial_seed(n, trial)
    field = mesh_field(cfg, n, seed)
    pairs = hitset_pairs_mesh(n, mesh_spacing(cfg, n, 0.25), cfg.G)
    for p, q in pairs:
        require_slope(p, q)
    marks = [cfg.dt * f for f in (0.25, 0.5, 0.75)]
    res = run_pair_dynamics(field, pairs, middle_band(n, cfg.gamma), (0.0, cfg.dt), seed=seed,
                            check=cfg.check, checkpoints=marks)
    sizes = [res.hitset.initial_size] + [c[2] for c in res.checkpoints] + [len(res.hitset.cells)]
    return {"sizes": sizes, "pairs": len(pairs), "slack": res.hitset_slack(), "switch": res.ledger.total}


def exp_hitset(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentOutput:
    tasks = [(n, k) for n in cfg.n for k in range(cfg.trials)]
    results = map_trials(hitset_trial, cfg, tasks, jobs)
    fracs = (0.0, 0.25, 0.5, 0.75, 1.0)
    rows = []
    monotone = True
    fits = {}
    for n in cfg.n:
        rs = [r for (nn, _), r in zip(tasks, results) if nn == n]
        S = np.array([r["sizes"] for r in rs], float)
        monotone &= bool(np.all(np.diff(S, axis=1) >= 0))
        pts = []
        for j, f in enumerate(fracs):
            m, se = mean_se(S[:, j])
            rows.append({"n": n, "dt": f * cfg.dt, "pairs": rs[0]["pairs"], "trials": len(rs),
                         "mean_hitset": m, "stderr": se})
            pts.append((f * cfg.dt, m, se))
        fits[f"hitset_vs_dt_n{n}"] = fit_linear(pts) if cfg.dt > 0 else None
    for label, j in (("static", 0), ("window", len(fracs) - 1)):
        pts = [(r["n"], r["mean_hitset"], r["stderr"]) for r in rows if r["dt"] == fracs[j] * cfg.dt]
        fits[f"hitset_vs_n_{label}"] = fit_loglog(pts) if len(pts) >= 3 else None
    checks = {"monotone_in_dt": monotone, "hitset_min_slack": int(min(r["slack"] for r in results))}
    return ExperimentOutput("hitset", cfg, {"main": rows}, fits, checks)


def hit_probability_trial(cfg: ExperimentConfig, n: int, trial: int) -> dict:
    seed = cfg.trial_seed(n, trial)
    field = mesh_field(cfg, n, seed)
    pairs = hitset_pairs_mesh(n, mesh_spacing(cfg, n, 1.0), cfg.G)
    window = n ** (-2 / 3) if cfg.dt > 0 else 0.0
    res = run_pair_dynamics(field, pairs, (math.ceil(-n / 2), math.floor(n / 2)), (0.0, window),
                            seed=seed, check=cfg.check, stop_cell=(0, 0))
    static_hit = (0, 0) in res.hitset.initial
    return {"hit": (0, 0) in res.hitset.cells, "static_hit": static_hit, "events": res.events}


def exp_hit_probability(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentOutput:
    tasks = [(n, k) for n in cfg.n for k in range(cfg.trials)]
    results = map_trials(hit_probability_trial, cfg, tasks, jobs)
    rows = []
    for n in cfg.n:
        rs = [r for (nn, _), r in zip(tasks, results) if nn == n]
        p, se = mean_se([r["hit"] for r in rs])
        ps, ses = mean_se([r["static_hit"] for r in rs])
        rows.append({"n": n, "window": n ** (-2 / 3) if cfg.dt > 0 else 0.0, "trials": len(rs),
                     "p_hit": p, "stderr": se, "p_static": ps, "stderr_static": ses,
                     "mean_events": float(np.mean([r["events"] for r in rs]))})
    nonincreasing = all(b["p_hit"] <= a["p_hit"] + 2 * math.hypot(a["stderr"], b["stderr"])
                        for a, b in zip(rows, rows[1:]))
    fits = {"p_hit_vs_n": None}
    if len(rows) >= 3 and all(r["p_hit"] > 0 for r in rows):
        fits["p_hit_vs_n"] = fit_loglog([(r["n"], r["p_hit"], r["stderr"]) for r in rows])
    return ExperimentOutput("hit_probability", cfg, {"main": rows}, fits,
                            {"nonincreasing_2se": bool(nonincreasing)})
