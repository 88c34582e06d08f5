"""Time-invariance of the law of T under the dynamics, with a drifted negative control."""
from __future__ import annotations

import numpy as np
from scipy.stats import ks_2samp

from ..dynamics import evolve_field
from ..grid import GridSpec, sample_field
from ..lpp import Point, passage_time
from .common import ExperimentConfig, ExperimentOutput, map_trials, mean_se

LEVEL = 0.01


def all_blocks(field) -> list:
    s = field.spec
    return [(i, m) for m in range(s.m_min, s.m_max + 1) for i in range(s.x_min, s.x_max)]


def stationarity_trial(cfg: ExperimentConfig, rep: int, run: int) -> dict:
    n = cfg.n[0]
    seed = cfg.trial_seed(rep, run)
    field = sample_field(GridSpec(cfg.G, -1, n + 1, 0, n), seed)
    p, q = Point(0, 0), Point(n, n)
    T0, _ = passage_time(field, p, q)
    cells = all_blocks(field)
    drifted = field.copy()
    evolve_field(field, cells, (0.0, cfg.dt), seed)
    evolve_field(drifted, cells, (0.0, cfg.dt), seed, drift=cfg.drift)
    return {"T0": T0, "T1": passage_time(field, p, q)[0], "T1_drift": passage_time(drifted, p, q)[0]}


def exp_stationarity(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentOutput:
    tasks = [(r, j) for r in range(cfg.reps) for j in range(cfg.trials)]
    results = map_trials(stationarity_trial, cfg, tasks, jobs)
    rows = []
    for r in range(cfg.reps):
        rs = results[r * cfg.trials:(r + 1) * cfg.trials]
        T0 = np.array([x["T0"] for x in rs])
        T1 = np.array([x["T1"] for x in rs])
        Td = np.array([x["T1_drift"] for x in rs])
        null = ks_2samp(T0, T1)
        ctrl = ks_2samp(T0, Td)
        rows.append({"rep": r, "runs": len(rs), "t_end": cfg.dt, "ks": float(null.statistic),
                     "pvalue": float(null.pvalue), "reject": bool(null.pvalue < LEVEL),
                     "ks_drift": float(ctrl.statistic), "pvalue_drift": float(ctrl.pvalue),
                     "reject_drift": bool(ctrl.pvalue < LEVEL),
                     "mean_T0": float(T0.mean()), "mean_T1": float(T1.mean()),
                     "mean_T1_drift": float(Td.mean())})
    rej, rej_se = mean_se([r["reject"] for r in rows])
    rej_d, _ = mean_se([r["reject_drift"] for r in rows])
    checks = {"level": LEVEL, "null_rejection_rate": rej, "null_rejection_stderr": rej_se,
              "null_accept_rate": 1.0 - rej, "drift_rejection_rate": rej_d}
    return ExperimentOutput("stationarity", cfg, {"main": rows}, {}, checks)
