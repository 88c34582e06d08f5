"""Static campaigns: transversal fluctuations, twin peaks, peak counts, basins."""
from __future__ import annotations

import math

import numpy as np

from ..grid import GridSpec, sample_field
from ..lpp import (Point, Staircase, forward_dp, gap_tolerance, passage_time, peak_counts,
                   profile_table, routed_profile, twin_peak_from_profile)
from ..seeding import child_rng
from .common import ExperimentConfig, ExperimentOutput, fit_loglog, map_trials, mean_se


# --------------------------------------------------------------------------
# transversal fluctuations
# --------------------------------------------------------------------------

def line_deviation(xi: Staircase) -> np.ndarray:
    """Per line ``k``: largest horizontal distance from the diagonal ``x = k``
    over the horizontal piece on ``k`` and the vertical step leaving it."""
    z = xi.jumps
    k = np.arange(xi.m0, xi.n1 + 1)
    dev = np.maximum(np.abs(z[:-1] - k), np.abs(z[1:] - k))
    dev[:-1] = np.maximum(dev[:-1], np.abs(z[1:-1] - k[:-1] - 1))
    return dev


def transversal_trial(cfg: ExperimentConfig, n: int, trial: int) -> dict:
    field = sample_field(GridSpec(cfg.G, -1, n + 1, 0, n), cfg.trial_seed(n, trial))
    _, dp = passage_time(field, Point(0, 0), Point(n, n))
    geo = dp.geodesic_to(Point(n, n))
    dev = line_deviation(geo)
    meso = {}
    for ell in cfg.ells:
        if 1 <= ell <= n:
            # TF_ell: distance of the geodesic's line-ell section from the diagonal
            tf = max(abs(geo.z(ell - 1) - ell), abs(geo.z(ell) - ell))
            meso[ell] = tf / ell ** (2 / 3)
    return {"dev": float(dev.max()) / n ** (2 / 3), "meso": meso}


def exp_transversal(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentOutput:
    tasks = [(n, k) for n in cfg.n for k in range(cfg.trials)]
    results = map_trials(transversal_trial, cfg, tasks, jobs)
    rows, meso_rows = [], []
    monotone = True
    for n in cfg.n:
        devs = np.array([r["dev"] for (nn, _), r in zip(tasks, results) if nn == n])
        prev = math.inf
        for a in sorted(cfg.alphas):
            p, se = mean_se(devs > a)
            monotone &= p <= prev
            prev = p
            rows.append({"n": n, "alpha": a, "trials": devs.size, "exceed": p, "stderr": se})
        for ell in cfg.ells:
            v = [r["meso"][ell] for (nn, _), r in zip(tasks, results) if nn == n and ell in r["meso"]]
            if v:
                m, se = mean_se(v)
                meso_rows.append({"n": n, "ell": ell, "mean_tf_scaled": m, "stderr": se,
                                  "q90": float(np.quantile(v, 0.9))})
    checks = {"exceedance_nonincreasing": bool(monotone)}
    return ExperimentOutput("transversal", cfg, {"main": rows, "meso": meso_rows}, {}, checks)


# --------------------------------------------------------------------------
# twin peaks
# --------------------------------------------------------------------------

def twin_peak_trial(cfg: ExperimentConfig, n: int, trial: int) -> dict:
    field = sample_field(GridSpec(cfg.G, -1, n + 1, 0, n), cfg.trial_seed(n, trial))
    m = n // 2
    p1, p2 = Point(0, 0), Point(n, n)
    T, dp = passage_time(field, p1, p2)
    gamma_m = dp.geodesic_to(p2).z(m)
    prof = routed_profile(field, p1, p2, m, "split", forward=dp)
    hits = {ell: twin_peak_from_profile(prof, T, gamma_m, ell, cfg.delta) for ell in cfg.ells}
    return {"hits": hits, "max_gap_err": float(prof.values.max() - T)}


def exp_twin_peaks(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentOutput:
    n = cfg.n[0]
    m = n // 2
    if not cfg.beta * n <= m <= (1 - cfg.beta) * n:
        raise ValueError("line n/2 outside the configured band")
    if max(cfg.ells) > n:
        raise ValueError("every ell must be <= n")
    results = map_trials(twin_peak_trial, cfg, [(n, k) for k in range(cfg.trials)], jobs)
    rows = []
    for ell in cfg.ells:
        p, se = mean_se([r["hits"][ell] for r in results])
        rows.append({"n": n, "m": m, "ell": ell, "delta": cfg.delta, "trials": len(results),
                     "freq": p, "stderr": se})
    nonincreasing = all(b["freq"] <= a["freq"] + 2 * math.hypot(a["stderr"], b["stderr"])
                        for a, b in zip(rows, rows[1:]))
    fits = {"freq_vs_ell": None}
    if len(rows) >= 3 and all(r["freq"] > 0 for r in rows):
        fits["freq_vs_ell"] = fit_loglog([(r["ell"], r["freq"], r["stderr"]) for r in rows])
    checks = {"nonincreasing_2se": bool(nonincreasing),
              "profile_max_matches_T": bool(max(abs(r["max_gap_err"]) for r in results) < 1e-9 * n)}
    return ExperimentOutput("twin_peaks", cfg, {"main": rows}, fits, checks)


# --------------------------------------------------------------------------
# peak counts
# --------------------------------------------------------------------------

def peak_count_trial(cfg: ExperimentConfig, n: int, trial: int) -> dict:
    field = sample_field(GridSpec(cfg.G, -1, n + 1, 0, n), cfg.trial_seed(n, trial))
    T, Z = profile_table(field, Point(0, 0), Point(n, n))
    alpha = n ** cfg.delta
    tol = gap_tolerance(T)
    counts = [peak_counts(T - Z[m], alpha, cfg.G, 0, tol) for m in range(n + 1)]
    inf_counts = [peak_counts(T - Z[m], math.inf, cfg.G, 0) for m in range(n + 1)]
    return {"max_count": max(counts), "max_inf": max(inf_counts)}


def exp_peak_count(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentOutput:
    tasks = [(n, k) for n in cfg.n for k in range(cfg.trials)]
    results = map_trials(peak_count_trial, cfg, tasks, jobs)
    rows = []
    bound_ok = True
    evaluations = 0
    for n in cfg.n:
        c = np.array([r["max_count"] for (nn, _), r in zip(tasks, results) if nn == n])
        ci = np.array([r["max_inf"] for (nn, _), r in zip(tasks, results) if nn == n])
        bound_ok &= bool(c.max() <= n + 2 and ci.max() <= n + 2)
        evaluations += 2 * c.size * (n + 1)
        rows.append({"n": n, "alpha": n ** cfg.delta, "trials": c.size, "median_max_count": float(np.median(c)),
                     "q90_max_count": float(np.quantile(c, 0.9)), "max_max_count": int(c.max()),
                     "bound": n + 2, "max_count_alpha_inf": int(ci.max())})
    fits = {"median_vs_n": None}
    if len(rows) >= 3:
        fits["median_vs_n"] = fit_loglog([(r["n"], r["median_max_count"], 0.0) for r in rows])
    checks = {"peak_bound_holds": bound_ok, "row_evaluations": evaluations}
    return ExperimentOutput("peak_count", cfg, {"main": rows}, fits, checks)


# --------------------------------------------------------------------------
# basin of attraction
# --------------------------------------------------------------------------

def tube(xi: Staircase, rows, radius: float, G: int):
    """Per line: tick interval of points within horizontal distance ``radius`` of ``xi``."""
    r = math.floor(radius * G)
    out = {}
    for m in rows:
        a, b = xi.segment_ticks(m)
        out[m] = (a - r, b + r)
    return out


def coalesces(sub: Staircase, ref: Staircase, lo: int, hi: int) -> bool:
    """``sub`` agrees with ``ref`` on every line of ``[lo, hi]`` and every step inside it."""
    for k in range(lo, hi + 1):
        a, b = sub.segment_ticks(k)
        c, d = ref.segment_ticks(k)
        if a < c or b > d:
            return False
        if k < hi and b != d:
            return False
    return True


def _sample_tube(rng, tb: dict, count: int):
    rows = sorted(tb)
    lengths = np.array([tb[m][1] - tb[m][0] + 1 for m in rows], float)
    which = rng.choice(len(rows), size=count, p=lengths / lengths.sum())
    out = []
    for j in which:
        a, b = tb[rows[j]]
        out.append((int(rng.integers(a, b + 1)), rows[j]))
    return out


def basin_trial(cfg: ExperimentConfig, n: int, trial: int) -> dict:
    G, g = cfg.G, cfg.gamma
    radius = n ** (2 / 3 - 4 * cfg.delta / 11)
    xpad = math.ceil(radius) + 2
    seed = cfg.trial_seed(n, trial)
    field = sample_field(GridSpec(G, -n - xpad, n + xpad, -n, n), seed)
    p, q = Point(-n, -n), Point(n, n)
    _, dp = passage_time(field, p, q)
    ref = dp.geodesic_to(q)
    low_rows = range(-n, math.floor(-(1 - g / 2) * n) + 1)
    high_rows = range(math.ceil((1 - g / 2) * n), n + 1)
    tp, tq = tube(ref, low_rows, radius, G), tube(ref, high_rows, radius, G)
    clip = lambda tb: {m: (max(a, field.spec.tick_min), min(b, field.spec.tick_max)) for m, (a, b) in tb.items()}
    tp, tq = clip(tp), clip(tq)
    area_p = sum(b - a for a, b in tp.values()) / G
    area_q = sum(b - a for a, b in tq.values()) / G
    rng = child_rng(seed, "basin")
    ps = _sample_tube(rng, tp, cfg.samples)
    qs = _sample_tube(rng, tq, cfg.samples)
    lo, hi = math.ceil(-(1 - g) * n), math.floor((1 - g) * n)
    hits = 0
    for (tp_, mp), (tq_, mq) in zip(ps, qs):
        pp, qq = Point(tp_ / G, mp), Point(tq_ / G, mq)
        if pp.x > qq.x:
            continue
        sub = forward_dp(field, pp, qq.m, qq.x).geodesic_to(qq)
        hits += coalesces(sub, ref, lo, hi)
    frac = hits / cfg.samples
    self_ok = coalesces(ref, ref, lo, hi)
    return {"fraction": frac, "volume": frac * area_p * area_q, "tube_volume": area_p * area_q,
            "self_in_basin": self_ok}


def exp_basin(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentOutput:
    tasks = [(n, k) for n in cfg.n for k in range(cfg.trials)]
    results = map_trials(basin_trial, cfg, tasks, jobs)
    rows = []
    for n in cfg.n:
        rs = [r for (nn, _), r in zip(tasks, results) if nn == n]
        scaled = np.array([r["volume"] for r in rs]) / n ** (10 / 3)
        fr, fse = mean_se([r["fraction"] for r in rs])
        rows.append({"n": n, "trials": len(rs), "samples": cfg.samples, "mean_fraction": fr,
                     "stderr": fse, "median_scaled_volume": float(np.median(scaled)),
                     "q10_scaled_volume": float(np.quantile(scaled, 0.1)),
                     "frac_trials_scaled_above_0.01": float(np.mean(scaled > 0.01))})
    checks = {"reference_in_own_basin": all(r["self_in_basin"] for r in results)}
    return ExperimentOutput("basin", cfg, {"main": rows}, {}, checks)
