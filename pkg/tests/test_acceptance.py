"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Campaign sizes are the minimum the criteria demand (or larger); thresholds
are the stated ones.  Total runtime on one core is roughly half an hour,
dominated by the hit-probability campaign.
"""
import json
import math
import time

import numpy as np

from dynblpp.cli import main as cli_main
from dynblpp.dynamics import replay, run_pair_dynamics
from dynblpp.experiments import ExperimentConfig, run_experiment
from dynblpp.grid import GridSpec, sample_field, scaled_copy
from dynblpp.lpp import Point, Staircase, passage_time
from dynblpp.oracle import check_agreement
from dynblpp.seeding import child_rng, child_seed

SEED = 20241017


def report(capsys, cid, ok, detail):
    with capsys.disabled():
        print(f"\nACCEPTANCE {cid}: {'PASS' if ok else 'FAIL'}  {detail}", flush=True)
    assert ok, detail


def test_c01_oracle_equivalence(capsys):
    t = time.perf_counter()
    rep = check_agreement(SEED, 200)
    secs = time.perf_counter() - t
    ok = rep.instances >= 200 and rep.ok and secs < 120
    report(capsys, "C1 oracle equivalence", ok,
           f"{rep.instances} instances, {len(rep.mismatches)} mismatches at 1e-9 rel, {secs:.1f} s")


def test_c02_worked_example(capsys):
    S = lambda z: Staircase.from_jumps(0, 6, z, 4)
    blue = S([0, 0.5, 1.5, 2.5, 3.25, 3.75, 5.5, 6])
    red = S([0, 0.5, 1.5, 2.5, 4.25, 4.75, 5.5, 6])
    green = S([0, 1.25, 1.5, 2.5, 3.25, 3.75, 5.5, 6])
    ledger, hits, deltas = replay([blue, red, blue, green])
    slack = hits.initial_size + ledger.total - len(hits.cells)
    ok = (hits.initial_size, deltas, ledger.total, len(hits.cells), slack) == (14, [2, 2, 1], 5, 17, 2)
    report(capsys, "C2 worked example", ok,
           f"|HitSet{{0}}|={hits.initial_size} deltas={deltas} total={ledger.total} "
           f"|HitSet[0,1]|={len(hits.cells)} slack={slack}")


def test_c03_structural_invariants(capsys):
    n, G = 32, 16
    pairs = [(Point(0, 0), Point(32, 32)), (Point(0, 0), Point(28, 32)),
             (Point(0, 0), Point(32, 26)), (Point(3, 3), Point(30, 30))]
    t = time.perf_counter()
    events, runs, totals = 0, 0, {}
    # every check raises InvariantViolation on its first failure, so reaching
    # the end means a 100% pass rate over all checks counted below
    while events < 10_000:
        s = child_seed(SEED, "c3", runs)
        f = sample_field(GridSpec(G, -1, n + 1, 0, n), s)
        r = run_pair_dynamics(f, pairs, (8, 24), (0.0, 1.0), seed=s, check=True)
        events += r.events
        runs += 1
        for k, v in r.checks.items():
            totals[k] = totals.get(k, 0) + v
    secs = time.perf_counter() - t
    ok = events >= 10_000 and secs < 600 and all(totals.get(k, 0) > 0 for k in (
        "trichotomy_checked", "dT_bound_checked", "locality_checked", "incremental_checked", "hitset_bound_checked"))
    report(capsys, "C3 structural invariants", ok,
           f"{events} events in {runs} runs, all checks held: {totals}, {secs:.0f} s")


def test_c04_brownian_scaling(capsys):
    t = time.perf_counter()
    rng = child_rng(SEED, "c4")
    worst, count = 0.0, 0
    for k in range(50):
        beta = (4, 9)[k % 2]
        n = int(rng.integers(1, 4))
        f = sample_field(GridSpec(36, 0, 3, 0, n), child_seed(SEED, "c4", k))
        x0 = int(rng.integers(0, 37)) / 36
        x1 = x0 + int(rng.integers(0, 3 * 36 - round(x0 * 36) + 1)) / 36
        T, _ = passage_time(f, Point(x0, 0), Point(x1, n))
        Tb, _ = passage_time(scaled_copy(f, beta), Point(beta * x0, 0), Point(beta * x1, n))
        err = abs(Tb - math.sqrt(beta) * T) / max(1.0, abs(T))
        worst = max(worst, err)
        count += 1
    secs = time.perf_counter() - t
    report(capsys, "C4 Brownian scaling", worst <= 1e-9 and secs < 60,
           f"{count} instances, beta in {{4, 9}}, max rel error {worst:.2e}, {secs:.1f} s")


def test_c05_time_linearity(capsys):
    cfg = ExperimentConfig(name="switch-scaling", n=(32,), G=16, trials=1000, dt=0.2, seed=SEED)
    out = run_experiment("switch-scaling", cfg)
    row = out.tables["main"][0]
    ok = row["trials"] >= 400 and 1.85 <= row["ratio"] <= 2.15
    report(capsys, "C5 time linearity", ok,
           f"n=32 trials={row['trials']} mean[0,dt]={row['mean_switch']:.2f} "
           f"mean[0,2dt]={row['mean_switch_2dt']:.2f} ratio={row['ratio']:.3f} +- {row['ratio_stderr']:.3f}")


def test_c06_switch_scaling(capsys):
    t = time.perf_counter()
    cfg = ExperimentConfig(name="switch-scaling", n=(16, 32, 64, 96), G=16, trials=200, dt=0.1,
                           seed=SEED + 6)
    out = run_experiment("switch-scaling", cfg)
    secs = time.perf_counter() - t
    fit = out.fits["switch_vs_n"]
    means = ", ".join(f"{r['n']}:{r['mean_switch']:.1f}" for r in out.tables["main"])
    ok = fit is not None and 1.2 <= fit.slope <= 2.0 and secs <= 1800
    report(capsys, "C6 switch scaling slope", ok,
           f"slope={fit.slope:.3f} +- {fit.stderr:.3f} means {{{means}}} 200 trials each, {secs:.0f} s")


def test_c07_transversal(capsys):
    cfg = ExperimentConfig(name="transversal", n=(32, 64), G=16, trials=200, alphas=(1, 2, 3), seed=SEED)
    out = run_experiment("transversal", cfg)
    ok, parts = True, []
    for n in (32, 64):
        rows = sorted((r for r in out.tables["main"] if r["n"] == n), key=lambda r: r["alpha"])
        p = {r["alpha"]: r for r in rows}
        ok &= p[3.0]["exceed"] <= 0.05
        for a, b in zip(rows, rows[1:]):
            # strictly lower wherever the previous level is still exceeded, never
            # higher by more than two combined standard errors
            ok &= b["exceed"] <= a["exceed"] + 2 * math.hypot(a["stderr"], b["stderr"])
            ok &= b["exceed"] < a["exceed"] or a["exceed"] == 0
        parts.append(f"n={n}: " + " ".join(f"P(>{r['alpha']:g})={r['exceed']:.3f}" for r in rows))
    report(capsys, "C7 transversal fluctuations", bool(ok), "; ".join(parts) + " (200 trials each)")


def test_c08_twin_peaks(capsys):
    t = time.perf_counter()
    cfg = ExperimentConfig(name="twin-peaks", n=(128,), G=16, trials=2000, ells=(8, 16, 32, 64),
                           delta=0.05, seed=SEED)
    out = run_experiment("twin-peaks", cfg)
    secs = time.perf_counter() - t
    fit = out.fits["freq_vs_ell"]
    ok = out.checks["nonincreasing_2se"] and fit is not None and -0.8 <= fit.slope <= -0.05 and secs <= 1800
    freqs = " ".join(f"l={r['ell']}:{r['freq']:.3f}" for r in out.tables["main"])
    report(capsys, "C8 twin-peaks decay", ok,
           f"{freqs} slope={fit.slope:.3f} +- {fit.stderr:.3f} (2000 trials, {secs:.0f} s)")


def test_c09_hit_probability(capsys):
    t = time.perf_counter()
    cfg = ExperimentConfig(name="hit-probability", n=(16, 32, 64), G=4, trials=2000, seed=SEED)
    out = run_experiment("hit-probability", cfg)
    secs = time.perf_counter() - t
    fit = out.fits["p_hit_vs_n"]
    ok = fit is not None and -1.1 <= fit.slope <= -0.3
    ps = " ".join(f"n={r['n']}:{r['p_hit']:.3f}" for r in out.tables["main"])
    report(capsys, "C9 hit-probability decay", ok,
           f"{ps} slope={fit.slope:.3f} +- {fit.stderr:.3f} (2000 trials each, {secs:.0f} s)")


def test_c10_peak_bound(capsys):
    cfg = ExperimentConfig(name="peak-count", n=(16, 32, 64), G=8, trials=40, seed=SEED)
    out = run_experiment("peak-count", cfg)
    worst = max(r["max_max_count"] - r["bound"] for r in out.tables["main"])
    worst_inf = max(r["max_count_alpha_inf"] - r["bound"] for r in out.tables["main"])
    ok = out.checks["peak_bound_holds"] and worst <= 0 and worst_inf <= 0
    report(capsys, "C10 peak bound", ok,
           f"{out.checks['row_evaluations']} row evaluations, max(count - (n+2)) = {worst} "
           f"(alpha=n^delta), {worst_inf} (alpha=inf)")


def test_c11_stationarity(capsys):
    cfg = ExperimentConfig(name="stationarity", n=(32,), G=16, trials=500, reps=20, dt=1.0,
                           drift=0.25, seed=SEED)
    out = run_experiment("stationarity", cfg)
    rows = out.tables["main"]
    accept = np.mean([not r["reject"] for r in rows])
    reject_drift = np.mean([r["reject_drift"] for r in rows])
    ok = len(rows) == 20 and accept >= 0.95 and reject_drift >= 0.95
    report(capsys, "C11 stationarity", ok,
           f"20 reps x 500 runs: null non-rejection {accept:.2f}, drift control rejection {reject_drift:.2f}")


SMALL_EXPS = {
    "switch-scaling": ["--n", "8,12,16", "--trials", "6", "--dt", "0.05", "--grid", "8"],
    "transversal": ["--n", "16,32", "--trials", "8"],
    "twin-peaks": ["--n", "32", "--trials", "8", "--ells", "4,8,16"],
    "peak-count": ["--n", "8,12,16", "--trials", "4", "--grid", "8"],
    "hitset": ["--n", "6,8,10", "--trials", "4", "--dt", "0.05", "--grid", "4"],
    "hit-probability": ["--n", "6,8,10", "--trials", "8", "--grid", "4"],
    "basin": ["--n", "16", "--trials", "3", "--samples", "6"],
    "stationarity": ["--n", "8", "--trials", "20", "--reps", "2", "--dt", "1.0", "--grid", "8"],
}


def test_c12_determinism(capsys, tmp_path):
    same, total = 0, 0
    for name, flags in SMALL_EXPS.items():
        a, b = tmp_path / f"{name}-a", tmp_path / f"{name}-b"
        assert cli_main(["exp", name, *flags, "--seed", "5", "--out", str(a)]) == 0
        assert cli_main(["exp", name, "--from-manifest", str(a / "manifest.json"), "--out", str(b),
                         "--jobs", "8"]) == 0
        outputs = json.loads((a / "manifest.json").read_text())["outputs"]
        for fname in outputs:
            total += 1
            same += (a / fname).read_bytes() == (b / fname).read_bytes()
    capsys.readouterr()
    report(capsys, "C12 determinism", same == total and total > 0,
           f"{same}/{total} CSV/JSON outputs bit-identical after manifest re-run with --jobs 8 "
           f"({len(SMALL_EXPS)} experiments)")
