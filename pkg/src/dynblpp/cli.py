"""Command-line entry point.

Exit codes: 0 success, 1 usage or input error, 2 failed inline invariant.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path


from .dynamics import InvariantViolation, run_pair_dynamics, write_event_log
from .experiments import REGISTRY, ExperimentConfig, run_experiment
from .experiments.common import to_json, write_csv, write_manifest, write_outputs
from .experiments.switching import band
from .grid import GridSpec, dump_field, load_field, sample_field
from .lpp import Point, passage_time, routed_profile
from .oracle import check_agreement


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _geometry(p: argparse.ArgumentParser, n_default=8, grid_default=8) -> None:
    p.add_argument("--n", type=int, default=n_default, help="lines 0..n, endpoints (0,0) and (n,n) (default %(default)s)")
    p.add_argument("--grid", type=int, default=None, help=f"ticks per unit, G (default {grid_default})")
    p.set_defaults(grid_default=grid_default)
    p.add_argument("--seed", type=int, default=0, help="master seed (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="dynblpp", description="Dynamical Brownian last passage percolation.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    env = sub.add_parser("env", help="sample or dump a Brownian field")
    esub = env.add_subparsers(dest="action", required=True, parser_class=_Parser)
    es = esub.add_parser("sample", help="sample the field for (0,0)->(n,n) and print a summary")
    _geometry(es)
    es.add_argument("--out", help="directory for field.txt and manifest.json")
    ed = esub.add_parser("dump", help="print a stored field as CSV rows line,x,value")
    ed.add_argument("field", help="snapshot written by `env sample --out`")
    ed.add_argument("--out", help="write the CSV here instead of stdout")

    lpp = sub.add_parser("lpp", help="static last passage queries")
    lsub = lpp.add_subparsers(dest="action", required=True, parser_class=_Parser)
    for name, hlp in (("passage", "print T and the geodesic jumps"),
                      ("geodesic", "print the geodesic as rows line,z"),
                      ("profile", "print the routed profile on one line")):
        lp = lsub.add_parser(name, help=hlp)
        _geometry(lp)
        lp.add_argument("--field", help="use a stored field instead of sampling one")
        lp.add_argument("--out", help="directory for outputs and manifest.json")
        if name == "profile":
            lp.add_argument("--line", type=int, help="line m (default n/2)")
            lp.add_argument("--kind", choices=("plain", "split"), default="split")

    dyn = sub.add_parser("dyn", help="run the resampling dynamics")
    dsub = dyn.add_subparsers(dest="action", required=True, parser_class=_Parser)
    dr = dsub.add_parser("run", help="evolve (0,0)->(n,n) over [0, dt]; event log CSV + JSON")
    _geometry(dr, 16, 16)
    dr.add_argument("--dt", type=float, default=0.1, help="time window (default %(default)s)")
    dr.add_argument("--beta", type=float, default=0.25, help="band [beta n, (1-beta) n] (default %(default)s)")
    dr.add_argument("--no-check", dest="check", action="store_false", help="skip inline invariant checks")
    dr.add_argument("--out", default="runs/dyn", help="output directory (default %(default)s)")

    orc = sub.add_parser("oracle", help="brute-force agreement checks")
    osub = orc.add_subparsers(dest="action", required=True, parser_class=_Parser)
    oc = osub.add_parser("check", help="compare fast DP with enumeration on random tiny instances")
    oc.add_argument("--seed", type=int, default=0)
    oc.add_argument("--instances", type=int, default=200, help="(default %(default)s)")
    oc.add_argument("--out", help="directory for oracle.json and manifest.json")

    ex = sub.add_parser("exp", help="run an experiment campaign")
    ex.add_argument("name", choices=sorted(REGISTRY))
    ex.add_argument("--n", type=_int_list, help="comma-separated sizes (default 16,32,64)")
    ex.add_argument("--grid", type=int, help="ticks per unit (default 16)")
    ex.add_argument("--trials", type=int, help="trials per size (default 100)")
    ex.add_argument("--dt", type=float, help="time window (default 0.1)")
    ex.add_argument("--beta", type=float, help="band parameter (default 0.25)")
    ex.add_argument("--delta", type=float, help="exponent/threshold delta (default 0.05)")
    ex.add_argument("--sigma", type=float, help="mesh spacing for hitset pairs (default scales as n^(2/3))")
    ex.add_argument("--gamma", type=float, help="middle-band parameter (default 0.5)")
    ex.add_argument("--alphas", type=_float_list, help="exceedance levels (default 0,0.5,1,2,3)")
    ex.add_argument("--ells", type=_int_list, help="twin-peak scales (default 8,16,32,64)")
    ex.add_argument("--drift", type=float, help="negative-control drift (default 0.25)")
    ex.add_argument("--reps", type=int, help="suite repetitions (default 1)")
    ex.add_argument("--samples", type=int, help="Monte Carlo samples per trial (default 32)")
    ex.add_argument("--check", action="store_true", default=None, help="inline invariant checks")
    ex.add_argument("--seed", type=int, help="master seed (default 0)")
    ex.add_argument("--out", help="output directory (default runs/<name>)")
    ex.add_argument("--format", choices=("csv", "json"), default=None, help="csv writes tables and the JSON summary")
    ex.add_argument("--jobs", type=int, default=1, help="worker processes; outputs do not depend on it")
    ex.add_argument("--from-manifest", help="take config and format from a manifest.json")

    rp = sub.add_parser("report", help="summarize experiment JSON outputs in a directory")
    rp.add_argument("dir")
    return ap


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _resolve_grid(args) -> None:
    if args.grid is None:
        args.grid = args.grid_default
        args.grid_given = False
    else:
        args.grid_given = True


def _field_for(args):
    _resolve_grid(args)
    if getattr(args, "field", None):
        f = load_field(args.field)
        s = f.spec
        if args.grid_given and args.grid != s.G:
            raise ValueError(f"--grid {args.grid} conflicts with the stored field's G={s.G}")
        args.grid = s.G
        if not (s.m_min <= 0 and args.n <= s.m_max and s.x_min <= 0 and args.n <= s.x_max):
            raise ValueError(f"stored field does not contain (0,0)->({args.n},{args.n})")
        return f
    if args.n < 0 or args.grid < 1:
        raise ValueError("need n >= 0 and grid >= 1")
    return sample_field(GridSpec(args.grid, -1, args.n + 1, 0, args.n), args.seed)


def _geometry_record(args) -> dict:
    return {"n": args.n, "G": args.grid, "seed": args.seed, "field": getattr(args, "field", None)}


def cmd_env(args, argv) -> int:
    if args.action == "sample":
        f = _field_for(args)
        s = f.spec
        print(f"lines {s.m_min}..{s.m_max}  x in [{s.x_min}, {s.x_max}]  G={s.G}  seed={args.seed}")
        print(f"values: min {f.values.min():.6f}  max {f.values.max():.6f}")
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            dump_field(f, Path(args.out) / "field.txt")
            write_manifest(args.out, {"kind": "env sample", "config": _geometry_record(args),
                                      "outputs": ["field.txt"]}, argv)
        return 0
    f = load_field(args.field)
    rows = [{"line": m, "x": float(x), "value": float(v)} for m, line in zip(range(f.spec.m_min, f.spec.m_max + 1), f.values)
            for x, v in zip(f.spec.grid_x(), line)]
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        write_csv(rows, Path(args.out) / "field.csv")
        write_manifest(args.out, {"kind": "env dump", "config": {"field": args.field},
                                  "outputs": ["field.csv"]}, argv)
    else:
        print("line,x,value")
        for r in rows:
            print(f"{r['line']},{r['x']!r},{r['value']!r}")
    return 0


def cmd_lpp(args, argv) -> int:
    f = _field_for(args)
    p, q = Point(0, 0), Point(args.n, args.n)
    T, dp = passage_time(f, p, q)
    geo = dp.geodesic_to(q)
    payload = {"T": T, "jumps": geo.jumps.tolist()}
    if args.action == "passage":
        print(f"T = {T!r}")
        print("jumps = " + " ".join(repr(float(z)) for z in geo.jumps))
        rows = []
    elif args.action == "geodesic":
        rows = [{"line": k, "z": float(geo.z(k))} for k in range(geo.m0 - 1, geo.n1 + 1)]
        print("line,z")
        for r in rows:
            print(f"{r['line']},{r['z']!r}")
    else:
        m = args.n // 2 if args.line is None else args.line
        prof = routed_profile(f, p, q, m, args.kind, forward=dp)
        rows = [{"x": float(x), "Z": float(v)} for x, v in zip(prof.x, prof.values)]
        payload.update({"line": m, "kind": args.kind, "argmax_x": prof.argmax_x()})
        print("x,Z")
        for r in rows:
            print(f"{r['x']!r},{r['Z']!r}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        files = [f"{args.action}.json"]
        (out / files[0]).write_text(to_json(payload) + "\n")
        if rows:
            write_csv(rows, out / f"{args.action}.csv")
            files.append(f"{args.action}.csv")
        write_manifest(out, {"kind": f"lpp {args.action}", "config": _geometry_record(args),
                             "outputs": files}, argv)
    return 0


def cmd_dyn(args, argv) -> int:
    _resolve_grid(args)
    n = args.n
    if n < 1 or args.grid < 1 or args.dt < 0 or not 0 < args.beta < 0.5:
        raise ValueError("need n >= 1, grid >= 1, dt >= 0 and beta in (0, 1/2)")
    f = sample_field(GridSpec(args.grid, -1, n + 1, 0, n), args.seed)
    K = band(n, args.beta)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        res = run_pair_dynamics(f, [(Point(0, 0), Point(n, n))], K, (0.0, args.dt), seed=args.seed,
                                check=args.check, keep_log=True)
    except InvariantViolation as err:
        (out / "violation.json").write_text(to_json({"invariant": err.what, "detail": err.detail}) + "\n")
        raise
    write_event_log(res.log, out / "events.csv")
    summary = {"schema": "v1", "n": n, "G": args.grid, "band": list(K), "dt": args.dt,
               "events": res.events, "switch": res.ledger.total, "hitset_initial": res.hitset.initial_size,
               "hitset": len(res.hitset.cells), "hitset_slack": res.hitset_slack(),
               "T_start": res.T_start[0], "T_end": res.T_end[0], "checks": res.checks,
               "buckets": [[ell, m, v] for (ell, m), v in sorted(res.ledger.buckets.items())]}
    (out / "dyn.json").write_text(to_json(summary) + "\n")
    cfg = {"n": n, "G": args.grid, "seed": args.seed, "dt": args.dt, "beta": args.beta, "check": args.check}
    write_manifest(out, {"kind": "dyn run", "config": cfg, "seed": args.seed,
                         "outputs": ["events.csv", "dyn.json"]}, argv)
    print(f"events {res.events}  switch {res.ledger.total}  hitset {res.hitset.initial_size} -> "
          f"{len(res.hitset.cells)}  slack {res.hitset_slack()}")
    return 0


def cmd_oracle(args, argv) -> int:
    if args.instances < 1:
        raise ValueError("--instances must be positive")
    rep = check_agreement(args.seed, args.instances)
    print(f"instances verified: {rep.instances}  mismatches: {len(rep.mismatches)}  ({rep.seconds:.2f} s)")
    for mm in rep.mismatches:
        print(f"  mismatch {mm}", file=sys.stderr)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "oracle.json").write_text(to_json({"instances": rep.instances,
                                                              "mismatches": rep.mismatches}) + "\n")
        write_manifest(args.out, {"kind": "oracle check", "config": {"seed": args.seed,
                                                                    "instances": args.instances},
                                  "seed": args.seed, "outputs": ["oracle.json"]}, argv)
    return 0 if rep.ok else 2


_EXP_FLAGS = {"n": "n", "grid": "G", "trials": "trials", "dt": "dt", "beta": "beta", "delta": "delta",
              "sigma": "sigma", "gamma": "gamma", "alphas": "alphas", "ells": "ells", "drift": "drift",
              "reps": "reps", "samples": "samples", "check": "check", "seed": "seed"}


def cmd_exp(args, argv) -> int:
    if args.jobs < 1:
        raise ValueError("--jobs must be positive")
    fmt = args.format
    if args.from_manifest:
        man = json.loads(Path(args.from_manifest).read_text())
        if man.get("kind") != "exp" or man.get("name") != args.name.replace("-", "_"):
            raise ValueError(f"{args.from_manifest} is not a manifest of experiment {args.name}")
        given = [flag for flag in _EXP_FLAGS if getattr(args, flag) is not None]
        if given:
            raise ValueError(f"--from-manifest conflicts with --{', --'.join(given)}")
        d = dict(man["config"])
        fmt = fmt or man.get("format", "csv")
    else:
        d = {key: getattr(args, flag) for flag, key in _EXP_FLAGS.items() if getattr(args, flag) is not None}
    d["name"] = args.name
    if args.out:
        d["out"] = args.out
    d.setdefault("out", None)
    if d["out"] is None:
        d["out"] = f"runs/{args.name}"
    cfg = ExperimentConfig.from_dict(d)
    output = run_experiment(args.name, cfg, args.jobs)
    files = write_outputs(output, cfg.out, fmt or "csv", argv)
    print(f"{args.name}: wrote {', '.join(files)} to {cfg.out}")
    for k, v in output.checks.items():
        print(f"  check {k} = {v}")
    for k, v in output.fits.items():
        if v is not None:
            print(f"  fit {k}: slope {v.slope:.4f} +- {v.stderr:.4f}")
    return 0


def cmd_report(args, argv) -> int:
    d = Path(args.dir)
    if not d.is_dir():
        raise ValueError(f"{d} is not a directory")
    found = 0
    for path in sorted(d.rglob("*.json")):
        if path.name == "manifest.json":
            continue
        data = json.loads(path.read_text())
        if data.get("schema") != "v1" or "tables" not in data:
            continue
        found += 1
        print(f"{data['name']}  ({path})")
        for tname, rows in data["tables"].items():
            print(f"  table {tname}: {len(rows)} rows")
        for k, v in (data.get("fits") or {}).items():
            if v:
                print(f"  fit {k}: slope {v['slope']:.4f} +- {v['stderr'] if v['stderr'] is not None else math.nan:.4f}")
        for k, v in (data.get("checks") or {}).items():
            print(f"  check {k} = {v}")
    if not found:
        print(f"no experiment summaries under {d}")
    return 0


COMMANDS = {"env": cmd_env, "lpp": cmd_lpp, "dyn": cmd_dyn, "oracle": cmd_oracle, "exp": cmd_exp,
            "report": cmd_report}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, argv)
    except UsageError as err:
        print(err, file=sys.stderr)
        return 1
    except InvariantViolation as err:
        print(f"invariant violated: {err.what}: {err.detail}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
