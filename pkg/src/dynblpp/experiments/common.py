"""Shared experiment plumbing: config, fits, trial runner, output files."""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .._accel import BACKEND
from ..seeding import child_seed

SCHEMA = "v1"


@dataclass
class ExperimentConfig:
    name: str
    n: tuple = (16, 32, 64)
    G: int = 16
    trials: int = 100
    dt: float = 0.1
    beta: float = 0.25
    delta: float = 0.05
    sigma: float | None = None
    seed: int = 0
    out: str | None = None
    alphas: tuple = (0.0, 0.5, 1.0, 2.0, 3.0)
    ells: tuple = (8, 16, 32, 64)
    gamma: float = 0.5
    drift: float = 0.25
    reps: int = 1
    samples: int = 32
    check: bool = False

    def __post_init__(self):
        self.n = tuple(int(v) for v in (self.n if isinstance(self.n, (list, tuple)) else [self.n]))
        self.alphas = tuple(float(a) for a in self.alphas)
        self.ells = tuple(int(v) for v in self.ells)
        self.validate()

    def validate(self) -> None:
        if not 0 < self.beta < 0.5:
            raise ValueError(f"beta must lie in (0, 1/2), got {self.beta}")
        if self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.G < 1 or self.trials < 1 or self.reps < 1 or self.samples < 1:
            raise ValueError("G, trials, reps and samples must be positive")
        if self.dt < 0:
            raise ValueError(f"dt must be >= 0, got {self.dt}")
        if not self.n or min(self.n) < 1:
            raise ValueError(f"n values must be positive, got {self.n}")
        if self.sigma is not None and self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("n", "alphas", "ells"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    def trial_seed(self, *index) -> int:
        return child_seed(self.seed, self.name, *index)


def slope(p, q) -> float:
    """Horizontal over vertical displacement, so the diagonal has slope 1."""
    if q[1] == p[1]:
        return math.inf
    return (q[0] - p[0]) / (q[1] - p[1])


def require_slope(p, q, lo: float = 0.25, hi: float = 4.0) -> None:
    s = slope(p, q)
    if not lo <= s <= hi:
        raise ValueError(f"pair {p} -> {q} has slope {s} outside [{lo}, {hi}]")


# --------------------------------------------------------------------------
# statistics
# --------------------------------------------------------------------------

@dataclass
class FitResult:
    slope: float
    intercept: float
    stderr: float
    points: int
    kind: str = "loglog"

    def to_dict(self) -> dict:
        return asdict(self)


def fit_loglog(points) -> FitResult:
    """OLS of ``log value`` on ``log n``; ``points`` holds ``(n, value, stderr)`` triples."""
    pts = list(points)
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points, got {len(pts)}")
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.array([p[1] for p in pts], dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive abscissae and values")
    return _ols(np.log(x), np.log(y), "loglog")


def fit_linear(points) -> FitResult:
    pts = list(points)
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points, got {len(pts)}")
    return _ols(np.array([p[0] for p in pts], float), np.array([p[1] for p in pts], float), "linear")


def _ols(lx, ly, kind) -> FitResult:
    k = lx.size
    xm = lx.mean()
    sxx = np.sum((lx - xm) ** 2)
    if sxx == 0:
        raise ValueError("abscissae are all equal")
    b = float(np.sum((lx - xm) * (ly - ly.mean())) / sxx)
    a = float(ly.mean() - b * xm)
    resid = ly - (a + b * lx)
    se = float(math.sqrt(np.sum(resid ** 2) / (k - 2) / sxx)) if k > 2 else math.nan
    return FitResult(b, a, se, k, kind)


def mean_se(values) -> tuple[float, float]:
    """Mean and its jackknife standard error (equal to s / sqrt(N) for the mean)."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return float(v.mean()) if v.size else math.nan, math.nan
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def jackknife(stat, *columns) -> tuple[float, float]:
    """Plug-in estimate and leave-one-out jackknife standard error of ``stat(*columns)``."""
    cols = [np.asarray(c, dtype=float) for c in columns]
    N = cols[0].size
    full = float(stat(*cols))
    if N < 2:
        return full, math.nan
    sums = [c.sum() for c in cols]
    with np.errstate(divide="ignore", invalid="ignore"):
        loo = np.array([stat(*[np.array([(s - c[j]) / (N - 1)]) for s, c in zip(sums, cols)])
                        for j in range(N)], dtype=float).ravel()
        se = math.sqrt((N - 1) / N * np.sum((loo - loo.mean()) ** 2))
    return full, float(se)


def ratio_of_means(a, b):
    """For :func:`jackknife`; columns are either raw samples or leave-one-out means."""
    return np.mean(a) / np.mean(b)


# --------------------------------------------------------------------------
# trial runner
# --------------------------------------------------------------------------

def _call(args):
    fn, cfg_dict, task = args
    return fn(ExperimentConfig.from_dict(cfg_dict), *task)


def map_trials(fn, config: ExperimentConfig, tasks, jobs: int = 1) -> list:
    """Run ``fn(config, *task)`` for every task; results come back in task order.

    Every task derives its randomness from ``config.seed`` and its own index,
    so the merged output does not depend on ``jobs``.
    """
    tasks = list(tasks)
    if jobs <= 1 or len(tasks) < 2:
        return [fn(config, *t) for t in tasks]
    cfg = config.to_dict()
    chunk = max(1, len(tasks) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_call, [(fn, cfg, t) for t in tasks], chunksize=chunk))


# --------------------------------------------------------------------------
# outputs
# --------------------------------------------------------------------------

@dataclass
class ExperimentOutput:
    name: str
    config: ExperimentConfig
    tables: dict = field(default_factory=dict)  # table name -> list of row dicts
    fits: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    def summary(self) -> dict:
        # the output directory is left out so reruns elsewhere are byte-identical
        cfg = {k: v for k, v in self.config.to_dict().items() if k != "out"}
        return {"schema": SCHEMA, "name": self.name, "config": cfg,
                "tables": self.tables, "fits": {k: (v.to_dict() if v is not None else None)
                                                 for k, v in self.fits.items()},
                "checks": self.checks}


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer, np.bool_)):
        return v.item()
    return v


def write_csv(rows: list, path) -> None:
    if not rows:
        Path(path).write_text("")
        return
    header = list(rows[0])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(row[k]) for k in header])


def _json_default(o):
    if isinstance(o, (np.integer, np.bool_)):
        return o.item()
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _clean(obj):
    """NaN and infinities become null so the summary is strict JSON."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, default=_json_default, allow_nan=False)


def code_version() -> str:
    from .. import __version__
    return f"dynblpp {__version__} backend={BACKEND}"


def write_outputs(output: ExperimentOutput, out_dir, fmt: str = "csv", argv=None) -> list[str]:
    """Write tables (CSV) and/or the JSON summary, plus ``manifest.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in ("csv", "both"):
        for tname, rows in output.tables.items():
            fname = f"{output.name}.csv" if tname == "main" else f"{output.name}_{tname}.csv"
            write_csv(rows, out / fname)
            written.append(fname)
    fname = f"{output.name}.json"
    (out / fname).write_text(to_json(output.summary()) + "\n")
    written.append(fname)
    write_manifest(out, {"kind": "exp", "name": output.name, "config": output.config.to_dict(),
                         "seed": output.config.seed, "format": fmt, "outputs": written}, argv)
    return written


def write_manifest(out_dir, payload: dict, argv=None) -> None:
    manifest = {"schema": SCHEMA, "version": code_version(), "argv": list(argv or []),
                "env": {"DYNBLPP_BACKEND": os.environ.get("DYNBLPP_BACKEND", "")}}
    manifest.update(payload)
    (Path(out_dir) / "manifest.json").write_text(to_json(manifest) + "\n")
