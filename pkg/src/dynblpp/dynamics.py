"""Event-driven dynamics: Poisson block resampling with exact geodesic tracking.

Between clock rings nothing changes, so the simulation only visits ring
times.  Pairs sharing a source share one forward DP table; a ring on line
``m`` recomputes DP rows ``>= m`` and reuses the rest.
"""
from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field as dc_field
from typing import NamedTuple

import numpy as np

from . import kernels
from .coarse import IntervalSet, coarse_set, mset
from .grid import BrownianField, set_block
from .lpp import DPForward, Point, Staircase, forward_dp
from .seeding import child_rng, child_seed


class InvariantViolation(RuntimeError):
    """A deterministic property that must hold on every event or run did not."""

    def __init__(self, what: str, detail: dict | None = None):
        super().__init__(what)
        self.what = what
        self.detail = detail or {}


class ClockEvent(NamedTuple):
    r: float
    block: tuple[int, int]


def sample_events(cells, s: float, t: float, seed: int) -> list[ClockEvent]:
    """Rate-1 clocks on every cell of ``cells`` over ``[s, t]``, sorted by time then block."""
    if t < s:
        raise ValueError(f"empty time window [{s}, {t}]")
    blocks = sorted(cells)
    if t == s or not blocks:
        return []
    rng = child_rng(seed, "events")
    count = int(rng.poisson((t - s) * len(blocks)))
    which = rng.integers(0, len(blocks), size=count)
    times = rng.uniform(s, t, size=count)
    events = [ClockEvent(float(r), blocks[j]) for r, j in zip(times, which)]
    events.sort()
    return events


# --------------------------------------------------------------------------
# switches, excursions and Loc buckets
# --------------------------------------------------------------------------

def _same_endpoints(a: Staircase, b: Staircase) -> None:
    if (a.m0, a.n1, a.G) != (b.m0, b.n1, b.G) or a.ticks[0] != b.ticks[0] or a.ticks[-1] != b.ticks[-1]:
        raise ValueError("staircases do not share endpoints")


def switch_delta(old: Staircase, new: Staircase, K=None) -> int:
    _same_endpoints(old, new)
    return len(coarse_set(new, K) - coarse_set(old, K))


def _lattice(xi: Staircase) -> tuple[np.ndarray, np.ndarray]:
    """Points of ``xi`` on the doubled lattice, in path order."""
    z = 2 * (xi.ticks - xi.ticks[0])
    a, b = z[:-1], z[1:]
    nseg = a.size
    horiz = b - a + 1
    length = horiz + 1
    length[-1] -= 1  # no vertical step after the top line
    starts = np.concatenate(([0], np.cumsum(length)[:-1]))
    off = np.arange(length.sum()) - np.repeat(starts, length)
    hrep = np.repeat(horiz, length)
    X = np.minimum(np.repeat(a, length) + off, np.repeat(b, length))
    Y = 2 * np.repeat(np.arange(nseg), length) + (off == hrep)
    return X, Y


def _on_path(xi: Staircase, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    z = 2 * (xi.ticks - xi.ticks[0])
    k = Y // 2
    line = (Y % 2) == 0
    on = np.empty(X.size, dtype=bool)
    on[line] = (z[k[line]] <= X[line]) & (X[line] <= z[k[line] + 1])
    on[~line] = X[~line] == z[k[~line] + 1]
    return on


def _out_runs(old: Staircase, new: Staircase):
    """Maximal runs of ``new`` off ``old``, each closed up by its two contact points."""
    X, Y = _lattice(new)
    out = ~_on_path(old, X, Y)
    if not out.any():
        return X, Y, []
    d = np.diff(np.concatenate(([0], out.astype(np.int8), [0])))
    starts, ends = np.flatnonzero(d == 1), np.flatnonzero(d == -1)
    return X, Y, [(s - 1, e) for s, e in zip(starts, ends)]


@dataclass(frozen=True)
class ExcursionDecomposition:
    case: str  # "unchanged" | "single" | "double"
    excursions: tuple = ()

    @property
    def lower(self):
        return self.excursions[0] if self.case == "double" else None

    @property
    def upper(self):
        return self.excursions[1] if self.case == "double" else None


class ExcursionError(ValueError):
    pass


def excursion_decompose(old: Staircase, new: Staircase) -> ExcursionDecomposition:
    _same_endpoints(old, new)
    X, Y, runs = _out_runs(old, new)
    G, t0, m0 = new.G, int(new.ticks[0]), new.m0
    exc = []
    for a, b in runs:
        xa, ka = X[a] // 2 + t0, Y[a] // 2 + m0
        xb, kb = X[b] // 2 + t0, Y[b] // 2 + m0
        inner = new.ticks[ka - m0 + 1:kb - m0 + 1]
        exc.append(Staircase(ka, kb, np.concatenate(([xa], inner, [xb])), G))
    if not exc:
        return ExcursionDecomposition("unchanged")
    if len(exc) == 1:
        return ExcursionDecomposition("single", tuple(exc))
    if len(exc) == 2 and exc[0].n1 == exc[1].m0:
        return ExcursionDecomposition("double", tuple(exc))
    raise ExcursionError(f"{len(exc)} excursions on lines "
                         f"{[(e.m0, e.n1) for e in exc]} do not fit the trichotomy")


def difference_set(old: Staircase, new: Staircase) -> IntervalSet:
    """Closure of ``new \\ old`` as closed tick intervals per line."""
    X, Y, runs = _out_runs(old, new)
    A = IntervalSet(new.G)
    t0, m0 = int(new.ticks[0]), new.m0
    for a, b in runs:
        xs, ys = X[a:b + 1], Y[a:b + 1]
        for y in np.unique(ys[ys % 2 == 0]):
            sel = xs[ys == y]
            # endpoints of a line piece inside a run sit on whole ticks
            A.add(y // 2 + m0, sel.min() // 2 + t0, sel.max() // 2 + t0)
    return A


def dyadic_scale(vert: float) -> int:
    if vert < 1:
        raise ValueError(f"vertical extent {vert} below one line")
    return 1 << int(math.floor(math.log2(vert)))


def loc_classify(A: IntervalSet):
    """``(ell, m)`` with ``ell <= |A|_vert < 2 ell`` and the lowest ``ell``-multiple
    ``m`` such that ``A`` lies in rows ``[m - 2 ell, m + 2 ell]``; None for empty ``A``."""
    if A.is_empty():
        return None
    rows = A.rows()
    bottom, top = rows[0], rows[-1]
    vert = top - bottom
    if vert < 1:
        return None
    ell = dyadic_scale(vert)
    m = -((-(top - 2 * ell)) // ell) * ell
    return ell, m


def loc_window_holds(dec: ExcursionDecomposition, ell: int, m: int) -> bool:
    lo = math.ceil(ell / 2)
    for xi in dec.excursions:
        vert = xi.n1 - xi.m0
        if lo <= vert <= 2 * ell and m - 2 * ell <= xi.m0 and xi.n1 <= m + 2 * ell:
            return True
    return False


def block_range(field: BrownianField, block) -> float:
    path = field.block_path(*block)
    return float(path.max() - path.min())


# --------------------------------------------------------------------------
# ledgers
# --------------------------------------------------------------------------

@dataclass
class SwitchLedger:
    K: tuple | None = None
    total: int = 0
    buckets: Counter = dc_field(default_factory=Counter)

    def record(self, delta: int, loc) -> None:
        self.total += delta
        if loc is not None and delta:
            self.buckets[loc] += delta


@dataclass
class HitSetAccumulator:
    K: tuple | None = None
    cells: set = dc_field(default_factory=set)
    initial_size: int | None = None
    initial: frozenset = frozenset()

    def add(self, xi: Staircase) -> None:
        self.cells |= coarse_set(xi, self.K)

    def freeze_initial(self) -> None:
        self.initial = frozenset(self.cells)
        self.initial_size = len(self.initial)


def replay(geodesics: list[Staircase], K=None):
    """Ledger and hitset for a given sequence of geodesics (one per event, first = time s)."""
    ledger, hits = SwitchLedger(K), HitSetAccumulator(K)
    hits.add(geodesics[0])
    hits.freeze_initial()
    deltas = []
    for old, new in zip(geodesics, geodesics[1:]):
        d = switch_delta(old, new, K)
        loc = loc_classify(difference_set(old, new)) if old != new else None
        ledger.record(d, loc)
        hits.add(new)
        deltas.append(d)
    return ledger, hits, deltas


# --------------------------------------------------------------------------
# tracked pairs with shared source DPs
# --------------------------------------------------------------------------

@dataclass
class TrackedPair:
    p: Point
    q: Point
    src: int
    box: tuple[int, int, int, int]  # i_lo, i_hi, m_lo, m_hi of the pair's cell set
    geo: Staircase | None = None
    T: float = 0.0
    ledger: SwitchLedger | None = None
    hits: HitSetAccumulator | None = None

    def covers(self, block) -> bool:
        i, m = block
        return self.box[0] <= i <= self.box[1] and self.box[2] <= m <= self.box[3]


@dataclass
class PairChange:
    index: int
    old: Staircase
    new: Staircase
    T_old: float
    T_new: float


class Tracker:
    """Current geodesics of a set of pairs on a mutable field."""

    def __init__(self, field: BrownianField, pairs, K=None, check: bool = False):
        self.field, self.K, self.check = field, K, check
        self.G = field.spec.G
        sources: dict[Point, list] = {}
        self.pairs: list[TrackedPair] = []
        for p, q in pairs:
            p, q = Point(*p), Point(*q)
            if not (p.x <= q.x and p.m <= q.m):
                raise ValueError(f"pair {tuple(p)} -> {tuple(q)} is not ordered")
            if p not in sources:
                sources[p] = []
            sources[p].append(len(self.pairs))
            box = (math.ceil(p.x) - 1, math.floor(q.x), p.m, q.m)
            self.pairs.append(TrackedPair(p, q, -1, box, ledger=SwitchLedger(K),
                                          hits=HitSetAccumulator(K)))
        self.sources: list[Point] = list(sources)
        self.dps: list[DPForward] = []
        for s_idx, p in enumerate(self.sources):
            members = sources[p]
            for j in members:
                self.pairs[j].src = s_idx
            m_end = max(self.pairs[j].q.m for j in members)
            x_end = max(self.pairs[j].q.x for j in members)
            self.dps.append(forward_dp(field, p, m_end, x_end))
        for pair in self.pairs:
            pair.geo, pair.T = self._read(pair)
            pair.hits.add(pair.geo)
            pair.hits.freeze_initial()
        self.clock = -math.inf
        self.rows_recomputed = 0
        self.counts = Counter()

    def _read(self, pair: TrackedPair):
        dp = self.dps[pair.src]
        return dp.geodesic_to(pair.q), dp.value(pair.q)

    def union_mset(self) -> set:
        cells = set()
        for pair in self.pairs:
            cells |= mset(pair.p, pair.q)
        return cells

    def _recompute(self, s_idx: int, i: int, m: int) -> int:
        """Refresh the table after a ring at ``(i, m)``; returns rows recomputed."""
        dp = self.dps[s_idx]
        f = self.field
        r0 = m - dp.m0
        # values at ticks <= i*G are bit-identical after the rebuild
        c0 = max(0, i * self.G + 1 - dp.tick0)
        if r0 == 0 and i * self.G < dp.tick0:
            c0 = 0
        last = kernels.update_rows(f.values, f.row(dp.m0), f.col(dp.tick0), r0,
                                   dp.values.shape[0] - 1, c0, dp.values, dp.argmax, dp.running)
        return last - r0 + 1

    def apply_event(self, ev: ClockEvent, new_increments: np.ndarray):
        """Install the ring's fresh block draw and update every pair whose cell set contains it."""
        if ev.r < self.clock:
            raise ValueError(f"event at r={ev.r} precedes the run clock {self.clock}")
        self.clock = ev.r
        i, m = ev.block
        G = self.G
        range_old = block_range(self.field, ev.block)
        delta = set_block(self.field, ev.block, new_increments)
        range_new = block_range(self.field, ev.block)
        touched = []
        for s_idx, dp in enumerate(self.dps):
            # blocks to the right of the table leave it untouched; everything
            # else on a table row shifts or changes values there
            if dp.m0 <= m <= dp.m_end and i * G < dp.tick_end:
                self.rows_recomputed += self._recompute(s_idx, i, m)
                touched.append(s_idx)
        changes = []
        for j, pair in enumerate(self.pairs):
            if not pair.covers(ev.block):
                if self.check and pair.src in touched:
                    self.counts["locality_checked"] += 1
                    geo, _ = self._read(pair)
                    if geo != pair.geo:
                        raise InvariantViolation("locality", {"pair": j, "block": ev.block})
                continue
            old, T_old = pair.geo, pair.T
            new, T_new = self._read(pair)
            changes.append(PairChange(j, old, new, T_old, T_new))
            if new != old:
                pair.geo = new
            pair.T = T_new
        if self.check:
            for s_idx in touched:
                dp = self.dps[s_idx]
                self.counts["incremental_checked"] += 1
                full = forward_dp(self.field, dp.source, dp.m_end, dp.tick_end / G)
                if not (np.array_equal(full.values, dp.values) and np.array_equal(full.argmax, dp.argmax)):
                    raise InvariantViolation("incremental-dp", {"source": tuple(dp.source), "block": ev.block})
        return delta, changes, range_old + range_new


def hitset_pairs_mesh(n: int, sigma: float, G: int):
    """Pairs on ``L_{-n} x L_n``: mesh points ``center + k sigma`` with ``|k sigma| <= n^{2/3}``."""
    if sigma <= 0:
        raise ValueError("mesh spacing must be positive")
    if abs(sigma * G - round(sigma * G)) > 1e-9:
        raise ValueError(f"mesh spacing {sigma} is not a multiple of 1/{G}")
    half = n ** (2.0 / 3.0)
    step = round(sigma * G)
    kmax = int(math.floor(half * G / step + 1e-12))
    offs = [k * step / G for k in range(-kmax, kmax + 1)]
    sources = [Point(-n + o, -n) for o in offs]
    sinks = [Point(n + o, n) for o in offs]
    return [(p, q) for p in sources for q in sinks]


def resample_draws(count: int, G: int, seed: int, drift: float = 0.0) -> np.ndarray:
    """Fresh block increments for ``count`` rings, row ``k`` for the ``k``-th ring."""
    Z = child_rng(seed, "resample").standard_normal((count, G)) * math.sqrt(1.0 / G)
    if drift:
        Z += drift / G
    return Z


def evolve_field(field: BrownianField, cells, interval, seed: int, drift: float = 0.0) -> int:
    """Advance ``field`` over ``interval`` without tracking geodesics.

    Uses the same clocks and draws as :func:`run_pair_dynamics` with the same
    seed, so the final field is bit-identical; only the last ring of each block
    matters.  Returns the number of rings.
    """
    events = sample_events(cells, interval[0], interval[1], child_seed(seed, "clock"))
    draws = resample_draws(len(events), field.spec.G, seed, drift)
    last = {ev.block: k for k, ev in enumerate(events)}
    lines = set()
    for (i, m), k in last.items():
        field.increments[field.row(m), field._block_col(i)] = draws[k]
        lines.add(m)
    for m in lines:
        field.rebuild_line(m)
    return len(events)


# --------------------------------------------------------------------------
# a full run
# --------------------------------------------------------------------------

LOG_COLUMNS = ["r", "block_i", "block_m", "changed", "switch_delta", "loc_l", "loc_m",
               "excursion_case", "dT_bound_ok"]


@dataclass
class RunResult:
    ledger: SwitchLedger  # aggregate over pairs
    hitset: HitSetAccumulator  # union over pairs
    pairs: list
    events: int
    log: list
    checkpoints: list  # (time, switch total, hitset size)
    T_start: list
    T_end: list
    checks: dict

    def hitset_slack(self) -> int:
        return self.hitset.initial_size + self.ledger.total - len(self.hitset.cells)


def run_pair_dynamics(field: BrownianField, pairs, K=None, interval=(0.0, 1.0), seed: int = 0,
                      check: bool = True, checkpoints=(), drift: float = 0.0,
                      keep_log: bool = False, event_cells=None, stop_cell=None) -> RunResult:
    """Evolve ``field`` (in place) over ``interval`` and account switches and hitsets.

    ``event_cells`` overrides the clock set (default: union of the pairs'
    cell sets); ``drift`` biases resampled blocks and is for negative
    controls only.  With ``stop_cell`` the run ends as soon as that cell
    joins the hitset (the field is then left at that time).
    """
    if stop_cell is not None and checkpoints:
        raise ValueError("stop_cell and checkpoints cannot be combined")
    s, t = interval
    tracker = Tracker(field, pairs, K, check=check)
    cells = tracker.union_mset() if event_cells is None else event_cells
    events = sample_events(cells, s, t, child_seed(seed, "clock"))
    draws = resample_draws(len(events), field.spec.G, seed, drift)
    agg_ledger, agg_hits = SwitchLedger(K), HitSetAccumulator(K)
    for pair in tracker.pairs:
        agg_hits.cells |= pair.hits.cells
    agg_hits.freeze_initial()
    T_start = [pair.T for pair in tracker.pairs]
    counts = Counter()
    log = []
    marks = sorted(checkpoints)
    out_marks = []
    mi = 0
    done = 0
    for k, ev in enumerate(events):
        if stop_cell is not None and stop_cell in agg_hits.cells:
            break
        done += 1
        while mi < len(marks) and marks[mi] < ev.r:
            out_marks.append((marks[mi], agg_ledger.total, len(agg_hits.cells)))
            mi += 1
        _, changes, bound = tracker.apply_event(ev, draws[k])
        ev_switch, ev_changed, bound_ok = 0, False, True
        primary = (None, None, "unchanged")
        for ch in changes:
            pair = tracker.pairs[ch.index]
            ok = abs(ch.T_new - ch.T_old) <= bound + 1e-9 * max(1.0, abs(ch.T_old))
            bound_ok &= ok
            counts["dT_bound_checked"] += 1
            if check and not ok:
                raise InvariantViolation("dT-bound", {"event": k, "block": ev.block,
                                                     "dT": ch.T_new - ch.T_old, "bound": bound})
            if ch.new == ch.old:
                continue
            ev_changed = True
            d = switch_delta(ch.old, ch.new, K)
            loc = None
            case = "changed"
            if check or ch.index == 0:
                try:
                    dec = excursion_decompose(ch.old, ch.new)
                except ExcursionError as err:
                    raise InvariantViolation("trichotomy", {"event": k, "block": ev.block,
                                                         "old": ch.old.jumps.tolist(),
                                                         "new": ch.new.jumps.tolist(),
                                                         "error": str(err)}) from err
                case = dec.case
                counts["trichotomy_checked"] += 1
                loc = loc_classify(difference_set(ch.old, ch.new))
                if loc is not None and not loc_window_holds(dec, *loc):
                    raise InvariantViolation("loc-window", {"event": k, "loc": loc})
            pair.ledger.record(d, loc)
            new_cells = coarse_set(ch.new, K)
            pair.hits.cells |= new_cells
            agg_hits.cells |= new_cells
            agg_ledger.record(d, loc if ch.index == 0 else None)
            ev_switch += d
            if ch.index == 0:
                primary = (loc[0] if loc else None, loc[1] if loc else None, case)
        if keep_log:
            log.append({"r": ev.r, "block_i": ev.block[0], "block_m": ev.block[1],
                        "changed": int(ev_changed), "switch_delta": ev_switch,
                        "loc_l": primary[0], "loc_m": primary[1],
                        "excursion_case": primary[2], "dT_bound_ok": int(bound_ok)})
    while mi < len(marks):
        out_marks.append((marks[mi], agg_ledger.total, len(agg_hits.cells)))
        mi += 1
    for j, pair in enumerate(tracker.pairs):
        if len(pair.hits.cells) > pair.hits.initial_size + pair.ledger.total:
            raise InvariantViolation("hitset-bound", {"pair": j})
    counts.update(tracker.counts)
    counts["hitset_bound_checked"] += len(tracker.pairs) + 1
    result = RunResult(agg_ledger, agg_hits, tracker.pairs, done, log, out_marks,
                       T_start, [pair.T for pair in tracker.pairs], dict(counts))
    if result.hitset_slack() < 0:
        raise InvariantViolation("hitset-bound", {"aggregate": True})
    return result


def write_event_log(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=LOG_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if row[k] is None else row[k]) for k in LOG_COLUMNS})
