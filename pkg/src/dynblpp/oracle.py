"""Exhaustive reference implementations for tiny instances.

Nothing here is clever on purpose: every staircase is enumerated and
weighed term by term, disjointness is decided geometrically on a doubled
lattice, and coarse cells are found by scanning.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from .grid import BrownianField, GridSpec, sample_field
from .lpp import Point, Staircase, disjoint_passage, passage_time
from .seeding import child_rng, child_seed

REL_TOL = 1e-9


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class EnumerationBudget:
    max_staircases: int = 10 ** 7


def staircase_count(p: Point, q: Point, G: int) -> int:
    """Number of grid staircases ``p -> q``: a multiset coefficient."""
    r = q.m - p.m
    npos = round((q.x - p.x) * G) + 1
    return math.comb(npos + r - 1, r)


def _jump_matrix(p: Point, q: Point, G: int, budget: EnumerationBudget) -> np.ndarray:
    count = staircase_count(p, q, G)
    if count > budget.max_staircases:
        raise BudgetExceeded(f"{count} staircases exceed the budget of {budget.max_staircases}")
    t0, t1 = round(p.x * G), round(q.x * G)
    r = q.m - p.m
    inner = np.array(list(itertools.combinations_with_replacement(range(t0, t1 + 1), r)),
                     dtype=np.int64).reshape(count, r)
    Z = np.empty((count, r + 2), dtype=np.int64)
    Z[:, 0], Z[:, -1] = t0, t1
    Z[:, 1:-1] = inner
    return Z


def enumerate_staircases(G: int, p: Point, q: Point,
                         budget: EnumerationBudget = EnumerationBudget()):
    if not (p.x <= q.x and p.m <= q.m):
        raise ValueError("need p <= q")
    for row in _jump_matrix(p, q, G, budget):
        yield Staircase(p.m, q.m, row, G)


def _weights(field: BrownianField, p: Point, Z: np.ndarray) -> np.ndarray:
    s = field.spec
    w = np.zeros(Z.shape[0])
    for j in range(Z.shape[1] - 1):
        line = field.values[p.m + j - s.m_min]
        w += line[Z[:, j + 1] - s.tick_min] - line[Z[:, j] - s.tick_min]
    return w


def brute_passage(field: BrownianField, p: Point, q: Point,
                  budget: EnumerationBudget = EnumerationBudget()) -> tuple[float, Staircase]:
    """Best weight and its leftmost maximizer.

    Leftmost means: among (near-)maximizers, the smallest top jump, then the
    smallest next jump below it, and so on down the path.
    """
    G = field.spec.G
    Z = _jump_matrix(p, q, G, budget)
    w = _weights(field, p, Z)
    best = w.max()
    near = np.flatnonzero(w >= best - REL_TOL * max(1.0, abs(best)))
    cand = Z[near][:, ::-1]
    order = np.lexsort(cand.T[::-1])
    pick = near[order[0]]
    return float(best), Staircase(p.m, q.m, Z[pick], G)


def raster(Z: np.ndarray, m0: int, lo: int, hi: int) -> np.ndarray:
    """Boolean occupancy of each staircase on the doubled lattice, x strictly in (lo, hi) ticks.

    Vertices of grid staircases sit on integer (tick, line) points, so any
    intersection of two of them contains a point of the doubled lattice.
    """
    count, L = Z.shape
    nrows = L - 1
    width = 2 * (hi - lo) + 1
    occ = np.zeros((count, 2 * nrows - 1, width), dtype=bool)
    for s in range(count):
        z = Z[s]
        for k in range(nrows):
            a, b = 2 * (z[k] - lo), 2 * (z[k + 1] - lo)
            occ[s, 2 * k, a:b + 1] = True
            if k < nrows - 1:
                occ[s, 2 * k + 1, b] = True
    return occ[:, :, 1:-1].reshape(count, -1)


def brute_disjoint(field: BrownianField, p: Point, q: Point,
                   budget: EnumerationBudget = EnumerationBudget()) -> float:
    """Best summed weight of two staircases ``p -> q`` sharing no point with x in (x_p, x_q)."""
    G = field.spec.G
    Z = _jump_matrix(p, q, G, budget)
    if Z.shape[0] ** 2 > budget.max_staircases:
        raise BudgetExceeded(f"{Z.shape[0] ** 2} pairs exceed the budget")
    w = _weights(field, p, Z)
    occ = raster(Z, p.m, Z[0, 0], Z[0, -1]).astype(np.float64)
    clash = occ @ occ.T > 0
    total = w[:, None] + w[None, :]
    total[clash] = -np.inf
    return float(total.max())


def brute_coarse(xi: Staircase, K=None) -> set:
    """Cells met by ``xi`` found by scanning every cell of each line."""
    cells = set()
    G = xi.G
    lo, hi = int(xi.ticks[0]) // G - 2, int(xi.ticks[-1]) // G + 2
    for k, a, b in xi.segments():
        if K is not None and not (K[0] <= k <= K[1]):
            continue
        for i in range(lo, hi + 1):
            if max(a, i * G) <= min(b, (i + 1) * G):
                cells.add((i, k))
    return cells


def brute_mset(p_box, q_box, G: int) -> set:
    """Cells of M_{K1}^{K2} by scanning candidate points ``p``, ``w``, ``q`` on the grid."""
    (px0, px1, pm0, pm1), (qx0, qx1, qm0, qm1) = p_box, q_box
    ticks = lambda a, b: range(round(a * G), round(b * G) + 1)
    ps = [(t, m) for t in ticks(px0, px1) for m in range(pm0, pm1 + 1)]
    qs = [(t, m) for t in ticks(qx0, qx1) for m in range(qm0, qm1 + 1)]
    cells = set()
    for m in range(min(pm0, qm0) - 1, max(pm1, qm1) + 2):
        for i in range(math.floor(min(px0, qx0)) - 2, math.ceil(max(px1, qx1)) + 2):
            for t in range(i * G, (i + 1) * G + 1):
                if any(a <= t and b <= m for a, b in ps) and any(t <= c and m <= d for c, d in qs):
                    cells.add((i, m))
                    break
    return cells


# --------------------------------------------------------------------------
# agreement sweep
# --------------------------------------------------------------------------

def random_instances(seed: int, count: int = 200):
    """Tiny random instances: ``n <= 3`` lines up, ``G <= 4``, width ``<= 3``."""
    rng = child_rng(seed, "oracle-instances")
    for k in range(count):
        G = int(rng.integers(1, 5))
        n = int(rng.integers(0, 4))
        w = int(rng.integers(0, 4))
        x0 = int(rng.integers(0, G + 1)) / G
        fld = sample_field(GridSpec(G, -1, 5, -1, 4), child_seed(seed, "oracle-field", k))
        yield fld, Point(x0, 0), Point(x0 + w, n)


def _close(a: float, b: float) -> bool:
    if a == b:
        return True
    return abs(a - b) <= REL_TOL * max(1.0, abs(a), abs(b))


@dataclass
class AgreementReport:
    instances: int = 0
    mismatches: list = dc_field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.mismatches


def check_agreement(seed: int = 0, count: int = 200) -> AgreementReport:
    """Fast DP against enumeration: passage time, leftmost geodesic, two disjoint paths."""
    rep = AgreementReport()
    t0 = time.perf_counter()
    for k, (fld, p, q) in enumerate(random_instances(seed, count)):
        T, dp = passage_time(fld, p, q)
        Tb, gb = brute_passage(fld, p, q)
        D, Db = disjoint_passage(fld, p, q, 2), brute_disjoint(fld, p, q)
        what = []
        if not _close(T, Tb):
            what.append(f"passage {T!r} vs {Tb!r}")
        if dp.geodesic_to(q) != gb:
            what.append("geodesic")
        if not _close(D, Db):
            what.append(f"disjoint {D!r} vs {Db!r}")
        if what:
            rep.mismatches.append({"instance": k, "G": fld.spec.G, "p": tuple(p), "q": tuple(q),
                                   "what": what})
        rep.instances += 1
    rep.seconds = time.perf_counter() - t0
    return rep
