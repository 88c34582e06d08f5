"""Coarse-graining onto unit cells ``(i, m)``, the sets M_{K1}^{K2}, and extents."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

from .lpp import Point, Staircase

Cell = tuple[int, int]
CoarseSet = set  # of Cell


class Rect(NamedTuple):
    """Closed box ``[x0, x1] x {m0..m1}``; points and segments are degenerate boxes."""
    x0: float
    x1: float
    m0: int
    m1: int


def as_rect(K) -> Rect:
    if isinstance(K, Rect):
        return K
    if isinstance(K, Point) or (isinstance(K, tuple) and len(K) == 2):
        x, m = K
        return Rect(x, x, m, m)
    raise TypeError(f"cannot interpret {K!r} as a grid-aligned box")


def cells_of_interval(a_tick: int, b_tick: int, G: int) -> range:
    """Cells ``i`` with ``[i, i+1]`` meeting ``[a, b]`` (closed, so touching counts)."""
    return range(-((-a_tick) // G) - 1, b_tick // G + 1)


def in_band(m: int, K) -> bool:
    return K is None or K[0] <= m <= K[1]


@dataclass
class IntervalSet:
    """Bounded planar set stored as closed tick intervals on each line."""
    G: int
    lines: dict = field(default_factory=dict)

    def add(self, m: int, a: int, b: int) -> None:
        if b < a:
            raise ValueError(f"empty interval [{a}, {b}] on line {m}")
        self.lines.setdefault(int(m), []).append((int(a), int(b)))

    def is_empty(self) -> bool:
        return not self.lines

    def rows(self) -> list[int]:
        return sorted(self.lines)

    def merged(self, m: int) -> list[tuple[int, int]]:
        out: list[list[int]] = []
        for a, b in sorted(self.lines.get(m, [])):
            if out and a <= out[-1][1]:
                out[-1][1] = max(out[-1][1], b)
            else:
                out.append([a, b])
        return [tuple(v) for v in out]

    @classmethod
    def from_staircase(cls, xi: Staircase) -> "IntervalSet":
        s = cls(xi.G)
        for k, a, b in xi.segments():
            s.add(k, a, b)
        return s


def coarse_set(A, K=None) -> CoarseSet:
    """``Coarse(A ∩ K)`` with ``K`` an optional row band ``(lo, hi)``."""
    cells: CoarseSet = set()
    if isinstance(A, Staircase):
        t, G = A.ticks, A.G
        lo = (-((-t[:-1]) // G) - 1).tolist()
        hi = (t[1:] // G).tolist()
        for j, k in enumerate(range(A.m0, A.n1 + 1)):
            if in_band(k, K):
                cells.update((i, k) for i in range(lo[j], hi[j] + 1))
    elif isinstance(A, IntervalSet):
        for k, ivs in A.lines.items():
            if in_band(k, K):
                for a, b in ivs:
                    cells.update((i, k) for i in cells_of_interval(a, b, A.G))
    elif isinstance(A, Point):
        if in_band(A.m, K):
            lo, hi = math.floor(A.x), math.ceil(A.x)
            cells.update((i, A.m) for i in range(lo - 1 if lo == hi else lo, lo + 1))
    else:
        raise TypeError(f"unsupported set type {type(A).__name__}")
    return cells


def mset(K1, K2) -> CoarseSet:
    """Cells ``(i, m)`` with some ``p in K1 <= w <= q in K2``, ``w`` on ``{m} x [i, i+1]``."""
    r1, r2 = as_rect(K1), as_rect(K2)
    X0, X1, M0, M1 = r1.x0, r2.x1, r1.m0, r2.m1
    if X0 > X1 or M0 > M1:
        return set()
    i_lo, i_hi = math.ceil(X0) - 1, math.floor(X1)
    return {(i, m) for m in range(math.ceil(M0), math.floor(M1) + 1) for i in range(i_lo, i_hi + 1)}


@dataclass(frozen=True)
class ExtentMeasures:
    vert: float
    hor: float


def extent(A: IntervalSet) -> ExtentMeasures:
    if A.is_empty():
        return ExtentMeasures(0.0, 0.0)
    rows = A.rows()
    hor = sum(b - a for m in rows for a, b in A.merged(m)) / A.G
    return ExtentMeasures(float(rows[-1] - rows[0]), hor)
