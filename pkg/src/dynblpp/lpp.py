"""Static BLPP on one field: passage times, geodesics, routed profiles, peaks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .grid import BrownianField, reflect


class Point(NamedTuple):
    x: float
    m: int


def leq(p: Point, q: Point) -> bool:
    return p.x <= q.x and p.m <= q.m


class Staircase:
    """Up-right path given by its jump ticks ``z_{m0-1} <= ... <= z_{n1}``.

    ``ticks[k - m0 + 1]`` is ``z_k * G``; line ``k`` carries the horizontal
    segment ``[z_{k-1}, z_k]`` and the path jumps from ``k`` to ``k+1`` at
    ``z_k``.
    """

    __slots__ = ("m0", "n1", "ticks", "G")

    def __init__(self, m0: int, n1: int, ticks, G: int):
        ticks = np.asarray(ticks, dtype=np.int64)
        if n1 < m0:
            raise ValueError(f"staircase line range [{m0}, {n1}] is empty")
        if ticks.shape != (n1 - m0 + 2,):
            raise ValueError(f"expected {n1 - m0 + 2} jump ticks, got shape {ticks.shape}")
        if np.any(np.diff(ticks) < 0):
            raise ValueError("staircase jumps must be nondecreasing")
        self.m0, self.n1, self.ticks, self.G = int(m0), int(n1), ticks, int(G)

    @classmethod
    def _trusted(cls, m0: int, n1: int, ticks, G: int) -> "Staircase":
        """No validation; for paths produced by the DP backtrack."""
        obj = cls.__new__(cls)
        obj.m0, obj.n1, obj.ticks, obj.G = m0, n1, ticks, G
        return obj

    @classmethod
    def from_jumps(cls, m0: int, n1: int, jumps, G: int) -> "Staircase":
        jumps = np.asarray(jumps, dtype=float)
        ticks = np.rint(jumps * G)
        if np.any(np.abs(ticks - jumps * G) > 1e-7):
            raise ValueError(f"staircase jumps are not on the 1/{G} grid")
        return cls(m0, n1, ticks.astype(np.int64), G)

    @property
    def jumps(self) -> np.ndarray:
        return self.ticks / self.G

    @property
    def source(self) -> Point:
        return Point(self.ticks[0] / self.G, self.m0)

    @property
    def sink(self) -> Point:
        return Point(self.ticks[-1] / self.G, self.n1)

    def z(self, k: int) -> float:
        """Rightmost point of the path on line ``k`` (``k = m0 - 1`` gives the source x)."""
        return self.ticks[k - self.m0 + 1] / self.G

    def segment_ticks(self, k: int) -> tuple[int, int]:
        j = k - self.m0
        return int(self.ticks[j]), int(self.ticks[j + 1])

    def segments(self):
        for k in range(self.m0, self.n1 + 1):
            a, b = self.segment_ticks(k)
            yield k, a, b

    def __eq__(self, other) -> bool:
        if not isinstance(other, Staircase):
            return NotImplemented
        return (self.m0 == other.m0 and self.n1 == other.n1 and self.G == other.G
                and bool((self.ticks == other.ticks).all()))

    def __hash__(self):
        return hash((self.m0, self.n1, self.G, self.ticks.tobytes()))

    def __repr__(self) -> str:
        return f"Staircase(m0={self.m0}, n1={self.n1}, jumps={self.jumps.tolist()})"


def _check_inside(field: BrownianField, p: Point) -> int:
    s = field.spec
    if not s.contains(p.x, p.m):
        raise ValueError(f"point {tuple(p)} outside the field range")
    return s.to_tick(p.x)


def staircase_weight(field: BrownianField, xi: Staircase) -> float:
    if xi.G != field.spec.G:
        raise ValueError("staircase and field use different grid resolutions")
    if not (field.spec.m_min <= xi.m0 and xi.n1 <= field.spec.m_max):
        raise ValueError("staircase lines outside the field")
    rows = np.arange(xi.m0, xi.n1 + 1) - field.spec.m_min
    cols = xi.ticks - field.spec.tick_min
    if cols[0] < 0 or cols[-1] >= field.spec.n_ticks:
        raise ValueError("staircase leaves the field's x-range")
    V = field.values
    return float(np.sum(V[rows, cols[1:]] - V[rows, cols[:-1]]))


@dataclass
class DPForward:
    """Forward DP tables from ``source`` over lines ``m0..m_end`` and ticks ``tick0..``.

    ``values[r, j]`` is the passage time from the source to
    ``((tick0 + j)/G, m0 + r)``; ``argmax[r, j]`` is the leftmost column where
    the path arriving there jumped up from line ``m0 + r - 1``, and
    ``running[r, j]`` the prefix maximum it attained.
    """

    source: Point
    G: int
    m0: int
    tick0: int
    values: np.ndarray
    argmax: np.ndarray
    running: np.ndarray

    @property
    def m_end(self) -> int:
        return self.m0 + self.values.shape[0] - 1

    @property
    def tick_end(self) -> int:
        return self.tick0 + self.values.shape[1] - 1

    def local(self, q: Point) -> tuple[int, int]:
        t = round(q.x * self.G)
        r, j = q.m - self.m0, t - self.tick0
        if not (0 <= r < self.values.shape[0] and 0 <= j < self.values.shape[1]):
            raise ValueError(f"point {tuple(q)} outside this DP table")
        return r, j

    def value(self, q: Point) -> float:
        r, j = self.local(q)
        return float(self.values[r, j])

    def geodesic_to(self, q: Point) -> Staircase:
        r, j = self.local(q)
        out = np.empty(r + 2, dtype=np.int64)
        kernels.backtrack(self.argmax, r, j, out)
        out += self.tick0
        return Staircase._trusted(self.m0, q.m, out, self.G)


def forward_dp(field: BrownianField, p: Point, m_end: int, x_end: float) -> DPForward:
    tick0 = _check_inside(field, p)
    tick_end = _check_inside(field, Point(x_end, m_end))
    if tick_end < tick0 or m_end < p.m:
        raise ValueError(f"DP target ({x_end}, {m_end}) is not >= source {tuple(p)}")
    nrows, ncols = m_end - p.m + 1, tick_end - tick0 + 1
    D = np.empty((nrows, ncols))
    ptr = np.empty((nrows, ncols), dtype=np.int64)
    M = np.empty((nrows, ncols))
    kernels.forward_rows(field.values, field.row(p.m), field.col(tick0), 0, nrows - 1, D, ptr, M)
    return DPForward(p, field.spec.G, p.m, tick0, D, ptr, M)


def _require_leq(p: Point, q: Point) -> None:
    if not leq(p, q):
        raise ValueError(f"need p <= q coordinatewise, got p={tuple(p)}, q={tuple(q)}")


def passage_time(field: BrownianField, p: Point, q: Point) -> tuple[float, DPForward]:
    _require_leq(p, q)
    dp = forward_dp(field, p, q.m, q.x)
    return float(dp.values[-1, -1]), dp


def geodesic(field: BrownianField, p: Point, q: Point, dp: DPForward | None = None) -> Staircase:
    """Leftmost geodesic from ``p`` to ``q``."""
    _require_leq(p, q)
    if dp is None:
        _, dp = passage_time(field, p, q)
    return dp.geodesic_to(q)


def backward_values(field: BrownianField, q: Point, m: int, x_lo: float,
                    reflected: BrownianField | None = None) -> np.ndarray:
    """``T_{(x, m)}^q`` for grid ``x`` in ``[x_lo, x_q]`` (via the reflected field)."""
    ref = reflected if reflected is not None else reflect(field)
    dp = forward_dp(ref, Point(-q.x, -q.m), -m, -x_lo)
    return dp.values[-1, ::-1].copy()


@dataclass
class RoutedProfile:
    m: int
    kind: str
    x: np.ndarray
    values: np.ndarray

    def argmax_x(self) -> float:
        return float(self.x[int(np.argmax(self.values))])


def routed_profile(field: BrownianField, p1: Point, p2: Point, m: int, kind: str = "plain",
                   forward: DPForward | None = None,
                   reflected: BrownianField | None = None) -> RoutedProfile:
    """``Z(x, m) = T_{p1}^{(x,m)} + T_{(x,m)}^{p2}`` (plain) or with ``(x, m+1)`` (split)."""
    _require_leq(p1, p2)
    if kind not in ("plain", "split"):
        raise ValueError(f"kind must be 'plain' or 'split', got {kind!r}")
    top = m if kind == "plain" else m + 1
    if not (p1.m <= m and top <= p2.m):
        raise ValueError(f"line {m} admits no routed {kind} profile between {tuple(p1)} and {tuple(p2)}")
    if forward is None or forward.m_end < m or forward.tick_end < round(p2.x * field.spec.G):
        forward = forward_dp(field, p1, m, p2.x)
    G = field.spec.G
    t1, t2 = round(p1.x * G), round(p2.x * G)
    fwd = forward.values[m - forward.m0, t1 - forward.tick0:t2 - forward.tick0 + 1]
    bwd = backward_values(field, p2, top, p1.x, reflected)
    x = np.arange(t1, t2 + 1) / G
    return RoutedProfile(m, kind, x, fwd + bwd)


def profile_table(field: BrownianField, p1: Point, p2: Point,
                  reflected: BrownianField | None = None) -> tuple[float, np.ndarray]:
    """``T`` and the plain profile ``Z(x, m)`` for every line ``m_p1..m_p2`` (rows) and grid x."""
    _require_leq(p1, p2)
    fwd = forward_dp(field, p1, p2.m, p2.x)
    ref = reflected if reflected is not None else reflect(field)
    bwd = forward_dp(ref, Point(-p2.x, -p2.m), -p1.m, -p1.x)
    Z = fwd.values + bwd.values[::-1, ::-1]
    return float(fwd.values[-1, -1]), Z


def gap_tolerance(T: float) -> float:
    """Slack for ``gap <= alpha`` tests: forward plus backward sums can overshoot T by ulps."""
    return 1e-9 * max(1.0, abs(T))


def peak_counts(gap_row: np.ndarray, alpha: float, G: int, x0_tick: int, tol: float = 0.0) -> int:
    """Number of cells ``i`` whose ticks ``[iG, (i+1)G]`` hold a gap ``<= alpha + tol``."""
    hit = np.flatnonzero(gap_row <= alpha + tol) + x0_tick
    if hit.size == 0:
        return 0
    # (t - 1) // G differs from t // G only at t = iG, which also lies in cell i - 1
    cells = np.concatenate((hit // G, (hit - 1) // G))
    return int(np.unique(cells).size)


def peak_set(field: BrownianField, n: int, m: int, alpha: float,
             profile: RoutedProfile | None = None, T: float | None = None) -> set[tuple[int, int]]:
    """Cells ``(i, m)`` of row ``m`` holding an ``alpha``-near maximizer of the plain profile from 0 to n."""
    if not 0 <= m <= n:
        raise ValueError(f"line {m} outside [0, {n}]")
    p1, p2 = Point(0, 0), Point(n, n)
    if T is None:
        T, _ = passage_time(field, p1, p2)
    if profile is None:
        profile = routed_profile(field, p1, p2, m, "plain")
    G = field.spec.G
    gap = T - profile.values
    tol = gap_tolerance(T)
    cells = set()
    for i in range(-1, n + 1):
        lo, hi = max(i * G, 0), min((i + 1) * G, n * G)
        if lo > hi:
            continue
        if gap[lo:hi + 1].min() <= alpha + tol:
            cells.add((i, m))
    return cells


def twin_peak_from_profile(profile: RoutedProfile, T: float, gamma_m: float,
                           ell: float, delta: float) -> bool:
    far = np.abs(profile.x - gamma_m) >= ell ** (2.0 / 3.0 - delta)
    if not far.any():
        return False
    return bool(np.min(T - profile.values[far]) <= ell ** delta + gap_tolerance(T))


def twin_peak_event(field: BrownianField, n: int, m: int, ell: float, delta: float,
                    beta: float = 0.25) -> bool:
    if not 1 <= ell <= n:
        raise ValueError(f"need 1 <= ell <= n, got ell={ell}, n={n}")
    if not (beta * n <= m <= (1 - beta) * n) or m >= n:
        raise ValueError(f"line {m} outside [{beta} n, {1 - beta} n]")
    p1, p2 = Point(0, 0), Point(n, n)
    T, dp = passage_time(field, p1, p2)
    gamma_m = dp.geodesic_to(p2).z(m)
    prof = routed_profile(field, p1, p2, m, "split", forward=dp)
    return twin_peak_from_profile(prof, T, gamma_m, ell, delta)


def disjoint_passage(field: BrownianField, p: Point, q: Point, k: int = 2) -> float:
    """Best total weight of ``k`` staircases ``p -> q`` with disjoint interiors (k <= 2)."""
    _require_leq(p, q)
    if k == 1:
        return passage_time(field, p, q)[0]
    if k != 2:
        raise NotImplementedError("disjoint passage times are implemented for k <= 2 only")
    t0, t1 = _check_inside(field, p), _check_inside(field, q)
    if p.m == q.m and t1 > t0:
        return -math.inf
    rows = slice(field.row(p.m), field.row(q.m) + 1)
    win = np.ascontiguousarray(field.values[rows, field.col(t0):field.col(t1) + 1])
    return float(kernels.pair_dp(win))


def line_ensemble_point(field: BrownianField, n: int, k: int, x_scaled: float) -> float:
    """Scaled top-line value ``n^{-1/3} (P_{k,n}(y) - 2n - 2 n^{2/3} x)`` at ``y = n + 2 n^{2/3} x``."""
    if k not in (1, 2):
        raise NotImplementedError("line ensemble implemented for k in {1, 2}")
    if x_scaled <= -n ** (1 / 3) / 2:
        raise ValueError("x_scaled must exceed -n^{1/3}/2")
    y = n + 2 * n ** (2 / 3) * x_scaled
    G = field.spec.G
    if abs(y * G - round(y * G)) > 1e-7:
        raise ValueError(f"y = {y} is off the 1/{G} grid")
    y = round(y * G) / G
    p, q = Point(0, 0), Point(y, n)
    t1 = passage_time(field, p, q)[0]
    P = t1 if k == 1 else disjoint_passage(field, p, q, 2) - t1
    return n ** (-1 / 3) * (P - 2 * n - 2 * n ** (2 / 3) * x_scaled)


def q_linear(p: Point, q: Point) -> float:
    return 2 * (q.m - p.m) + (q.x - p.x)
