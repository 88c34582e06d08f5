"""Discretized Brownian environment for one time-slice of dynamical BLPP.

Line ``m`` carries a path ``W_m`` sampled at ticks ``x = t / G``.  Each unit
block ``[i, i+1]`` of each line owns ``G`` i.i.d. ``Normal(0, 1/G)``
increments; ``W_m`` is the running sum of the line's increments anchored at
``W_m(x_min) = 0``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .seeding import child_rng


@dataclass(frozen=True)
class GridSpec:
    G: int
    x_min: int
    x_max: int
    m_min: int
    m_max: int

    def __post_init__(self):
        for name in ("G", "x_min", "x_max", "m_min", "m_max"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise ValueError(f"GridSpec.{name} must be an integer, got {v!r}")
        if self.G < 1:
            raise ValueError(f"grid resolution must be >= 1, got {self.G}")
        if self.x_max <= self.x_min:
            raise ValueError(f"empty x-range [{self.x_min}, {self.x_max}]")
        if self.m_max < self.m_min:
            raise ValueError(f"empty line range [{self.m_min}, {self.m_max}]")

    @property
    def n_lines(self) -> int:
        return self.m_max - self.m_min + 1

    @property
    def n_blocks(self) -> int:
        return self.x_max - self.x_min

    @property
    def n_ticks(self) -> int:
        return self.n_blocks * self.G + 1

    @property
    def tick_min(self) -> int:
        return self.x_min * self.G

    @property
    def tick_max(self) -> int:
        return self.x_max * self.G

    def grid_x(self) -> np.ndarray:
        return (self.tick_min + np.arange(self.n_ticks)) / self.G

    def to_tick(self, x: float) -> int:
        """Absolute tick of grid coordinate ``x``; raises if ``x`` is off-grid."""
        t = round(x * self.G)
        if abs(t - x * self.G) > 1e-7:
            raise ValueError(f"x = {x} is not on the 1/{self.G} grid")
        return int(t)

    def contains(self, x: float, m: int) -> bool:
        return self.x_min <= x <= self.x_max and self.m_min <= m <= self.m_max

    def has_block(self, i: int, m: int) -> bool:
        return self.x_min <= i < self.x_max and self.m_min <= m <= self.m_max


@dataclass
class FieldDelta:
    block: tuple[int, int]
    old: np.ndarray
    new: np.ndarray
    shift: float


@dataclass
class BrownianField:
    spec: GridSpec
    increments: np.ndarray  # (lines, blocks, G)
    values: np.ndarray  # (lines, ticks)
    seed: int | None = None
    provenance: dict = dc_field(default_factory=dict)

    # -- indexing ----------------------------------------------------------
    def row(self, m: int) -> int:
        if not self.spec.m_min <= m <= self.spec.m_max:
            raise IndexError(f"line {m} outside [{self.spec.m_min}, {self.spec.m_max}]")
        return m - self.spec.m_min

    def col(self, tick: int) -> int:
        c = tick - self.spec.tick_min
        if not 0 <= c < self.spec.n_ticks:
            raise IndexError(f"tick {tick} outside the grid")
        return c

    def value_at(self, m: int, x: float) -> float:
        return float(self.values[self.row(m), self.col(self.spec.to_tick(x))])

    def block_path(self, i: int, m: int) -> np.ndarray:
        """``X_{i,m}`` at ticks ``0, 1/G, ..., 1`` (starts at 0)."""
        inc = self.increments[self.row(m), self._block_col(i)]
        return np.concatenate(([0.0], np.cumsum(inc)))

    def _block_col(self, i: int) -> int:
        b = i - self.spec.x_min
        if not 0 <= b < self.spec.n_blocks:
            raise IndexError(f"block {i} outside [{self.spec.x_min}, {self.spec.x_max})")
        return b

    def rebuild_line(self, m: int) -> None:
        r = self.row(m)
        self.values[r, 0] = 0.0
        np.cumsum(self.increments[r].reshape(-1), out=self.values[r, 1:])

    def copy(self) -> "BrownianField":
        return BrownianField(self.spec, self.increments.copy(), self.values.copy(),
                             self.seed, dict(self.provenance))

    def same_as(self, other: "BrownianField") -> bool:
        return (self.spec == other.spec
                and np.array_equal(self.increments, other.increments)
                and np.array_equal(self.values, other.values))


def _lines_from_increments(inc: np.ndarray) -> np.ndarray:
    n_lines = inc.shape[0]
    vals = np.zeros((n_lines, inc.shape[1] * inc.shape[2] + 1))
    np.cumsum(inc.reshape(n_lines, -1), axis=1, out=vals[:, 1:])
    return vals


def sample_field(spec: GridSpec, seed: int) -> BrownianField:
    rng = child_rng(seed, "field", spec.G, spec.x_min, spec.x_max, spec.m_min, spec.m_max)
    inc = rng.standard_normal((spec.n_lines, spec.n_blocks, spec.G)) * math.sqrt(1.0 / spec.G)
    return BrownianField(spec, inc, _lines_from_increments(inc), int(seed),
                         {"kind": "sample_field", "seed": int(seed)})


def resample_block(field: BrownianField, block: tuple[int, int], seed: int,
                   drift: float = 0.0) -> FieldDelta:
    """Replace block ``(i, m)`` by a fresh draw keyed by ``seed``.

    ``drift`` adds a mean ``drift`` to ``X(1)`` of the new block; it exists
    only for negative-control experiments and must be 0 otherwise.
    """
    i, m = block
    if not field.spec.has_block(i, m):
        raise IndexError(f"block {block} outside the field")
    G = field.spec.G
    rng = child_rng(seed, "block", i, m)
    new = rng.standard_normal(G) * math.sqrt(1.0 / G)
    if drift:
        new = new + drift / G
    return set_block(field, block, new)


def set_block(field: BrownianField, block: tuple[int, int], new: np.ndarray) -> FieldDelta:
    """Install given increments into block ``(i, m)`` and rebuild line ``m``."""
    i, m = block
    r, b = field.row(m), field._block_col(i)
    new = np.asarray(new, dtype=np.float64)
    if new.shape != (field.spec.G,):
        raise ValueError(f"block needs {field.spec.G} increments, got shape {new.shape}")
    old = field.increments[r, b].copy()
    field.increments[r, b] = new
    field.rebuild_line(m)
    return FieldDelta((i, m), old, new.copy(), float(new.sum() - old.sum()))


def apply_delta(field: BrownianField, delta: FieldDelta) -> None:
    i, m = delta.block
    field.increments[field.row(m), field._block_col(i)] = delta.new
    field.rebuild_line(m)


def revert_delta(field: BrownianField, delta: FieldDelta) -> None:
    i, m = delta.block
    field.increments[field.row(m), field._block_col(i)] = delta.old
    field.rebuild_line(m)


def scaled_copy(field: BrownianField, beta: int) -> BrownianField:
    """Pathwise Brownian rescaling ``W'_m(beta x) = sqrt(beta) W_m(x)``.

    The returned field lives on ``[beta x_min, beta x_max]`` with resolution
    ``G / beta``, so ``beta`` must divide ``G``.
    """
    if not isinstance(beta, (int, np.integer)) or beta < 1:
        raise ValueError(f"beta must be a positive integer, got {beta!r}")
    s = field.spec
    if s.G % beta:
        raise ValueError(f"beta = {beta} does not divide grid resolution G = {s.G}")
    if beta == 1:
        return field.copy()
    spec = GridSpec(s.G // beta, s.x_min * beta, s.x_max * beta, s.m_min, s.m_max)
    root = math.sqrt(beta)
    inc = field.increments.reshape(s.n_lines, s.n_blocks * beta, s.G // beta) * root
    return BrownianField(spec, inc, field.values * root, field.seed,
                         {"kind": "scaled_copy", "beta": int(beta), "parent": field.provenance})


def reflect(field: BrownianField) -> BrownianField:
    """Point reflection ``W'_{-m}(-x) = -W_m(x)`` (re-anchored).

    A staircase ``(x, m) -> (y, n)`` maps to ``(-y, -n) -> (-x, -m)`` with the
    same weight, so forward DP on the reflection is backward DP here.
    """
    s = field.spec
    spec = GridSpec(s.G, -s.x_max, -s.x_min, -s.m_max, -s.m_min)
    vals = field.values[::-1, ::-1]
    vals = vals[:, :1] - vals
    inc = np.ascontiguousarray(field.increments[::-1, ::-1, ::-1])
    return BrownianField(spec, inc, np.ascontiguousarray(vals), field.seed,
                         {"kind": "reflect", "parent": field.provenance})


# -- snapshot dump / load ----------------------------------------------------

_HEADER = re.compile(r"BLPPFIELD v1 G=(-?\d+) x=(-?\d+):(-?\d+) m=(-?\d+):(-?\d+)")


def dump_field(field: BrownianField, path: str | Path) -> None:
    s = field.spec
    header = f"BLPPFIELD v1 G={s.G} x={s.x_min}:{s.x_max} m={s.m_min}:{s.m_max}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def load_field(path: str | Path) -> BrownianField:
    """Load a snapshot.  Block increments are recovered as value differences."""
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").strip()
        match = _HEADER.fullmatch(header)
        if match is None:
            raise ValueError(f"not a BLPPFIELD v1 file: {header[:60]!r}")
        G, x0, x1, m0, m1 = (int(v) for v in match.groups())
        spec = GridSpec(G, x0, x1, m0, m1)
        raw = np.frombuffer(fh.read(), dtype="<f8")
    if raw.size != spec.n_lines * spec.n_ticks:
        raise ValueError(f"expected {spec.n_lines * spec.n_ticks} values, found {raw.size}")
    values = raw.reshape(spec.n_lines, spec.n_ticks).astype(np.float64)
    inc = np.diff(values, axis=1).reshape(spec.n_lines, spec.n_blocks, spec.G)
    return BrownianField(spec, inc, values, None, {"kind": "load", "path": str(path)})
