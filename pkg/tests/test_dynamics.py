import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dynblpp import kernels
from dynblpp.coarse import IntervalSet, coarse_set, mset
from dynblpp.dynamics import (LOG_COLUMNS, ClockEvent, ExcursionError, InvariantViolation, Tracker,
                              difference_set, evolve_field, excursion_decompose, hitset_pairs_mesh,
                              loc_window_holds, loc_classify, replay, resample_draws, run_pair_dynamics,
                              sample_events, switch_delta, write_event_log)
from dynblpp.grid import GridSpec, sample_field
from dynblpp.lpp import Point, Staircase, passage_time
from dynblpp.oracle import brute_coarse

S4 = lambda z, m0=0, n1=6: Staircase.from_jumps(m0, n1, z, 4)
# the worked example: blue -> red -> blue -> green
BLUE = S4([0, 0.5, 1.5, 2.5, 3.25, 3.75, 5.5, 6])
RED = S4([0, 0.5, 1.5, 2.5, 4.25, 4.75, 5.5, 6])
GREEN = S4([0, 1.25, 1.5, 2.5, 3.25, 3.75, 5.5, 6])


# -- clocks -------------------------------------------------------------------

def test_events_trivial_cases():
    assert sample_events({(0, 0)}, 1.0, 1.0, 3) == []
    assert sample_events(set(), 0.0, 1.0, 3) == []
    with pytest.raises(ValueError):
        sample_events({(0, 0)}, 1.0, 0.5, 3)
    ev = sample_events({(0, 0), (1, 0)}, 0.0, 5.0, 9)
    assert ev == sample_events({(1, 0), (0, 0)}, 0.0, 5.0, 9)
    assert ev == sorted(ev) and all(0 <= e.r <= 5 for e in ev)


def test_event_count_and_uniformity():
    cells = {(i, m) for i in range(9) for m in range(10)}  # 90 cells
    counts, per_block = [], Counter()
    for s in range(10_000):
        ev = sample_events(cells, 0.0, 1.0, s)
        counts.append(len(ev))
        if s < 2000:
            per_block.update(e.block for e in ev)
    assert abs(np.mean(counts) / 90 - 1) < 0.03
    obs = np.array([per_block[c] for c in sorted(cells)], float)
    chi2 = np.sum((obs - obs.mean()) ** 2 / obs.mean())
    assert chi2 < 89 + 4 * math.sqrt(2 * 89)  # far inside the chi-square(89) tail


# -- switches, Loc, excursions ------------------------------------------------

def test_worked_replay():
    ledger, hits, deltas = replay([BLUE, RED, BLUE, GREEN])
    assert hits.initial_size == 14
    assert deltas == [2, 2, 1] and ledger.total == 5
    assert len(hits.cells) == 17
    assert hits.initial_size + ledger.total - len(hits.cells) == 2
    assert switch_delta(BLUE, BLUE) == 0


def test_switch_delta_matches_set_difference():
    rng = np.random.default_rng(0)
    for _ in range(200):
        a = np.sort(rng.integers(0, 25, 5)); a[0], a[-1] = 0, 24
        b = np.sort(rng.integers(0, 25, 5)); b[0], b[-1] = 0, 24
        old, new = Staircase(0, 3, a, 4), Staircase(0, 3, b, 4)
        K = (1, 2)
        assert switch_delta(old, new, K) == len(brute_coarse(new, K) - brute_coarse(old, K))
    with pytest.raises(ValueError):
        switch_delta(S4([0, 1], 0, 0), S4([0, 2], 0, 0))


def test_loc_classify():
    assert loc_classify(IntervalSet(4)) is None
    A = IntervalSet(4)
    A.add(10, 0, 4)
    A.add(17, 2, 8)
    ell, m = loc_classify(A)
    assert ell == 4  # vertical extent 7 lies in [4, 8)
    assert m % ell == 0 and m - 2 * ell <= 10 and 17 <= m + 2 * ell
    assert loc_classify(A) == (4, 12)
    for shift in (-8, 4, 12):
        B = IntervalSet(4)
        for row, ivs in A.lines.items():
            for a, b in ivs:
                B.add(row + shift, a, b)
        assert loc_classify(B) == (4, 12 + shift)


def test_worked_excursions_are_single():
    for a, b, loc in [(BLUE, RED, (2, 2)), (RED, BLUE, (2, 2)), (BLUE, GREEN, (1, -1))]:
        dec = excursion_decompose(a, b)
        assert dec.case == "single"
        assert loc_classify(difference_set(a, b)) == loc
        assert loc_window_holds(dec, *loc)
    assert excursion_decompose(BLUE, BLUE).case == "unchanged"


def test_two_excursions_joined_at_a_line():
    # the new path leaves the old one, meets it only on line 2, and leaves again
    old = Staircase.from_jumps(0, 4, [0, 0.5, 1.5, 2.5, 2.75, 4], 20)
    new = Staircase.from_jumps(0, 4, [0, 0.1, 0.4, 3.0, 3.5, 4], 20)
    dec = excursion_decompose(old, new)
    assert dec.case == "double"
    lo, hi = dec.lower, dec.upper
    assert (lo.source, lo.sink) == (Point(0.1, 0), Point(1.5, 2))
    assert (hi.source, hi.sink) == (Point(2.5, 2), Point(3.5, 4))
    assert lo.n1 == hi.m0 == 2
    assert loc_classify(difference_set(old, new)) == (4, -4)


def test_three_excursions_rejected():
    old = Staircase.from_jumps(0, 4, [0, 0.5, 1.5, 2.5, 2.75, 4], 4)
    new = Staircase.from_jumps(0, 4, [0, 0.25, 0.5, 3.0, 3.5, 4], 4)
    with pytest.raises(ExcursionError):
        excursion_decompose(old, new)


# -- tracker ------------------------------------------------------------------

def make_tracker(n=8, G=4, seed=0, check=True, pairs=None):
    f = sample_field(GridSpec(G, -1, n + 2, 0, n + 1), seed)
    pairs = pairs or [(Point(0, 0), Point(n, n)), (Point(0, 0), Point(n - 2, n)),
                      (Point(1, 1), Point(n, n - 1))]
    return f, Tracker(f, pairs, K=None, check=check)


def test_locality_and_incremental_agreement():
    f, tr = make_tracker()
    rng = np.random.default_rng(1)
    draws = rng.standard_normal((100, 4)) * 0.5
    r = 0.0
    for k in range(100):
        i, m = int(rng.integers(-1, 10)), int(rng.integers(0, 10))
        r += 0.01
        before = [p.geo for p in tr.pairs]
        _, changes, bound = tr.apply_event(ClockEvent(r, (i, m)), draws[k])
        touched = {c.index for c in changes}
        for j, pair in enumerate(tr.pairs):
            if not pair.covers((i, m)):
                assert j not in touched and pair.geo is before[j]
            full_T, full_dp = passage_time(f, pair.p, pair.q)
            assert pair.geo == full_dp.geodesic_to(pair.q)
            # a ring left of the source re-anchors the line: T moves by ulps only
            assert pair.T == pytest.approx(full_T, rel=1e-12, abs=1e-12)
        for c in changes:
            assert abs(c.T_new - c.T_old) <= bound + 1e-9
    with pytest.raises(ValueError):
        tr.apply_event(ClockEvent(0.0, (0, 0)), draws[0])


def test_cell_sets_cover_the_pair_box():
    _, tr = make_tracker()
    pair = tr.pairs[0]
    for cell in mset(pair.p, pair.q):
        assert pair.covers(cell)


def test_tampered_incremental_dp_is_caught(monkeypatch):
    f, tr = make_tracker()
    monkeypatch.setattr(kernels, "update_rows", lambda *a, **k: a[4])
    with pytest.raises(InvariantViolation) as err:
        for k in range(50):
            tr.apply_event(ClockEvent(0.01 * (k + 1), (k % 8, 3)), np.full(4, 2.0))
    assert err.value.what == "incremental-dp"


# -- runs ---------------------------------------------------------------------

def test_zero_length_run():
    f = sample_field(GridSpec(4, -1, 9, 0, 8), 0)
    res = run_pair_dynamics(f, [(Point(0, 0), Point(8, 8))], (2, 6), (0.5, 0.5), seed=1)
    assert res.events == 0 and res.ledger.total == 0
    geo = passage_time(f, Point(0, 0), Point(8, 8))[1].geodesic_to(Point(8, 8))
    assert res.hitset.cells == coarse_set(geo, (2, 6)) and res.hitset_slack() == 0


def test_checked_run_and_log(tmp_path):
    n = 16
    f = sample_field(GridSpec(8, -1, n + 1, 0, n), 4)
    g = f.copy()
    res = run_pair_dynamics(f, [(Point(0, 0), Point(n, n))], (4, 12), (0.0, 0.5), seed=4,
                            check=True, keep_log=True, checkpoints=(0.25,))
    assert res.events == len(res.log) > 0
    assert res.hitset_slack() >= 0
    assert res.checks["dT_bound_checked"] == res.events
    assert sum(r["switch_delta"] for r in res.log) == res.ledger.total
    assert res.checkpoints[0][0] == 0.25 and res.checkpoints[0][1] <= res.ledger.total
    write_event_log(res.log, tmp_path / "ev.csv")
    header = (tmp_path / "ev.csv").read_text().splitlines()[0]
    assert header.split(",") == LOG_COLUMNS
    # the geodesic-free evolution lands on the same field
    cells = mset(Point(0, 0), Point(n, n))
    evolve_field(g, cells, (0.0, 0.5), seed=4)
    assert g.same_as(f)


def test_stop_cell_ends_the_run():
    f = sample_field(GridSpec(4, -13, 13, -8, 8), 2)
    pairs = hitset_pairs_mesh(8, 2.0, 4)
    res = run_pair_dynamics(f, pairs, (-4, 4), (0.0, 1.0), seed=2, check=False, stop_cell=(0, 0))
    full = run_pair_dynamics(sample_field(GridSpec(4, -13, 13, -8, 8), 2), pairs, (-4, 4), (0.0, 1.0),
                             seed=2, check=False)
    assert ((0, 0) in res.hitset.cells) == ((0, 0) in full.hitset.cells)
    assert res.events <= full.events
    with pytest.raises(ValueError):
        run_pair_dynamics(f, pairs, None, (0, 1), stop_cell=(0, 0), checkpoints=(0.5,))


def test_resample_draws_shape_and_drift():
    a = resample_draws(5, 8, 1)
    b = resample_draws(5, 8, 1, drift=0.5)
    assert a.shape == (5, 8)
    np.testing.assert_allclose(b - a, 0.5 / 8)


# -- mesh ---------------------------------------------------------------------

def test_mesh_examples():
    n = 8  # n^{2/3} = 4
    assert hitset_pairs_mesh(n, 8.0, 4) == [(Point(-8, -8), Point(8, 8))]
    for sigma in (1.0, 2.0, 4.0, 0.5):
        assert len(hitset_pairs_mesh(n, sigma, 4)) == (math.floor(2 * 4 / sigma) + 1) ** 2
    with pytest.raises(ValueError):
        hitset_pairs_mesh(n, 0.3, 4)
    with pytest.raises(ValueError):
        hitset_pairs_mesh(n, 0.0, 4)


def test_refined_mesh_static_hitset_grows():
    n = 8
    f = sample_field(GridSpec(4, -13, 13, -8, 8), 5)
    sets = []
    for sigma in (4.0, 2.0, 1.0):
        cells = set()
        for p, q in hitset_pairs_mesh(n, sigma, 4):
            _, dp = passage_time(f, p, q)
            cells |= coarse_set(dp.geodesic_to(q), (-4, 4))
        sets.append(cells)
    assert sets[0] <= sets[1] <= sets[2]


@given(seed=st.integers(0, 10**6))
def test_hitset_bound_on_random_short_runs(seed):
    f = sample_field(GridSpec(4, -1, 7, 0, 6), seed)
    res = run_pair_dynamics(f, [(Point(0, 0), Point(6, 6)), (Point(0, 0), Point(5, 6))], (1, 5),
                            (0.0, 0.3), seed=seed, check=True)
    assert len(res.hitset.cells) <= res.hitset.initial_size + res.ledger.total
