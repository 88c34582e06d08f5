import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dynblpp import kernels
from dynblpp.grid import GridSpec, sample_field

needs_both = pytest.mark.skipif(len(kernels.IMPLEMENTATIONS) < 2, reason="numba not installed")


def _tables(impl, V, rows, cols, c0):
    D, ptr, M = np.empty((rows, cols)), np.empty((rows, cols), np.int64), np.empty((rows, cols))
    impl["forward_rows"](V, 0, c0, 0, rows - 1, D, ptr, M)
    return D, ptr, M


@needs_both
@given(seed=st.integers(0, 10**6), G=st.integers(1, 6), n=st.integers(1, 6),
       r0=st.integers(0, 6), c=st.integers(0, 40))
def test_kernels_bit_identical(seed, G, n, r0, c):
    f = sample_field(GridSpec(G, -1, n + 1, 0, n), seed)
    V = f.values
    rows, cols, c0 = n + 1, n * G + 1, f.col(0)
    nb, npy = kernels.IMPLEMENTATIONS["numba"], kernels.IMPLEMENTATIONS["numpy"]
    A, B = _tables(nb, V, rows, cols, c0), _tables(npy, V, rows, cols, c0)
    for x, y in zip(A, B):
        assert np.array_equal(x, y)
    # perturb one row and update incrementally from (r0, c)
    r0, c = min(r0, rows - 1), min(c, cols - 1)
    V2 = V.copy()
    V2[r0, c0 + c:] += 0.3
    la = nb["update_rows"](V2, 0, c0, r0, rows - 1, c, *A)
    lb = npy["update_rows"](V2, 0, c0, r0, rows - 1, c, *B)
    assert la == lb
    for x, y, z in zip(A, B, _tables(npy, V2, rows, cols, c0)):
        assert np.array_equal(x, y) and np.array_equal(x, z)
    oa, ob = np.empty(rows + 1, np.int64), np.empty(rows + 1, np.int64)
    nb["backtrack"](A[1], rows - 1, cols - 1, oa)
    npy["backtrack"](B[1], rows - 1, cols - 1, ob)
    assert np.array_equal(oa, ob)
    win = np.ascontiguousarray(V[: min(rows, 4), c0: c0 + min(cols, 2 * G + 1)])
    assert nb["pair_dp"](win) == npy["pair_dp"](win)


def _backend_in_subprocess(value):
    env = dict(os.environ, DYNBLPP_BACKEND=value)
    return subprocess.run([sys.executable, "-c", "import dynblpp; print(dynblpp.BACKEND)"],
                          env=env, capture_output=True, text=True)


def test_env_flag_selects_numpy():
    out = _backend_in_subprocess("numpy")
    assert out.returncode == 0 and out.stdout.strip() == "numpy"


def test_env_flag_rejects_unknown():
    out = _backend_in_subprocess("fortran")
    assert out.returncode != 0 and "DYNBLPP_BACKEND" in out.stderr


def test_numpy_backend_oracle_sweep():
    env = dict(os.environ, DYNBLPP_BACKEND="numpy")
    code = ("from dynblpp.oracle import check_agreement; r = check_agreement(5, 60); "
            "print(r.instances, len(r.mismatches))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.split() == ["60", "0"], out.stderr
