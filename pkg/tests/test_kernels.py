import os
import subprocess
import sys

import numpy as np
import pytest

from fitwire import _kernels as K


def _axes(rng):
    return [np.sort(np.concatenate([[0.0, 1.0], rng.uniform(0, 1, n)])) for n in (7, 5, 9)]


def test_numpy_weights_partition_unity_and_reproduce_coordinates(rng):
    x, y, z = _axes(rng)
    pts = rng.uniform(0, 1, (500, 3))
    idx, w = K.trilinear_weights_numpy(x, y, z, pts)
    np.testing.assert_allclose(w.sum(axis=1), 1.0, rtol=1e-14)
    # node index is x-fastest; rebuild coordinates in that order
    nodes = np.stack(np.meshgrid(x, y, z, indexing="ij"), -1).transpose(2, 1, 0, 3).reshape(-1, 3)
    np.testing.assert_allclose(np.einsum("pk,pkd->pd", w, nodes[idx]), pts, atol=1e-14)


def test_points_on_nodes_and_upper_boundary():
    ax = np.array([0.0, 0.5, 1.0])
    idx, w = K.trilinear_weights_numpy(ax, ax, ax, [[1.0, 1.0, 1.0], [0.5, 0.0, 0.5]])
    assert w[0, idx[0] == 26].sum() == 1.0
    assert w[1, idx[1] == 1 + 9].sum() == 1.0


@pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba backend not active")
def test_numba_matches_numpy_bitwise(rng):
    x, y, z = _axes(rng)
    pts = np.concatenate([rng.uniform(0, 1, (1000, 3)),
                          np.stack(np.meshgrid(x, y, z), -1).reshape(-1, 3)])
    i1, w1 = K.trilinear_weights(x, y, z, pts)
    i2, w2 = K.trilinear_weights_numpy(x, y, z, pts)
    assert np.array_equal(i1, i2) and np.array_equal(w1, w2)


@pytest.mark.parametrize("flag,backend", [("1", "numpy"), ("0", "numba")])
def test_env_flag_selects_backend(flag, backend):
    env = {**os.environ, "FITWIRE_DISABLE_NUMBA": flag}
    out = subprocess.run([sys.executable, "-c",
                          "from fitwire import _kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True).stdout.strip()
    assert out == backend
