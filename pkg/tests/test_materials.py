import numpy as np
import pytest

from fitwire.materials import (
    MaterialError,
    MaterialField,
    WireMaterial,
    edge_conductance,
    node_capacitance,
    wire_beta_matrix,
    wire_mass_matrix,
)
from fitwire.mesh import RectilinearGrid, dual_measures
from fitwire.wire_coupling import WireCurve, make_wire_grid


def test_homogeneous_conductance_is_sigma_area_over_length(small_grid):
    dm = dual_measures(small_grid)
    mf = MaterialField.homogeneous(small_grid, sigma=2.5)
    G = edge_conductance(small_grid, dm, mf.cell_sigma)
    np.testing.assert_allclose(G, 2.5 * dm.dual_facet_area / dm.primal_edge_len, rtol=1e-14)


def test_conductance_area_weighted_by_hand():
    # 1 x 1 x 2 cells of sizes 1 x 2 x (1, 3); sigma 1 below, 5 above
    g = RectilinearGrid([0, 1], [0, 2], [0, 1, 4])
    dm = dual_measures(g)
    G = edge_conductance(g, dm, [1.0, 5.0])
    # x-edge at y=0, z=1 touches both cells, quarter areas 1*0.5 and 1*1.5
    # x-edges run over (z, y) with one edge per row: (j=0, k=1) is edge 2
    assert G[2] == pytest.approx((1.0 * 1.0 * 0.5 + 5.0 * 1.0 * 1.5) / 1.0)
    assert G[4] == pytest.approx(5.0 * 1.0 * 1.5)
    # z-edge lower cell only: quarter area 0.5 * 1, length 1
    z0 = g.edge_counts[0] + g.edge_counts[1]
    assert G[z0] == pytest.approx(0.5)


def test_capacitance(small_grid):
    dm = dual_measures(small_grid)
    C = node_capacitance(small_grid, dm, np.full(small_grid.n_cells, 3.0))
    np.testing.assert_allclose(C, 3.0 * dm.dual_volume, rtol=1e-14)
    rc = np.random.default_rng(0).uniform(1, 2, small_grid.n_cells)
    vol = np.prod(np.meshgrid(*[np.diff(a) for a in small_grid.axes[::-1]],
                              indexing="ij"), axis=0).ravel()
    assert node_capacitance(small_grid, dm, rc).sum() == pytest.approx(np.sum(rc * vol))


def test_wire_matrices():
    w = make_wire_grid(WireCurve.segment([0, 0, 0], [0, 0, 2]), 5)
    np.testing.assert_allclose(wire_mass_matrix(w, 3.0).diagonal(), 3.0 / 0.5)
    np.testing.assert_allclose(wire_beta_matrix(w, 2.0).diagonal(), 2.0 * w.dual_len)
    with pytest.raises(MaterialError):
        wire_beta_matrix(w, -1.0)
    m = WireMaterial.uniform(5, 7.0)
    assert m.sigma_bar.shape == (4,) and m.beta_bar.shape == (5,)


def test_validation_and_boxes(small_grid):
    with pytest.raises(MaterialError):
        MaterialField.homogeneous(small_grid, sigma=-1.0)
    with pytest.raises(MaterialError):
        edge_conductance(small_grid, dual_measures(small_grid), [1.0, 2.0])
    mf = MaterialField.homogeneous(small_grid)
    m = mf.assign_box(small_grid, [0, 0, 0], [0.5, 0.25, 0.1], sigma=4.0, pec=True)
    assert m.sum() == 2
    assert np.all(mf.cell_sigma[m] == 4.0) and np.all(mf.pec_cells == m)
