import numpy as np
import pytest

from fitwire.mesh import (
    GridError,
    RectilinearGrid,
    build_global_graded,
    build_gradient,
    check_axis,
    dual_measures,
    grade_layers,
    graded_axis,
    merge_points,
    refine_axis_local,
)


def test_node_index_is_x_fastest(small_grid):
    g = small_grid
    assert g.shape == (4, 3, 5)
    assert g.node_index(1, 0, 0) == 1
    assert g.node_index(0, 1, 0) == 4
    assert g.node_index(0, 0, 1) == 12
    i, j, k = g.node_ijk(np.arange(g.n_nodes))
    np.testing.assert_array_equal(g.node_index(i, j, k), np.arange(g.n_nodes))
    np.testing.assert_array_equal(g.node_coords[g.node_index(2, 1, 3)], [0.5, 0.25, 0.8])


def test_counts(small_grid):
    g = small_grid
    assert g.edge_counts == (3 * 3 * 5, 4 * 2 * 5, 4 * 3 * 4)
    assert g.n_cells == 3 * 2 * 4
    # Euler characteristic of a solid box: V - E + F - C = 1
    assert g.n_nodes - g.n_edges + g.n_facets - g.n_cells == 1


def test_gradient_incidence(small_grid):
    G = build_gradient(small_grid)
    assert G.shape == (small_grid.n_edges, small_grid.n_nodes)
    np.testing.assert_array_equal(G @ np.ones(small_grid.n_nodes), 0.0)
    # G applied to the coordinate field gives signed edge lengths along its axis
    x = small_grid.node_coords[:, 0]
    sl = small_grid.edge_direction_slices()
    np.testing.assert_allclose((G @ x)[sl[0]], small_grid.edge_lengths[sl[0]])
    np.testing.assert_array_equal((G @ x)[sl[1]], 0.0)
    row = G.getrow(0).toarray().ravel()
    assert row[0] == -1.0 and row[1] == 1.0


def test_gradient_laplacian_degrees(small_grid):
    L = (build_gradient(small_grid).T @ build_gradient(small_grid)).diagonal()
    assert L[0] == 3  # corner node
    i, j, k = small_grid.node_ijk(np.arange(small_grid.n_nodes))
    interior = (i > 0) & (i < 3) & (j == 1) & (k > 0) & (k < 4)
    assert np.all(L[interior] == 6)


def test_dual_measures_tile_the_box(small_grid):
    dm = dual_measures(small_grid)
    assert dm.dual_volume.sum() == pytest.approx(1.0, rel=1e-14)
    # sum of facet area times edge length over one direction is the volume
    for s in small_grid.edge_direction_slices():
        assert np.sum(dm.dual_facet_area[s] * dm.primal_edge_len[s]) == pytest.approx(1.0)
    assert dm.boundary_dual_area.sum() == pytest.approx(6.0)
    assert np.all(dm.boundary_dual_area[~small_grid.boundary_mask] == 0.0)


def test_grade_layers_formula():
    r = grade_layers(2.0, 4, 0.5)
    np.testing.assert_allclose(r, 2.0 * (np.arange(5) / 4) ** 2)
    np.testing.assert_allclose(grade_layers(1.0, 4, 1.0), [0, 0.25, 0.5, 0.75, 1.0])
    for mu in (0.0, -0.5, 1.5):
        with pytest.raises(GridError):
            grade_layers(1.0, 4, mu)


def test_graded_axis_symmetric_and_offcentre():
    a = graded_axis(0.0, 1.0, 0.5, 4, 0.5)
    assert a.size == 9
    np.testing.assert_allclose(a + a[::-1], 1.0, atol=1e-15)
    np.testing.assert_allclose(a[5] - 0.5, 0.5 / 16)
    b = graded_axis(0.0, 1.0, 0.2, 3, 1.0)
    np.testing.assert_allclose(b, [0, 0.2 / 3, 0.4 / 3, 0.2, 0.2 + 0.8 / 3, 0.2 + 1.6 / 3, 1.0])
    with pytest.raises(GridError):
        graded_axis(0.0, 1.0, 1.0, 3, 0.5)


def test_global_grid_axes():
    g = build_global_graded([0, 0, 0], [1, 1, 2], [0.5, 0.5, 1.0], 0.5, 3, graded_axes=(0, 1))
    np.testing.assert_allclose(g.axes[2], np.linspace(0, 2, 7))
    assert g.axes[0].size == 7


def test_refine_axis_local():
    a = np.linspace(0.0, 1.0, 5)
    r = refine_axis_local(a, 0.5, 0.25, 2, 1.0)
    np.testing.assert_allclose(r, [0, 0.25, 0.375, 0.5, 0.625, 0.75, 1.0])
    with pytest.raises(GridError, match="not an axis point"):
        refine_axis_local(a, 0.4, 0.1, 2, 1.0)
    with pytest.raises(GridError, match="already contains"):
        refine_axis_local(a, 0.5, 0.3, 2, 1.0)


def test_merge_points_keeps_existing():
    a = merge_points([0.0, 1.0], [0.5, 1.0 + 1e-14, 0.5 + 1e-15])
    np.testing.assert_array_equal(a, [0.0, 0.5, 1.0])


def test_check_axis_rejects_bad_input():
    for bad in ([0.0], [0.0, 0.0, 1.0], [1.0, 0.0], [0.0, np.nan]):
        with pytest.raises(GridError):
            check_axis(bad)


def test_boxes_and_cells(small_grid):
    m = small_grid.box_node_mask([0, 0, 0], [0.5, 0.25, 0.1])
    assert m.sum() == 3 * 2 * 2
    c = small_grid.box_cell_mask([0, 0, 0], [0.5, 0.25, 0.1])
    assert c.sum() == 2
    cn = small_grid.cell_nodes([0])
    np.testing.assert_array_equal(cn[0], [0, 1, 4, 5, 12, 13, 16, 17])


def test_mean_edge_length_uniform():
    ax = np.linspace(0, 1, 11)
    g = RectilinearGrid(ax, ax, ax)
    assert g.mean_edge_length() == pytest.approx(0.1)
    assert g.mean_edge_length((0, 1)) == pytest.approx(0.1)


def test_dump_round_trip(small_grid):
    lines = small_grid.dump().splitlines()
    axes = [np.array([float(v) for v in ln.split()[1:]]) for ln in lines]
    for a, b in zip(axes, small_grid.axes):
        np.testing.assert_array_equal(a, b)
