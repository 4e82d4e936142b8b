import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from fitwire import assembly as asm
from fitwire.materials import MaterialField, edge_conductance, wire_mass_matrix
from fitwire.mesh import RectilinearGrid, build_gradient, dual_measures
from fitwire.wire_coupling import WireCurve, build_coupling


def _bulk(grid, sigma=None):
    sigma = np.ones(grid.n_cells) if sigma is None else sigma
    return asm.bulk_stiffness(build_gradient(grid),
                              edge_conductance(grid, dual_measures(grid), sigma))


def test_bulk_symmetric_psd_with_constant_kernel(small_grid, rng):
    K = _bulk(small_grid, rng.uniform(0.5, 3.0, small_grid.n_cells))
    assert abs(K - K.T).max() < 1e-14 * abs(K).max()
    assert np.max(np.abs(K @ np.ones(small_grid.n_nodes))) < 1e-13
    ev = np.linalg.eigvalsh(K.toarray())
    assert ev[0] > -1e-12 and ev[1] > 1e-8  # connected grid: one-dimensional kernel


def test_linear_potential_solves_homogeneous_problem(small_grid):
    # FIT reproduces fields linear in the coordinates on any rectilinear grid
    K = _bulk(small_grid)
    phi = small_grid.node_coords @ [1.0, -2.0, 0.5]
    interior = ~small_grid.boundary_mask
    np.testing.assert_allclose((K @ phi)[interior], 0.0, atol=1e-13)
    bn = np.flatnonzero(small_grid.boundary_mask)
    sysm = asm.dirichlet_reduce(K, np.zeros(small_grid.n_nodes), asm.DirichletSet(bn, phi[bn]))
    x = spla.spsolve(sysm.K.tocsc(), sysm.rhs)
    np.testing.assert_allclose(sysm.expand(x), phi, atol=1e-13)


@pytest.fixture
def wired():
    ax = np.linspace(0, 1, 9)
    g = RectilinearGrid(ax, ax, ax)
    c = WireCurve.bezier([0.5, 0.1, 0.1], [0.5, 0.1, 0.9], 0.3)
    cs = build_coupling(g, c, 7, 0.05, 1e-6, 0.5)
    return g, cs


def test_wire_stiffness_annihilates_constants(wired):
    g, cs = wired
    M = [wire_mass_matrix(cs.wire1d, 10.0)]
    Kw = asm.wire_stiffness([cs], M, g.n_nodes)
    K = _bulk(g) + Kw
    # constants are mapped to gamma * const by Pi and then killed by Ps
    assert np.max(np.abs(K @ np.ones(g.n_nodes))) < 1e-12


def test_joule_losses_conserve_power(wired, rng):
    g, cs = wired
    M = [wire_mass_matrix(cs.wire1d, 3.0)]
    pb = [rng.normal(size=cs.n1d)]
    Q, per = asm.joule_losses([cs], M, pb, g.n_nodes)
    d = np.diff(pb[0])
    np.testing.assert_allclose(per[0], 3.0 / cs.wire1d.element_arclen * d * d)
    assert Q.sum() == pytest.approx(per[0].sum(), rel=1e-13)
    Qa, _ = asm.joule_losses([cs], M, pb, g.n_nodes, spreading="abs")
    assert np.all(Qa >= 0)


def test_dirichlet_set_dedup_and_conflict():
    d = asm.DirichletSet([3, 1, 3], [2.0, 1.0, 2.0])
    np.testing.assert_array_equal(d.nodes, [1, 3])
    with pytest.raises(asm.ConstraintConflict):
        asm.DirichletSet([1, 1], [0.0, 1.0])
    u = asm.DirichletSet.union(d, asm.DirichletSet.empty())
    np.testing.assert_array_equal(u.values, [1.0, 2.0])


def test_reduction_merges_and_fixes():
    labels = np.array([0, 0, 1, 2, 2, 3])
    red = asm.build_reduction(6, asm.DirichletSet([5], [7.0]), labels)
    assert red.n_free == 3
    full = red.expand(np.array([1.0, 2.0, 3.0]))
    np.testing.assert_array_equal(full, [1, 1, 2, 3, 3, 7])
    np.testing.assert_array_equal(red.restrict(full), [1, 2, 3])
    with pytest.raises(asm.ConstraintConflict):
        asm.build_reduction(6, asm.DirichletSet([0, 1], [0.0, 1.0]), labels)
    with pytest.raises(asm.FullyConstrained):
        asm.build_reduction(2, asm.DirichletSet([0, 1], [0.0, 1.0]))


def test_pec_groups_and_labels():
    ax = np.linspace(0, 1, 5)
    g = RectilinearGrid(ax, ax, ax)
    mf = MaterialField.homogeneous(g)
    mf.assign_box(g, [0, 0, 0], [0.25, 0.25, 0.25], pec=True)
    mf.assign_box(g, [0.75, 0.75, 0.75], [1, 1, 1], pec=True)
    lab = asm.pec_groups(g, mf.pec_cells)
    assert np.unique(lab).size == g.n_nodes - 2 * 7
    # a cell touching the first box only at a corner joins its group
    mf.assign_box(g, [0.25, 0.25, 0.25], [0.5, 0.5, 0.5], pec=True)
    lab2 = asm.pec_groups(g, mf.pec_cells)
    assert lab2[0] == lab2[g.node_index(2, 2, 2)]
    c = asm.combine_labels([0, 0, 1, 2], [0, 1, 1, 2])
    assert c[0] == c[1] == c[2] != c[3]


def test_pec_reduce_gives_equipotential():
    ax = np.linspace(0, 1, 6)
    g = RectilinearGrid(ax, ax, ax)
    mf = MaterialField.homogeneous(g)
    mf.assign_box(g, [0.4, 0.4, 0.4], [0.6, 0.6, 0.6], pec=True)
    K = _bulk(g, mf.cell_sigma)
    bn = np.flatnonzero(g.boundary_mask)
    vals = g.node_coords[bn, 0]
    s = asm.pec_reduce(K, np.zeros(g.n_nodes), g, mf.pec_cells, asm.DirichletSet(bn, vals))
    phi = s.expand(spla.spsolve(s.K.tocsc(), s.rhs))
    box = g.box_node_mask([0.4, 0.4, 0.4], [0.6, 0.6, 0.6])
    assert np.ptp(phi[box]) == 0.0
    assert phi[box][0] == pytest.approx(0.5, abs=1e-12)  # symmetry


def test_robin_matrix(small_grid):
    M, r = asm.robin_matrix(dual_measures(small_grid), 25.0, 300.0)
    assert M.diagonal().sum() == pytest.approx(25.0 * 6.0)
    assert r.sum() == pytest.approx(25.0 * 6.0 * 300.0)
    with pytest.raises(asm.AssemblyError):
        asm.robin_matrix(dual_measures(small_grid), -1.0, 300.0)


def test_penalty_blocks_shape_and_kernel(wired):
    g, cs = wired
    K = _bulk(g)
    Ma = [wire_mass_matrix(cs.wire1d, 2.0)]
    Mb = [sp.diags(np.full(cs.n1d, 5.0))]
    B = asm.penalty_blocks(K, [cs], Ma, Mb)
    n = g.n_nodes + cs.n1d
    assert B.shape == (n, n)
    # u = 1, ubar = gamma: exchange term vanishes and so does every row
    x = np.concatenate([np.ones(g.n_nodes), np.full(cs.n1d, cs.gamma)])
    assert np.max(np.abs(B @ x)) < 1e-11


@pytest.mark.parametrize("exchange", ["leak", "printed"])
def test_penalty_row_combination_eliminates_exchange(wired, rng, exchange):
    # first block row + RN^T (second block row) leaves K u + RN^T Ps^T Ma Ps ubar
    g, cs = wired
    K = _bulk(g)
    Ma = [wire_mass_matrix(cs.wire1d, 2.0)]
    Mb = [sp.diags(rng.uniform(1, 9, cs.n1d))]
    B = asm.penalty_blocks(K, [cs], Ma, Mb, exchange)
    n = g.n_nodes
    x = rng.normal(size=n + cs.n1d)
    y = B @ x
    comb = y[:n] + cs.RN.T @ y[n:]
    ref = K @ x[:n] + cs.RN.T @ (cs.Ps.T @ Ma[0] @ cs.Ps @ x[n:])
    np.testing.assert_allclose(comb, ref, atol=1e-12 * np.abs(ref).max())


def test_penalty_zero_beta_decouples(wired):
    g, cs = wired
    B = asm.penalty_blocks(_bulk(g), [cs], [wire_mass_matrix(cs.wire1d, 2.0)],
                           [sp.csr_matrix((cs.n1d, cs.n1d))]).toarray()
    n = g.n_nodes
    assert np.all(B[:n, n:] == 0) and np.all(B[n:, :n] == 0)
    with pytest.raises(asm.AssemblyError):
        asm.penalty_blocks(_bulk(g), [cs], [], [], exchange="other")
