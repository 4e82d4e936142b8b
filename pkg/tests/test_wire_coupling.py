import mpmath
import numpy as np
import pytest

from fitwire.mesh import RectilinearGrid
from fitwire.wire_coupling import (
    CouplingError,
    OutOfDomainError,
    WireCurve,
    arc_lengths,
    build_coupling,
    build_Pi,
    build_Ps,
    build_RN,
    coupling_gamma,
    frenet_curvature_max,
    make_wire_grid,
    rm_frame,
)

BENT = WireCurve.bezier([0.5, 0.02, 0.02], [0.5, 0.02, 0.98], 0.7, up=(0, 1, 0))


def test_bezier_midpoint_lifted_by_height():
    np.testing.assert_allclose(BENT.point(0.5), [0.5, 0.72, 0.5])
    np.testing.assert_allclose(BENT.point([0.0, 1.0]), [BENT.x0, BENT.x1])


def test_bezier_derivatives_match_finite_differences():
    s, e = 0.3, 1e-6
    fd = (BENT.point(s + e) - BENT.point(s - e)) / (2 * e)
    np.testing.assert_allclose(BENT.deriv(s), fd, rtol=1e-8)
    fd2 = (BENT.deriv(s + e) - BENT.deriv(s - e)) / (2 * e)
    np.testing.assert_allclose(BENT.deriv2(s), fd2, rtol=1e-7, atol=1e-8)


def test_bent_wire_curvature():
    # vertex of the parabola: |x'' x x'| / |x'|^3 = 0.96 * 5.6 / 0.96^3
    assert frenet_curvature_max(BENT) == pytest.approx(5.6 / 0.96 ** 2, rel=1e-9)
    assert frenet_curvature_max(BENT) == pytest.approx(6.08, abs=5e-3)


def test_arc_lengths_against_high_precision_quadrature():
    s = np.linspace(0, 1, 5)
    el = arc_lengths(BENT, s)
    c0, c1, c2 = (mpmath.matrix(list(v)) for v in (BENT.x0, BENT.control, BENT.x1))

    def speed(t):
        d = 2 * (1 - t) * (c1 - c0) + 2 * t * (c2 - c1)
        return mpmath.sqrt(sum(v ** 2 for v in d))

    for j in range(4):
        ref = float(mpmath.quad(speed, [s[j], s[j + 1]]))
        assert el[j] == pytest.approx(ref, rel=1e-11)
    seg = WireCurve.segment([0, 0, 0], [3, 4, 0])
    np.testing.assert_allclose(arc_lengths(seg, [0, 0.5, 1]), [2.5, 2.5])


def test_wire_grid_dual_lengths():
    w = make_wire_grid(WireCurve.segment([0, 0, 0], [0, 0, 1]), 5)
    np.testing.assert_allclose(w.dual_len, [0.125, 0.25, 0.25, 0.25, 0.125])
    assert w.h_bar == 0.25
    with pytest.raises(CouplingError):
        make_wire_grid(BENT, 1)


def test_Ps():
    P = build_Ps(4).toarray()
    np.testing.assert_array_equal(P, [[-1, 1, 0, 0], [0, -1, 1, 0], [0, 0, -1, 1]])


def test_rm_frame_orthonormal_and_planar():
    s = np.linspace(0, 1, 33)
    t, n1, n2 = rm_frame(BENT, s)
    for a, b in ((t, n1), (t, n2), (n1, n2)):
        np.testing.assert_allclose(np.sum(a * b, axis=1), 0.0, atol=1e-13)
    for v in (t, n1, n2):
        np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0)
    # the curve lies in the plane x = 0.5; its binormal is +-e_x and the
    # rotation-minimizing frame keeps that direction
    np.testing.assert_allclose(np.abs(n1[:, 0]), 1.0, atol=1e-12)


def test_gamma():
    assert coupling_gamma(0.0, 1e-6, 0.5) == 1.0
    assert coupling_gamma(1e-6, 1e-6, 0.5) == pytest.approx(1.0)
    assert coupling_gamma(0.05, 1e-6, 0.5) == pytest.approx(np.log(2e-6) / np.log(0.1))
    for args in ((-1e-3, 1e-6, 0.5), (0.6, 1e-6, 0.5), (0.1, 0.0, 0.5), (0.1, 1.0, 0.5)):
        with pytest.raises(CouplingError):
            coupling_gamma(*args)


@pytest.fixture
def grid():
    ax = np.linspace(0, 1, 11)
    return RectilinearGrid(ax, ax, np.linspace(0, 1, 9))


def test_RN_interpolates_linear_fields_exactly(grid, rng):
    a = rng.normal(size=4)
    f = grid.node_coords @ a[:3] + a[3]
    s = rng.uniform(0, 1, 20)
    RN = build_RN(grid, BENT, s)
    np.testing.assert_allclose(RN @ f, BENT.point(s) @ a[:3] + a[3], rtol=1e-13)
    np.testing.assert_allclose(np.asarray(RN.sum(axis=1)).ravel(), 1.0, rtol=1e-14)


def test_RN_at_node_is_unit_row(grid):
    seg = WireCurve.segment([0.5, 0.5, 0.0], [0.5, 0.5, 1.0])
    RN = build_RN(grid, seg, [0.5])
    assert RN.nnz == 1
    assert RN[0, grid.node_index(5, 5, 4)] == 1.0


def test_Pi_of_linear_field_is_gamma_times_centre(grid):
    f = grid.node_coords @ np.array([0.3, -0.7, 0.2]) + 1.0
    s = np.linspace(0.1, 0.9, 5)
    Pi, g = build_Pi(grid, BENT, s, 0.05, 1e-6, 0.5, n_theta=8)
    np.testing.assert_allclose(Pi @ f, g * (BENT.point(s) @ [0.3, -0.7, 0.2] + 1.0), rtol=1e-12)
    np.testing.assert_allclose(np.asarray(Pi.sum(axis=1)).ravel(), g, rtol=1e-13)


def test_Pi_with_zero_radius_is_RN(grid):
    s = np.linspace(0, 1, 4)
    Pi, g = build_Pi(grid, BENT, s, 0.0, 1e-6, 0.5)
    assert g == 1.0
    assert abs(Pi - build_RN(grid, BENT, s)).max() == 0.0


def test_coupling_set_row_sums(grid):
    cs = build_coupling(grid, BENT, 9, 0.01, 1e-6, 0.5)
    np.testing.assert_allclose(np.asarray(cs.X.sum(axis=1)).ravel(), 0.0, atol=1e-14)
    np.testing.assert_allclose(np.asarray(cs.X_avg.sum(axis=1)).ravel(), 1.0, rtol=1e-14)
    assert cs.X.shape == (8, grid.n_nodes)
    np.testing.assert_allclose(cs.X_abs_half().sum(axis=1), np.abs(cs.X).sum(axis=1) / 2)


def test_outside_domain_raises(grid):
    far = WireCurve.segment([0.5, 0.5, 0.5], [0.5, 0.5, 1.5])
    with pytest.raises(OutOfDomainError):
        build_coupling(grid, far, 5, 0.05, 1e-6, 0.5)
    with pytest.raises(OutOfDomainError):
        # circle points leave the box although the axis stays inside
        build_Pi(grid, WireCurve.segment([0.01, 0.5, 0], [0.01, 0.5, 1]), [0.5], 0.05, 1e-6, 0.5)


def test_curve_validation():
    with pytest.raises(CouplingError):
        WireCurve("spline", [0, 0, 0], [1, 0, 0])
    with pytest.raises(CouplingError):
        WireCurve.segment([0, 0, 0], [0, 0, 0])
