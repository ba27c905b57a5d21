"""Local element operators: projectors, stiffness, and load."""

import numpy as np
import pytest

from curvem import (
    Coefficient,
    ElementOperatorError,
    ScaledMonomialBasis,
    build_annulus_interface_mesh,
    build_mapped_tensor_mesh,
    compute_pi0,
    compute_pi_nabla,
    dof_count,
    edge_dof_points,
    interpolate,
    layout_dofs,
    local_load,
    local_operators,
    local_stiffness,
    n_moments,
    polygon_quadrature,
)
from curvem import test1_boundary_curves as boundary_curves
from curvem.quadrature import CurvedPolygon

from _oracles import finite_difference_gradient


def unit_square_mesh():
    return build_mapped_tensor_mesh(1)


def curved_mesh(n=2):
    return build_mapped_tensor_mesh(n, *boundary_curves())


def test_basis_dimension_and_ordering():
    basis = ScaledMonomialBasis(3, (0.0, 0.0), 1.0)
    assert basis.dim == 10
    # degree blocks, lexicographic in (a, b) within each block
    assert basis.exponents[:6] == [(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]
    vals = basis.eval(2.0, 3.0)
    assert vals[0] == 1.0
    assert vals[1] == 3.0
    assert vals[2] == 2.0
    assert vals[4] == 6.0


def test_basis_is_scaled_and_centered():
    basis = ScaledMonomialBasis(2, (1.5, -0.5), 2.0)
    vals = basis.eval(1.5, -0.5)
    assert np.allclose(vals, [1, 0, 0, 0, 0, 0], atol=0)
    # one diameter away along x: xi = 1
    assert basis.eval(3.5, -0.5)[basis.exponents.index((1, 0))] == 1.0


def test_basis_gradient_matches_finite_differences():
    basis = ScaledMonomialBasis(3, (0.3, 0.7), 0.9)
    x, y = 0.55, 0.41
    gx, gy = basis.grad(x, y)
    fx, fy = finite_difference_gradient(
        lambda p, q: basis.eval(p, q), x, y)
    assert np.allclose(gx, fx, atol=2e-9)
    assert np.allclose(gy, fy, atol=2e-9)


def test_basis_laplacian_terms():
    basis = ScaledMonomialBasis(3, (0.0, 0.0), 2.0)
    # Laplacian of (x/h)^2 (y/h) is (2/h^2)(y/h)
    idx = basis.exponents.index((2, 1))
    assert basis.laplacian_terms(idx) == [(basis.exponents.index((0, 1)), 0.5)]
    assert basis.laplacian_terms(0) == []


@pytest.mark.parametrize("k, nm", [(1, 0), (2, 1), (3, 3), (4, 6)])
def test_moment_and_dof_counts(k, nm):
    assert n_moments(k) == nm
    assert dof_count(4, k) == 4 * k + nm


def test_edge_dof_points_straight_edge():
    mesh = unit_square_mesh()
    bottom = next(e for e in range(len(mesh.edges))
                  if mesh.edges[e].segment is None
                  and mesh.vertices[mesh.edges[e].v0].position[1] == 0
                  and mesh.vertices[mesh.edges[e].v1].position[1] == 0)
    params, points = edge_dof_points(mesh, bottom, 3)
    assert len(params) == 2
    assert np.all(points[:, 1] == 0)
    assert points[0, 0] < points[1, 0]
    # k = 1 has no interior points
    params1, points1 = edge_dof_points(mesh, bottom, 1)
    assert params1.size == 0 and points1.shape[0] == 0


def test_edge_dof_points_lie_on_curve():
    mesh = curved_mesh()
    eid = next(e for e in range(len(mesh.edges)) if mesh.edges[e].is_curved)
    seg = mesh.edges[eid].segment
    params, points = edge_dof_points(mesh, eid, 3)
    assert np.all((params > min(seg.t0, seg.t1)) & (params < max(seg.t0, seg.t1)))
    assert np.allclose(points, seg.curve.eval(params), atol=0)


def test_layout_walks_boundary_then_moments():
    mesh = curved_mesh()
    k = 3
    dofs = layout_dofs(mesh, 0, k)
    n_edges = len(mesh.elements[0].edge_loop)
    assert len(dofs) == dof_count(n_edges, k)
    kinds = [d.kind for d in dofs]
    assert kinds.count("vertex") == n_edges
    assert kinds[-n_moments(k):] == ["moment"] * n_moments(k)
    # walk alternates corner, then k-1 interior points of the outgoing edge
    for piece in range(n_edges):
        assert kinds[piece * k] == "vertex"
        assert all(kd in ("edge", "curved_edge")
                   for kd in kinds[piece * k + 1: piece * k + k])


def test_shared_edge_exposes_identical_points_to_both_elements():
    mesh = build_mapped_tensor_mesh(2)
    shared = next(e for e in range(len(mesh.edges))
                  if len(mesh.edges[e].elements) == 2)
    k = 3
    seen = []
    for elem in mesh.edges[shared].elements:
        pts = [d.point for d in layout_dofs(mesh, elem, k)
               if d.kind == "edge" and d.entity == shared]
        order = [d.index for d in layout_dofs(mesh, elem, k)
                 if d.kind == "edge" and d.entity == shared]
        seen.append({i: tuple(p) for i, p in zip(order, pts)})
    assert seen[0] == seen[1]


@pytest.mark.parametrize("k", [1, 2, 3])
def test_projector_reproduces_polynomials_on_straight_element(k):
    mesh = unit_square_mesh()
    ops = local_operators(mesh, 0, k, Coefficient())
    for j, (a, b) in enumerate(ops.basis.exponents):
        u = lambda x, y: ops.basis.eval(x, y)[..., j]
        coeffs = ops.pi_nabla @ interpolate(mesh, 0, k, u)
        expect = np.zeros(ops.basis.dim)
        expect[j] = 1.0
        assert np.allclose(coeffs, expect, atol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_stiffness_is_exact_for_polynomials_on_straight_element(k):
    mesh = unit_square_mesh()
    ops = local_operators(mesh, 0, k, Coefficient())
    basis = ops.basis
    rule = polygon_quadrature(
        CurvedPolygon.from_vertices([v.position for v in
                                     (mesh.vertices[i] for i in
                                      mesh.elements[0].vertices)]), k)
    for i in range(basis.dim):
        for j in range(i, basis.dim):
            ui = interpolate(mesh, 0, k, lambda x, y: basis.eval(x, y)[..., i])
            uj = interpolate(mesh, 0, k, lambda x, y: basis.eval(x, y)[..., j])
            def grad_dot(x, y):
                gx, gy = basis.grad(x, y)
                return gx[..., i] * gx[..., j] + gy[..., i] * gy[..., j]
            assert ui @ ops.stiffness @ uj == pytest.approx(
                rule.integrate(grad_dot), abs=1e-11)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_stiffness_kernel_is_the_constant_dof_vector(k):
    # the kernel vector is the interpolant of 1: boundary values 1, moment
    # DoFs the scaled averages of the monomials.  Boundary and interior
    # quadratures are independent, so the identity holds to quadrature
    # accuracy; boost 6 puts that below 1e-10 even on the coarsest meshes.
    one = lambda x, y: np.ones(np.shape(x))
    for mesh in (curved_mesh(), build_annulus_interface_mesh(2, 8)):
        for elem in range(len(mesh.elements)):
            k_mat = local_stiffness(mesh, elem, k, boost=6)
            d_const = interpolate(mesh, elem, k, one, boost=6)
            scale = np.abs(k_mat).max()
            assert np.abs(k_mat @ d_const).max() <= 1e-10 * scale
            eigs = np.linalg.eigvalsh(k_mat)
            assert eigs[0] > -1e-12 * scale
            assert eigs[1] > 1e-6 * scale


def test_stiffness_is_exactly_symmetric_and_scales_with_kappa():
    mesh = curved_mesh()
    k_mat = local_stiffness(mesh, 0, 2)
    assert np.array_equal(k_mat, k_mat.T)
    assert np.allclose(local_stiffness(mesh, 0, 2, kappa=5.0), 5.0 * k_mat,
                       rtol=1e-15, atol=0)


def test_pi0_rows_for_k1_average_boundary_dofs():
    mesh = unit_square_mesh()
    pi0 = compute_pi0(mesh, 0, 1)
    assert pi0.shape == (1, 4)
    assert np.all(pi0 == 0.25)


def test_pi_nabla_maps_constants_to_constants():
    one = lambda x, y: np.ones(np.shape(x))
    square = unit_square_mesh()
    curved = curved_mesh()
    for k in (1, 2, 3):
        for mesh, atol, boost in ((square, 1e-13, 2), (curved, 1e-11, 6)):
            pi = compute_pi_nabla(mesh, 0, k, boost=boost)
            coeffs = pi @ interpolate(mesh, 0, k, one, boost=boost)
            expect = np.zeros(pi.shape[0])
            expect[0] = 1.0
            assert np.allclose(coeffs, expect, atol=atol)


def test_constant_source_loads():
    mesh = unit_square_mesh()
    one = lambda x, y: np.ones(np.shape(x))
    area = mesh.elements[0].area
    # k = 1 pairs f with the boundary-average of the test function
    assert np.allclose(local_load(mesh, 0, 1, one), area / 4, atol=1e-14)
    # k >= 2 pairs f with interior moments; the projection residual of a
    # P_{k-2} source vanishes, leaving only the moment DoF entry
    load = local_load(mesh, 0, 2, one)
    expect = np.zeros(dof_count(4, 2))
    expect[-1] = area
    assert np.allclose(load, expect, atol=1e-13)


@pytest.mark.parametrize("k", [2, 3])
def test_load_paired_with_constant_gives_element_integral(k):
    mesh = curved_mesh()
    f = lambda x, y: 2.0 - 3.0 * x + 0.5 * y
    load = local_load(mesh, 0, k, f)
    ops = local_operators(mesh, 0, k, Coefficient(source=f))
    assert np.allclose(load, ops.load, atol=0)
    # pairing with the DoF vector of 1 recovers the element integral of f:
    # the projection residual of f is orthogonal to constants
    from curvem import curved_polygon_quadrature
    from curvem.mesh import curved_polygon
    one = lambda x, y: np.ones(np.shape(x))
    rule = curved_polygon_quadrature(curved_polygon(mesh, 0), k + 2, 4)
    assert load @ interpolate(mesh, 0, k, one) == pytest.approx(
        rule.integrate(f), rel=5e-10)


def test_coefficient_validates_diffusion_and_source():
    coeff = Coefficient(diffusion={1: 2.0, 2: 5.0})
    assert coeff.kappa(2) == 5.0
    with pytest.raises(ElementOperatorError, match="no diffusion"):
        coeff.kappa(3)
    with pytest.raises(ElementOperatorError, match="positive"):
        Coefficient(diffusion=-1.0).kappa(1)
    with pytest.raises(ElementOperatorError, match="no source"):
        Coefficient(source={1: lambda x, y: x}).source_for(2)
    default = Coefficient().source_for(7)
    assert np.all(default(np.zeros(3), np.zeros(3)) == 0)


def test_interpolate_reproduces_point_and_moment_dofs():
    mesh = curved_mesh()
    k = 2
    u = lambda x, y: x + 2 * y
    dofs = interpolate(mesh, 0, k, u)
    layout = layout_dofs(mesh, 0, k)
    for d, val in zip(layout, dofs):
        if d.point is not None:
            assert val == pytest.approx(u(*d.point), abs=1e-15)
    # the projected interpolant approximates the function well even on a
    # curved element, where affine functions are not in the local space
    ops = local_operators(mesh, 0, k, Coefficient())
    coeffs = ops.pi_nabla @ dofs
    x, y = mesh.elements[0].centroid
    assert ops.basis.eval(x, y) @ coeffs == pytest.approx(u(x, y), abs=5e-3)
