"""Local virtual element operators on polygons with curved sides.

For local degree k the element space has degree-k polynomial traces on
straight edges, degree-k polynomial-in-parameter traces on curved edges,
and Laplacian in P_{k-2}.  Its functions are known only through degrees of
freedom: vertex values, values at the k-1 interior Gauss-Lobatto points of
each edge (placed in the curve parameter on curved edges), and scaled
interior moments against the monomials of degree <= k-2.

Polynomials are generally *not* contained in the local space on curved
elements, so all consistency runs through projections onto P_k computed
from the DoFs alone: the H1-seminorm projector (pinned by the boundary
average), and the L2 projector available from the interior moments.  The
local stiffness is the projected bilinear form plus a dofi-dofi
stabilization of the projection complement; the local load pairs the
source with the L2 projection of the test function.

Boundary integrals against monomials are exact Gauss-Lobatto sums on
straight edges; on curved edges the trace is the Lagrange interpolant of
the DoF values in the curve parameter, integrated with a boosted
Gauss-Legendre rule.  Interior integrals use the Green-rule quadrature of
:mod:`curvem.quadrature`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .mesh import Mesh, curved_polygon
from .quadrature import (curved_polygon_quadrature, gauss_legendre, gauss_lobatto,
                         lagrange_values)


class ElementOperatorError(Exception):
    """Raised when a local projector system is singular or ill-conditioned."""


_COND_LIMIT = 1e13


class ScaledMonomialBasis:
    """Monomials ((x-xc)/h)^a ((y-yc)/h)^b, ordered by degree then lexicographically.

    Centered at the element's chord centroid and scaled by its diameter, so
    every basis function is bounded by about 1 on the element.
    """

    def __init__(self, degree: int, center, h: float):
        self.degree = degree
        self.center = np.asarray(center, dtype=float)
        self.h = float(h)
        self.exponents = [(a, d - a) for d in range(degree + 1) for a in range(d + 1)]
        self._index = {e: i for i, e in enumerate(self.exponents)}

    @property
    def dim(self) -> int:
        return len(self.exponents)

    def _powers(self, t, n):
        out = np.ones(np.shape(t) + (n + 1,))
        for a in range(1, n + 1):
            out[..., a] = out[..., a - 1] * t
        return out

    def eval(self, x, y) -> np.ndarray:
        """Values, shape (..., dim)."""
        xi = (np.asarray(x, float) - self.center[0]) / self.h
        eta = (np.asarray(y, float) - self.center[1]) / self.h
        xp = self._powers(xi, self.degree)
        yp = self._powers(eta, self.degree)
        return np.stack([xp[..., a] * yp[..., b] for a, b in self.exponents], axis=-1)

    def grad(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        """Partial derivatives, two arrays of shape (..., dim)."""
        xi = (np.asarray(x, float) - self.center[0]) / self.h
        eta = (np.asarray(y, float) - self.center[1]) / self.h
        xp = self._powers(xi, self.degree)
        yp = self._powers(eta, self.degree)
        zero = np.zeros(np.shape(xi))
        gx = np.stack([a / self.h * xp[..., a - 1] * yp[..., b] if a else zero
                       for a, b in self.exponents], axis=-1)
        gy = np.stack([b / self.h * xp[..., a] * yp[..., b - 1] if b else zero
                       for a, b in self.exponents], axis=-1)
        return gx, gy

    def laplacian_terms(self, index: int) -> list[tuple[int, float]]:
        """Expansion of the Laplacian of basis member ``index`` in the basis."""
        a, b = self.exponents[index]
        h2 = self.h * self.h
        terms = []
        if a >= 2:
            terms.append((self._index[a - 2, b], a * (a - 1) / h2))
        if b >= 2:
            terms.append((self._index[a, b - 2], b * (b - 1) / h2))
        return terms


@dataclass(frozen=True)
class DofDescriptor:
    """One degree of freedom: kind, owning entity, index within it.

    Kinds are "vertex", "edge" (interior Gauss-Lobatto point of a straight
    edge), "curved_edge" (image of an interior Gauss-Lobatto parameter
    under the edge's curve) and "moment".  ``index`` counts interior edge
    points in the edge's canonical v0 -> v1 direction, or the monomial for
    moments.  Point DoFs carry their evaluation point.
    """

    kind: str
    entity: int
    index: int
    point: np.ndarray | None = None


def n_moments(k: int) -> int:
    return k * (k - 1) // 2


def dof_count(n_edges: int, k: int) -> int:
    """DoFs of one element with n_edges sides."""
    return n_edges * k + n_moments(k)


def edge_dof_points(mesh: Mesh, edge_id: int, k: int):
    """Interior edge DoF locations in canonical v0 -> v1 order.

    Returns (params, points): params are curve parameters for curved edges
    and reference coordinates in (-1, 1) for straight ones.
    """
    edge = mesh.edges[edge_id]
    nodes = gauss_lobatto(k + 1).nodes[1:-1] if k > 1 else np.empty(0)
    if edge.segment is None:
        p0 = mesh.vertices[edge.v0].position
        p1 = mesh.vertices[edge.v1].position
        points = p0[None, :] + 0.5 * (nodes[:, None] + 1.0) * (p1 - p0)[None, :]
        return nodes, points
    seg = edge.segment
    t = 0.5 * (seg.t0 + seg.t1) + 0.5 * (seg.t1 - seg.t0) * nodes
    return t, seg.curve.eval(t).reshape(-1, 2)


def layout_dofs(mesh: Mesh, element_id: int, k: int) -> list[DofDescriptor]:
    """Element DoFs in local order: boundary walk, then interior moments.

    The boundary walk visits each corner followed by the interior points of
    the outgoing edge in traversal order; shared edges expose the same
    canonical indices to both elements.
    """
    element = mesh.elements[element_id]
    dofs = []
    for (eid, sign), vid in zip(element.edge_loop, element.vertices):
        edge = mesh.edges[eid]
        dofs.append(DofDescriptor("vertex", vid, 0, mesh.vertices[vid].position))
        _, points = edge_dof_points(mesh, eid, k)
        kind = "curved_edge" if edge.is_curved else "edge"
        order = range(k - 1) if sign > 0 else range(k - 2, -1, -1)
        for j in order:
            dofs.append(DofDescriptor(kind, eid, j, points[j]))
    for beta in range(n_moments(k)):
        dofs.append(DofDescriptor("moment", element_id, beta))
    return dofs


@dataclass(frozen=True)
class Coefficient:
    """Problem data: piecewise-constant diffusion and source by element label.

    ``diffusion`` is a single positive number or a mapping label -> kappa;
    ``source`` is a vectorized callable f(x, y) or a mapping label -> callable
    for data with subdomain-dependent smooth branches.
    """

    diffusion: Mapping[int, float] | float = 1.0
    source: Callable | Mapping[int, Callable] | None = None

    def kappa(self, label: int) -> float:
        if isinstance(self.diffusion, Mapping):
            try:
                value = float(self.diffusion[label])
            except KeyError:
                raise ElementOperatorError(f"no diffusion value for label {label}") from None
        else:
            value = float(self.diffusion)
        if not value > 0.0:
            raise ElementOperatorError(f"diffusion must be positive, got {value}")
        return value

    def source_for(self, label: int):
        if self.source is None:
            return lambda x, y: np.zeros(np.shape(x))
        if isinstance(self.source, Mapping):
            try:
                return self.source[label]
            except KeyError:
                raise ElementOperatorError(f"no source for label {label}") from None
        return self.source


@dataclass
class LocalOperators:
    """Everything assembly and postprocessing need from one element."""

    element: int
    k: int
    basis: ScaledMonomialBasis
    dofs: list[DofDescriptor]
    pi_nabla: np.ndarray
    pi0: np.ndarray
    stiffness: np.ndarray
    load: np.ndarray


class _ElementContext:
    """Shared geometric and projection data for one element."""

    def __init__(self, mesh: Mesh, element_id: int, k: int, boost: int):
        self.mesh = mesh
        self.element_id = element_id
        self.k = k
        self.boost = boost
        element = mesh.elements[element_id]
        self.element = element
        self.basis = ScaledMonomialBasis(k, element.centroid, element.diameter)
        self.poly = curved_polygon(mesh, element_id)
        self.dofs = layout_dofs(mesh, element_id, k)
        self.n_bnd = len(element.edge_loop) * k
        self.n_dof = len(self.dofs)
        self.area = element.area
        self.perimeter = sum(mesh.edges[eid].length for eid, _ in element.edge_loop)

        rule = curved_polygon_quadrature(self.poly, k, boost)
        gx, gy = self.basis.grad(rule.points[:, 0], rule.points[:, 1])
        w = rule.weights
        self.g_tilde = gx.T @ (gx * w[:, None]) + gy.T @ (gy * w[:, None])
        nm = n_moments(k)
        if nm:
            vals = self.basis.eval(rule.points[:, 0], rule.points[:, 1])
            self.mass_rect = vals[:, :nm].T @ (vals * w[:, None])
        else:
            self.mass_rect = np.empty((0, self.basis.dim))

        self._boundary_terms()
        self._projectors()

    def _boundary_terms(self):
        """Flux matrix, boundary averages of DoFs and of monomials."""
        mesh, k, basis = self.mesh, self.k, self.basis
        nk = basis.dim
        self.b_flux = np.zeros((nk, self.n_dof))
        self.bavg = np.zeros(self.n_dof)
        self.mavg = np.zeros(nk)
        lobatto = gauss_lobatto(k + 1)
        legendre = gauss_legendre(k + 1 + self.boost)
        for piece, (eid, sign) in enumerate(self.element.edge_loop):
            edge = mesh.edges[eid]
            slots = [piece * k] + list(range(piece * k + 1, piece * k + k)) \
                + [(piece + 1) * k % self.n_bnd]
            a, b = mesh.traversal_endpoints(eid, sign)
            pa = mesh.vertices[a].position
            pb = mesh.vertices[b].position
            if edge.segment is None:
                pts = pa[None, :] + 0.5 * (lobatto.nodes[:, None] + 1.0) * (pb - pa)[None, :]
                length = edge.length
                w = 0.5 * length * lobatto.weights
                d = (pb - pa) / length
                normal = np.array([d[1], -d[0]])
                gx, gy = basis.grad(pts[:, 0], pts[:, 1])
                flux = gx * normal[0] + gy * normal[1]
                for row, slot in enumerate(slots):
                    self.b_flux[:, slot] += w[row] * flux[row]
                    self.bavg[slot] += w[row]
                self.mavg += w @ basis.eval(pts[:, 0], pts[:, 1])
            else:
                seg = edge.segment
                half = 0.5 * (seg.t1 - seg.t0)
                t_dof = 0.5 * (seg.t0 + seg.t1) + half * lobatto.nodes
                if sign < 0:
                    t_dof = t_dof[::-1]
                tq = 0.5 * (seg.t0 + seg.t1) + half * legendre.nodes
                wq = half * legendre.weights
                trace = lagrange_values(t_dof, tq)
                gamma = seg.curve.eval(tq)
                dgamma = seg.curve.eval_derivative(tq)
                gx, gy = basis.grad(gamma[:, 0], gamma[:, 1])
                flux = sign * (gx * dgamma[:, 1][:, None] - gy * dgamma[:, 0][:, None])
                speed = np.hypot(dgamma[:, 0], dgamma[:, 1])
                for col, slot in enumerate(slots):
                    self.b_flux[:, slot] += (wq * trace[:, col]) @ flux
                    self.bavg[slot] += float((wq * speed) @ trace[:, col])
                self.mavg += (wq * speed) @ basis.eval(gamma[:, 0], gamma[:, 1])

    def _projectors(self):
        basis, k = self.basis, self.k
        nk = basis.dim
        nm = n_moments(k)

        b_mat = self.b_flux.copy()
        for alpha in range(nk):
            for beta, coeff in basis.laplacian_terms(alpha):
                b_mat[alpha, self.n_bnd + beta] -= coeff * self.area
        b_mat[0, :] = self.bavg / self.perimeter

        g_mat = self.g_tilde.copy()
        g_mat[0, :] = self.mavg / self.perimeter

        cond = np.linalg.cond(g_mat)
        if not np.isfinite(cond) or cond > _COND_LIMIT:
            raise ElementOperatorError(
                f"element {self.element_id}: H1 projector system has condition "
                f"{cond:.3e}")
        self.pi_nabla = np.linalg.solve(g_mat, b_mat)

        point_rows = np.array([d.point for d in self.dofs[:self.n_bnd]])
        d_mat = np.empty((self.n_dof, nk))
        d_mat[:self.n_bnd] = basis.eval(point_rows[:, 0], point_rows[:, 1])
        if nm:
            d_mat[self.n_bnd:] = self.mass_rect / self.area
        self.d_mat = d_mat

        if nm:
            h_mat = self.mass_rect[:, :nm]
            cond = np.linalg.cond(h_mat)
            if not np.isfinite(cond) or cond > _COND_LIMIT:
                raise ElementOperatorError(
                    f"element {self.element_id}: moment mass matrix has condition "
                    f"{cond:.3e}")
            self.pi0 = np.zeros((nm, self.n_dof))
            self.pi0[:, self.n_bnd:] = self.area * np.linalg.inv(h_mat)
        else:
            # degree 1: the only computable constant projection is the
            # average of the boundary DoFs
            self.pi0 = np.full((1, self.n_dof), 1.0 / self.n_dof)

    def stiffness(self, kappa: float) -> np.ndarray:
        consistency = self.pi_nabla.T @ self.g_tilde @ self.pi_nabla
        residual = np.eye(self.n_dof) - self.d_mat @ self.pi_nabla
        k_mat = kappa * (consistency + residual.T @ residual)
        return 0.5 * (k_mat + k_mat.T)

    def _source_moments(self, f, degree: int) -> np.ndarray:
        rule_k = (degree + 3) // 2
        rule = curved_polygon_quadrature(self.poly, rule_k, self.boost)
        fvals = np.asarray(f(rule.points[:, 0], rule.points[:, 1]), dtype=float)
        vals = self.basis.eval(rule.points[:, 0], rule.points[:, 1])
        return (rule.weights * fvals) @ vals

    def load(self, f, degree: int | None = None) -> np.ndarray:
        """Load vector for (f, v).

        The leading term pairs the projection of f onto P_{k-2} with the
        exact interior moments of v (the boundary average of v for k = 1).
        That term alone caps the L2 rate of the lowest orders, so the
        projection residual of f is paired with the H1 projection of v as
        a correction.  The correction vanishes whenever f lies in P_{k-2},
        keeping polynomial solutions with polynomial sources reproduced to
        solver precision.
        """
        degree = 2 * self.k + 2 if degree is None else degree
        moments = self._source_moments(f, degree)
        nm = max(n_moments(self.k), 1)
        lead = self.pi0.T @ moments[:nm]
        if self.k == 1:
            return lead
        coeff = np.linalg.solve(self.mass_rect[:, :nm], moments[:nm])
        residual = moments - self.mass_rect.T @ coeff
        return lead + self.pi_nabla.T @ residual


def compute_pi_nabla(mesh: Mesh, element_id: int, k: int, boost: int = 2) -> np.ndarray:
    """Coefficients of the H1 projector, shape (dim P_k, n_dof).

    Column i expands the projection of the i-th canonical basis function in
    the element's scaled monomials; the projection is pinned by matching
    the boundary average.
    """
    return _ElementContext(mesh, element_id, k, boost).pi_nabla


def compute_pi0(mesh: Mesh, element_id: int, k: int, boost: int = 2) -> np.ndarray:
    """Coefficients of the L2 projector onto P_{k-2} from interior moments.

    For k = 1 this degenerates to the single row averaging the boundary
    DoFs, the constant pairing used by the load.
    """
    return _ElementContext(mesh, element_id, k, boost).pi0


def local_stiffness(mesh: Mesh, element_id: int, k: int, kappa: float = 1.0,
                    boost: int = 2) -> np.ndarray:
    """Symmetric local stiffness: projected form plus dofi-dofi stabilization.

    Its kernel contains the DoF vector of the constant function.
    """
    return _ElementContext(mesh, element_id, k, boost).stiffness(kappa)


def local_load(mesh: Mesh, element_id: int, k: int, f, degree: int | None = None,
               boost: int = 2) -> np.ndarray:
    """Local load vector; the source is integrated with a rule exact to
    ``degree`` (default 2k+2) on straight sides."""
    return _ElementContext(mesh, element_id, k, boost).load(f, degree)


def local_operators(mesh: Mesh, element_id: int, k: int, coeff: Coefficient,
                    boost: int = 2, load_degree: int | None = None) -> LocalOperators:
    """Build all local operators of one element in a single pass."""
    ctx = _ElementContext(mesh, element_id, k, boost)
    label = mesh.elements[element_id].label
    return LocalOperators(
        element=element_id, k=k, basis=ctx.basis, dofs=ctx.dofs,
        pi_nabla=ctx.pi_nabla, pi0=ctx.pi0,
        stiffness=ctx.stiffness(coeff.kappa(label)),
        load=ctx.load(coeff.source_for(label), load_degree))


def interpolate(mesh: Mesh, element_id: int, k: int, u, boost: int = 2) -> np.ndarray:
    """DoF vector of a smooth function: point values plus scaled moments."""
    ctx = _ElementContext(mesh, element_id, k, boost)
    out = np.empty(ctx.n_dof)
    pts = np.array([d.point for d in ctx.dofs[:ctx.n_bnd]])
    out[:ctx.n_bnd] = u(pts[:, 0], pts[:, 1])
    nm = n_moments(k)
    if nm:
        rule = curved_polygon_quadrature(ctx.poly, k + 2, boost)
        uvals = np.asarray(u(rule.points[:, 0], rule.points[:, 1]), dtype=float)
        vals = ctx.basis.eval(rule.points[:, 0], rule.points[:, 1])[:, :nm]
        out[ctx.n_bnd:] = ((rule.weights * uvals) @ vals) / ctx.area
    return out
