"""Global assembly, Dirichlet elimination and linear solvers.

Global DoF numbering is blockwise: vertex values first, then k-1 interior
DoFs per edge (in each edge's canonical direction, so neighbouring elements
agree), then the interior moments element by element.  The stiffness matrix
is accumulated as sorted triplets of its lower triangle and mirrored, which
makes the assembled matrix exactly symmetric and the assembly independent
of element order; the reduction is deterministic, so repeated runs produce
bit-identical systems.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .mesh import Mesh
from .vem import Coefficient, LocalOperators, edge_dof_points, local_operators, n_moments

_DENSE_LIMIT = 2000


class SolverError(Exception):
    """Raised for non-convergence or unsupported solver requests."""


class NotSPDError(SolverError):
    """Raised when a supposedly SPD matrix exposes non-positive curvature."""


@dataclass
class DofMap:
    """Global numbering: vertices, edge interiors, element moments."""

    k: int
    n_vertices: int
    n_edges: int
    n_elements: int
    boundary_dofs: np.ndarray
    boundary_points: np.ndarray

    @property
    def total(self) -> int:
        return (self.n_vertices + self.n_edges * (self.k - 1)
                + self.n_elements * n_moments(self.k))

    def vertex_dof(self, v: int) -> int:
        return v

    def edge_dof(self, e: int, j: int) -> int:
        return self.n_vertices + e * (self.k - 1) + j

    def moment_dof(self, p: int, beta: int) -> int:
        return (self.n_vertices + self.n_edges * (self.k - 1)
                + p * n_moments(self.k) + beta)

    def element_dofs(self, ops: LocalOperators) -> np.ndarray:
        """Global indices matching the local DoF layout."""
        out = np.empty(len(ops.dofs), dtype=np.int64)
        for i, d in enumerate(ops.dofs):
            if d.kind == "vertex":
                out[i] = d.entity
            elif d.kind == "moment":
                out[i] = self.moment_dof(ops.element, d.index)
            else:
                out[i] = self.edge_dof(d.entity, d.index)
        return out


def build_dof_map(mesh: Mesh, k: int) -> DofMap:
    """Number the DoFs of the degree-k space and locate the boundary ones."""
    bdofs = []
    bpoints = []
    nv = len(mesh.vertices)
    for v, vertex in enumerate(mesh.vertices):
        if vertex.on_boundary:
            bdofs.append(v)
            bpoints.append(vertex.position)
    for e, edge in enumerate(mesh.edges):
        if edge.on_boundary and k > 1:
            _, points = edge_dof_points(mesh, e, k)
            for j in range(k - 1):
                bdofs.append(nv + e * (k - 1) + j)
                bpoints.append(points[j])
    return DofMap(
        k=k, n_vertices=nv, n_edges=len(mesh.edges), n_elements=len(mesh.elements),
        boundary_dofs=np.array(bdofs, dtype=np.int64),
        boundary_points=np.array(bpoints).reshape(-1, 2))


@dataclass
class LinearSystem:
    """Assembled global system plus the Dirichlet elimination record."""

    matrix: sparse.csr_matrix
    rhs: np.ndarray
    dof_map: DofMap
    local_operators: list[LocalOperators] = field(repr=False)
    boundary_values: np.ndarray | None = None
    interior: np.ndarray | None = None
    reduced_matrix: sparse.csr_matrix | None = None
    reduced_rhs: np.ndarray | None = None


def assemble(mesh: Mesh, k: int, coeff: Coefficient, boost: int = 2,
             load_degree: int | None = None) -> LinearSystem:
    """Assemble stiffness and load of the degree-k discretization."""
    dof_map = build_dof_map(mesh, k)
    total = dof_map.total
    rhs = np.zeros(total)
    ops_list = []
    rows, cols, vals = [], [], []
    for p in range(len(mesh.elements)):
        ops = local_operators(mesh, p, k, coeff, boost=boost, load_degree=load_degree)
        ops_list.append(ops)
        gdofs = dof_map.element_dofs(ops)
        rhs[gdofs] += ops.load
        gi = np.broadcast_to(gdofs[:, None], ops.stiffness.shape)
        gj = np.broadcast_to(gdofs[None, :], ops.stiffness.shape)
        lower = gi >= gj
        rows.append(gi[lower])
        cols.append(gj[lower])
        vals.append(ops.stiffness[lower])

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    boundary = np.nonzero((rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1]))[0] + 1
    starts = np.concatenate([[0], boundary])
    summed = np.add.reduceat(vals, starts)
    lower = sparse.csr_matrix((summed, (rows[starts], cols[starts])),
                              shape=(total, total))
    matrix = (lower + lower.T - sparse.diags(lower.diagonal())).tocsr()
    return LinearSystem(matrix=matrix, rhs=rhs, dof_map=dof_map,
                        local_operators=ops_list)


def apply_dirichlet(system: LinearSystem, g) -> None:
    """Eliminate boundary DoFs symmetrically against boundary data g(x, y).

    Keeps the boundary values on the system so ``solve`` can reconstruct
    the full DoF vector.
    """
    dof_map = system.dof_map
    values = np.zeros(dof_map.total)
    pts = dof_map.boundary_points
    if len(pts):
        values[dof_map.boundary_dofs] = g(pts[:, 0], pts[:, 1])
    mask = np.ones(dof_map.total, dtype=bool)
    mask[dof_map.boundary_dofs] = False
    interior = np.nonzero(mask)[0]
    a_ib = system.matrix[interior][:, dof_map.boundary_dofs]
    system.reduced_matrix = system.matrix[interior][:, interior].tocsr()
    system.reduced_rhs = system.rhs[interior] - a_ib @ values[dof_map.boundary_dofs]
    system.boundary_values = values
    system.interior = interior


def _cg(matrix, b, tol, maxiter):
    """Jacobi-preconditioned conjugate gradients with SPD monitoring."""
    diag = matrix.diagonal()
    if np.any(diag <= 0.0):
        raise NotSPDError("nonpositive diagonal entry in reduced matrix")
    bnorm = float(np.linalg.norm(b))
    x = np.zeros_like(b)
    if bnorm == 0.0:
        return x
    r = b.copy()
    z = r / diag
    p = z.copy()
    rz = float(r @ z)
    for _ in range(maxiter):
        ap = matrix @ p
        pap = float(p @ ap)
        if pap <= 0.0:
            raise NotSPDError(f"non-positive curvature p.A.p = {pap:.3e}")
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        if float(np.linalg.norm(r)) <= tol * bnorm:
            return x
        z = r / diag
        rz_next = float(r @ z)
        p = z + (rz_next / rz) * p
        rz = rz_next
    raise SolverError(f"CG did not reach relative residual {tol:.1e} "
                      f"in {maxiter} iterations")


def solve(system: LinearSystem, method: str = "cg", tol: float = 1e-12,
          maxiter: int | None = None) -> np.ndarray:
    """Solve the eliminated system and reconstruct the full DoF vector.

    ``method`` is "cg" (Jacobi-preconditioned, relative-residual tolerance
    ``tol``) or "direct" (dense Cholesky, limited to small systems).
    """
    if system.reduced_matrix is None:
        raise SolverError("apply_dirichlet must run before solve")
    a_mat = system.reduced_matrix
    b = system.reduced_rhs
    n = a_mat.shape[0]
    if method == "cg":
        x = _cg(a_mat, b, tol, maxiter if maxiter is not None else max(1000, 40 * n))
    elif method == "direct":
        if n > _DENSE_LIMIT:
            raise SolverError(f"dense direct solve limited to {_DENSE_LIMIT} "
                              f"unknowns, system has {n}")
        try:
            x = cho_solve(cho_factor(a_mat.toarray()), b)
        except LinAlgError as exc:
            raise NotSPDError(f"dense Cholesky failed: {exc}") from None
    else:
        raise SolverError(f"unknown solver method {method!r}")
    out = system.boundary_values.copy()
    out[system.interior] = x
    return out
