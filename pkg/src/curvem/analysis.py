"""Manufactured problems, projection-based error norms and convergence rates.

Errors compare the exact solution with the H1 projection of the discrete
solution, elementwise: err_H1 is the broken H1 seminorm of
u_ex - Pi_nabla u_h relative to |u_ex|_1, err_L2 the L2 norm of the same
difference relative to ||u_ex||_0.  Both are integrated with boosted
Green-rule quadrature, so exactly curved elements are measured on the true
geometry.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .geometry import BoundaryCurve, graph_curve
from .mesh import Mesh, build_annulus_interface_mesh, build_mapped_tensor_mesh, \
    curved_polygon, straighten_mesh
from .quadrature import curved_polygon_quadrature
from .solver import apply_dirichlet, assemble, build_dof_map, solve
from .vem import Coefficient, interpolate, local_operators


def _by_label(table, label):
    return table[label] if isinstance(table, Mapping) else table


@dataclass(frozen=True)
class ManufacturedProblem:
    """An exact solution with matching data on a mesh family.

    ``exact``, ``gradient`` and ``source`` are vectorized callables, or
    mappings from element label to callables when the solution has
    different smooth branches per subdomain.  ``boundary`` supplies the
    Dirichlet data; ``chord_boundary``, if set, is the data used after
    ``straighten_mesh`` (where former curve points moved onto chords).
    """

    name: str
    mesh_factory: Callable[[int], Mesh]
    diffusion: Mapping[int, float] | float
    exact: Mapping[int, Callable] | Callable
    gradient: Mapping[int, Callable] | Callable
    source: Mapping[int, Callable] | Callable
    boundary: Callable
    chord_boundary: Callable | None = None

    def exact_for(self, label: int) -> Callable:
        return _by_label(self.exact, label)

    def gradient_for(self, label: int) -> Callable:
        return _by_label(self.gradient, label)

    def coefficient(self) -> Coefficient:
        return Coefficient(diffusion=self.diffusion, source=self.source)


def test1_boundary_curves() -> tuple[BoundaryCurve, BoundaryCurve]:
    """The two sinusoidal graphs bounding the first test domain."""
    bottom = graph_curve("Gamma1", amplitude=1.0 / 20.0, frequency=np.pi)
    top = graph_curve("Gamma2", amplitude=1.0 / 20.0, frequency=3.0 * np.pi, offset=1.0)
    return bottom, top


def test1_problem() -> ManufacturedProblem:
    """Poisson problem between two sinusoidal graphs, solution vanishing on them.

    u = -(y - g1(x)) (y - g2(x)) (3 + sin(5x) sin(7y)) with
    g1 = sin(pi x)/20 and g2 = 1 + sin(3 pi x)/20; the source is the
    hand-differentiated -Laplacian(u).
    """
    bottom, top = test1_boundary_curves()

    def g1(x):
        return np.sin(np.pi * x) / 20.0

    def g2(x):
        return 1.0 + np.sin(3.0 * np.pi * x) / 20.0

    def dg1(x):
        return np.pi * np.cos(np.pi * x) / 20.0

    def dg2(x):
        return 3.0 * np.pi * np.cos(3.0 * np.pi * x) / 20.0

    def ddg1(x):
        return -np.pi ** 2 * np.sin(np.pi * x) / 20.0

    def ddg2(x):
        return -9.0 * np.pi ** 2 * np.sin(3.0 * np.pi * x) / 20.0

    def wf(x, y):
        return 3.0 + np.sin(5.0 * x) * np.sin(7.0 * y)

    def exact(x, y):
        return -(y - g1(x)) * (y - g2(x)) * wf(x, y)

    def gradient(x, y):
        p = (y - g1(x)) * (y - g2(x))
        px = -dg1(x) * (y - g2(x)) - dg2(x) * (y - g1(x))
        py = 2.0 * y - g1(x) - g2(x)
        w = wf(x, y)
        wx = 5.0 * np.cos(5.0 * x) * np.sin(7.0 * y)
        wy = 7.0 * np.sin(5.0 * x) * np.cos(7.0 * y)
        return -(px * w + p * wx), -(py * w + p * wy)

    def source(x, y):
        # f = -lap(u) = lap(p w) with p = (y - g1)(y - g2)
        p = (y - g1(x)) * (y - g2(x))
        px = -dg1(x) * (y - g2(x)) - dg2(x) * (y - g1(x))
        pxx = -ddg1(x) * (y - g2(x)) - ddg2(x) * (y - g1(x)) + 2.0 * dg1(x) * dg2(x)
        py = 2.0 * y - g1(x) - g2(x)
        w = wf(x, y)
        wx = 5.0 * np.cos(5.0 * x) * np.sin(7.0 * y)
        wy = 7.0 * np.sin(5.0 * x) * np.cos(7.0 * y)
        lap_w = -74.0 * np.sin(5.0 * x) * np.sin(7.0 * y)
        return (pxx + 2.0) * w + 2.0 * (px * wx + py * wy) + p * lap_w

    def chord_boundary(x, y):
        # exact values on the fixed lateral sides, zero on the chords that
        # replaced the curved top and bottom
        x = np.asarray(x, float)
        lateral = (x < 1e-9) | (x > 1.0 - 1e-9)
        return np.where(lateral, exact(x, y), 0.0)

    return ManufacturedProblem(
        name="test1",
        mesh_factory=lambda n: build_mapped_tensor_mesh(n, bottom, top),
        diffusion=1.0, exact=exact, gradient=gradient, source=source,
        boundary=exact, chord_boundary=chord_boundary)


def test2_problem() -> ManufacturedProblem:
    """Interface problem on the unit disk, diffusion 5 outside r = 1/2, 1 inside.

    The radially symmetric exact solution is C1-matched across the
    interface and vanishes on the unit circle; the source is piecewise
    constant.
    """
    log2 = float(np.log(2.0))

    def u_outer(x, y):
        r2 = x * x + y * y
        return -r2 / 20.0 - np.log(r2) / 20.0 + 1.0 / 20.0

    def u_inner(x, y):
        r2 = x * x + y * y
        return -1.25 * r2 + 0.35 + log2 / 10.0

    def grad_outer(x, y):
        r2 = x * x + y * y
        factor = -0.1 - 0.1 / r2
        return factor * x, factor * y

    def grad_inner(x, y):
        return -2.5 * x, -2.5 * y

    def zero(x, y):
        return np.zeros(np.shape(x))

    return ManufacturedProblem(
        name="test2",
        mesh_factory=lambda n: build_annulus_interface_mesh(n, 4 * n),
        diffusion={1: 5.0, 2: 1.0},
        exact={1: u_outer, 2: u_inner},
        gradient={1: grad_outer, 2: grad_inner},
        source={1: lambda x, y: np.ones(np.shape(x)),
                2: lambda x, y: np.full(np.shape(x), 5.0)},
        boundary=zero)


def compute_errors(mesh: Mesh, k: int, solution: np.ndarray,
                   problem: ManufacturedProblem, system=None,
                   boost: int = 2) -> tuple[float, float]:
    """Relative H1-seminorm and L2 errors of u_ex - Pi_nabla u_h.

    Integrated elementwise at degree 2k+2 (plus the curved-side boost);
    reuses the local operators of ``system`` when given.
    """
    dof_map = build_dof_map(mesh, k) if system is None else system.dof_map
    num_h1 = den_h1 = num_l2 = den_l2 = 0.0
    coeff = problem.coefficient()
    for p, element in enumerate(mesh.elements):
        if system is None:
            ops = local_operators(mesh, p, k, coeff, boost=boost)
        else:
            ops = system.local_operators[p]
        coeffs = ops.pi_nabla @ solution[dof_map.element_dofs(ops)]
        rule = curved_polygon_quadrature(curved_polygon(mesh, p), k + 2, boost)
        x, y = rule.points[:, 0], rule.points[:, 1]
        w = rule.weights
        basis = ops.basis
        uh = basis.eval(x, y) @ coeffs
        gxb, gyb = basis.grad(x, y)
        uhx, uhy = gxb @ coeffs, gyb @ coeffs
        ue = problem.exact_for(element.label)(x, y)
        uex, uey = problem.gradient_for(element.label)(x, y)
        num_h1 += w @ ((uex - uhx) ** 2 + (uey - uhy) ** 2)
        den_h1 += w @ (uex ** 2 + uey ** 2)
        num_l2 += w @ ((ue - uh) ** 2)
        den_l2 += w @ (ue ** 2)
    return float(np.sqrt(num_h1 / den_h1)), float(np.sqrt(num_l2 / den_l2))


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    h: float
    n_dof: int
    err_h1: float
    err_l2: float


@dataclass(frozen=True)
class RateFit:
    """Least-squares slopes plus the rate of each refinement interval."""

    lsq_h1: float
    lsq_l2: float
    pairwise_h1: list[float]
    pairwise_l2: list[float]

    @property
    def last_h1(self) -> float:
        return self.pairwise_h1[-1]

    @property
    def last_l2(self) -> float:
        return self.pairwise_l2[-1]


@dataclass
class ConvergenceReport:
    problem: str
    k: int
    rows: list[ConvergenceRow]

    def to_csv(self) -> str:
        """Deterministic CSV with per-interval rates."""
        lines = ["n,h,n_dof,err_h1,err_l2,rate_h1,rate_l2"]
        fit = fit_rates(self)
        for i, row in enumerate(self.rows):
            rate_h1 = repr(fit.pairwise_h1[i - 1]) if i else ""
            rate_l2 = repr(fit.pairwise_l2[i - 1]) if i else ""
            lines.append(f"{row.n},{row.h!r},{row.n_dof},{row.err_h1!r},"
                         f"{row.err_l2!r},{rate_h1},{rate_l2}")
        return "\n".join(lines) + "\n"


def fit_rates(report: ConvergenceReport) -> RateFit:
    """Convergence rates from a report's error columns.

    Pairwise rates are log(e_i/e_{i-1}) / log(h_i/h_{i-1}); the global
    slope is the least-squares fit of log(err) against log(h).
    """
    h = np.array([row.h for row in report.rows])
    if len(h) < 2:
        raise ValueError("need at least two refinements to fit rates")
    rates = []
    for errs in ([row.err_h1 for row in report.rows],
                 [row.err_l2 for row in report.rows]):
        e = np.array(errs)
        pairwise = [float(r) for r in np.log(e[1:] / e[:-1]) / np.log(h[1:] / h[:-1])]
        slope = float(np.polyfit(np.log(h), np.log(e), 1)[0])
        rates.append((slope, pairwise))
    return RateFit(lsq_h1=rates[0][0], lsq_l2=rates[1][0],
                   pairwise_h1=rates[0][1], pairwise_l2=rates[1][1])


def run_convergence(problem: ManufacturedProblem, k: int, ns, *,
                    meshes=None, straighten: bool = False,
                    solver_method: str = "cg", tol: float = 1e-12,
                    boost: int = 2, maxiter: int | None = None) -> ConvergenceReport:
    """Solve the problem over a mesh family and collect errors per level.

    Meshes come from the problem's factory at each level in ``ns`` unless a
    prebuilt list is passed in ``meshes``.  With ``straighten=True`` every
    mesh is reduced to its chord polygon before solving (the exact solution
    and error norms are unchanged), using the problem's chord boundary data
    if it defines any.
    """
    rows = []
    boundary = problem.boundary
    if straighten and problem.chord_boundary is not None:
        boundary = problem.chord_boundary
    if meshes is not None and len(meshes) != len(ns):
        raise ValueError("meshes and ns must have matching lengths")
    for level, n in enumerate(ns):
        mesh = problem.mesh_factory(n) if meshes is None else meshes[level]
        if straighten:
            mesh = straighten_mesh(mesh)
        system = assemble(mesh, k, problem.coefficient(), boost=boost)
        apply_dirichlet(system, boundary)
        solution = solve(system, method=solver_method, tol=tol, maxiter=maxiter)
        err_h1, err_l2 = compute_errors(mesh, k, solution, problem,
                                        system=system, boost=boost)
        rows.append(ConvergenceRow(n=n, h=mesh.h, n_dof=system.dof_map.total,
                                   err_h1=err_h1, err_l2=err_l2))
    name = problem.name + ("-straight" if straighten else "")
    return ConvergenceReport(problem=name, k=k, rows=rows)


_PATCH_POLYNOMIALS = {
    1: (lambda x, y: 2.0 * x - 3.0 * y + 1.0,
        lambda x, y: np.zeros(np.shape(x))),
    2: (lambda x, y: x * x + 2.0 * y * y - x * y + x,
        lambda x, y: np.full(np.shape(x), -6.0)),
    3: (lambda x, y: x ** 3 - 3.0 * x * y * y + y ** 3 + x * x,
        lambda x, y: -(6.0 * y + 2.0)),
    4: (lambda x, y: x ** 4 + y ** 4 - 3.0 * x * x * y * y + x * y,
        lambda x, y: -(6.0 * x * x + 6.0 * y * y)),
}


def run_patch_test(k: int, n: int = 2, solver_method: str = "direct",
                   boost: int = 2) -> float:
    """Max relative DoF error when the exact solution is a degree-k polynomial.

    Runs on a straightened mapped mesh (general quadrilaterals), where the
    discrete space contains P_k and the scheme must reproduce it to solver
    accuracy.
    """
    if k not in _PATCH_POLYNOMIALS:
        raise ValueError(f"no patch polynomial for k={k}")
    u, f = _PATCH_POLYNOMIALS[k]
    bottom, top = test1_boundary_curves()
    mesh = straighten_mesh(build_mapped_tensor_mesh(n, bottom, top))
    system = assemble(mesh, k, Coefficient(diffusion=1.0, source=f), boost=boost)
    apply_dirichlet(system, u)
    solution = solve(system, method=solver_method, tol=1e-14)
    reference = np.zeros(system.dof_map.total)
    for p in range(len(mesh.elements)):
        ops = system.local_operators[p]
        reference[system.dof_map.element_dofs(ops)] = interpolate(mesh, p, k, u)
    scale = float(np.max(np.abs(reference)))
    return float(np.max(np.abs(solution - reference))) / scale
