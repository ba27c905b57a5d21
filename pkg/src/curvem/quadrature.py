"""Gauss rules on intervals, edges and (curved) polygons.

The 2D rules integrate over a polygon bounded by straight sides and
optionally one or more exactly parametrized curved sides, without any
subdivision into triangles: the double integral is reduced to the boundary
by Green's theorem applied to the x-primitive of the integrand, and the
resulting line integrals are handled by nested Gauss-Legendre rules.  With
M+1 points per direction the rule is exact for polynomials of degree 2M on
straight sides; on curved sides the integrand is no longer polynomial in
the parameter and the point count is raised instead (see
``curved_polygon_quadrature``).

Nodes can fall outside the region (between the boundary and the vertical
line x = alpha), so integrands must be defined and smooth on the rule's
bounding rectangle, recorded in the rule metadata.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import CurveSegment

_MAX_POINTS = 64


class QuadratureError(Exception):
    """Raised for invalid rule requests or degenerate integration domains."""


@dataclass(frozen=True)
class QuadratureRule1D:
    """Nodes (ascending, in [-1, 1]) and positive weights summing to 2."""

    nodes: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class QuadratureRule2D:
    """Planar rule with signed weights.

    ``bounding_rect`` is (xmin, xmax, ymin, ymax) covering every node;
    integrands must be continuous there, not only on the element, because
    Green-rule nodes may leave the element.  ``straight_points`` and
    ``curved_points`` record the per-direction point counts used.
    """

    points: np.ndarray
    weights: np.ndarray
    bounding_rect: tuple[float, float, float, float]
    straight_points: int
    curved_points: int

    def integrate(self, f) -> float:
        """Apply the rule to a vectorized integrand f(x, y)."""
        return float(self.weights @ f(self.points[:, 0], self.points[:, 1]))


def _legendre_pair(n: int, x: np.ndarray):
    """P_{n-1}(x) and P_n(x) by the three-term recurrence."""
    pm = np.ones_like(x)
    p = x.copy()
    for m in range(2, n + 1):
        pm, p = p, ((2 * m - 1) * x * p - (m - 1) * pm) / m
    return pm, p


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> QuadratureRule1D:
    """n-point Gauss-Legendre rule on [-1, 1], exact for degree 2n-1.

    Nodes are Newton-refined from the Chebyshev asymptotic guesses to
    1e-15; weights use 2 / ((1 - x^2) P_n'(x)^2).
    """
    if not 1 <= n <= _MAX_POINTS:
        raise QuadratureError(f"gauss_legendre: n={n} outside [1, {_MAX_POINTS}]")
    if n == 1:
        return _freeze_rule(np.zeros(1), np.full(1, 2.0))
    i = np.arange(1, n + 1)
    x = np.cos(np.pi * (4 * i - 1) / (4 * n + 2))
    for _ in range(100):
        pm, p = _legendre_pair(n, x)
        dp = n * (x * p - pm) / (x * x - 1.0)
        dx = p / dp
        x -= dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    else:
        raise QuadratureError(f"gauss_legendre: Newton iteration stalled for n={n}")
    pm, p = _legendre_pair(n, x)
    dp = n * (x * p - pm) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    x, w = x[order], w[order]
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return _freeze_rule(x, w)


@lru_cache(maxsize=None)
def gauss_lobatto(n: int) -> QuadratureRule1D:
    """n-point Gauss-Lobatto rule on [-1, 1] including both endpoints.

    Exact for degree 2n-3.  Interior nodes are the roots of P_{n-1}',
    Newton-refined from Chebyshev-Lobatto guesses; weights are
    2 / (n (n-1) P_{n-1}(x)^2).
    """
    if not 2 <= n <= _MAX_POINTS:
        raise QuadratureError(f"gauss_lobatto: n={n} outside [2, {_MAX_POINTS}]")
    if n == 2:
        return _freeze_rule(np.array([-1.0, 1.0]), np.array([1.0, 1.0]))
    m = n - 1
    j = np.arange(1, n - 1)
    x = np.cos(np.pi * j / m)
    for _ in range(100):
        pm, p = _legendre_pair(m, x)
        dp = m * (x * p - pm) / (x * x - 1.0)
        d2p = (2.0 * x * dp - m * (m + 1) * p) / (1.0 - x * x)
        dx = dp / d2p
        x -= dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    else:
        raise QuadratureError(f"gauss_lobatto: Newton iteration stalled for n={n}")
    nodes = np.concatenate([[-1.0], np.sort(x), [1.0]])
    nodes = 0.5 * (nodes - nodes[::-1])
    _, p = _legendre_pair(m, nodes)
    w = 2.0 / (n * m * p * p)
    w = 0.5 * (w + w[::-1])
    return _freeze_rule(nodes, w)


def _freeze_rule(nodes, weights) -> QuadratureRule1D:
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule1D(nodes=nodes, weights=weights)


def lagrange_values(nodes, x) -> np.ndarray:
    """Values of the Lagrange basis on ``nodes`` at points ``x``.

    Barycentric form; entry [i, j] is ell_j(x[i]).
    """
    nodes = np.asarray(nodes, dtype=float)
    x = np.asarray(x, dtype=float)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    bw = 1.0 / np.prod(diff, axis=1)
    dx = x[:, None] - nodes[None, :]
    hit_i, hit_j = np.nonzero(dx == 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = bw[None, :] / dx
        vals = terms / np.sum(terms, axis=1, keepdims=True)
    vals[hit_i] = 0.0
    vals[hit_i, hit_j] = 1.0
    return vals


@dataclass(frozen=True)
class EdgeQuadrature:
    """Rule for ds-integrals along one edge.

    ``params`` are curve parameters t for curved edges and reference
    coordinates in [-1, 1] for straight ones; ``points`` are the physical
    nodes and ``weights`` include the arc-length metric.
    """

    params: np.ndarray
    points: np.ndarray
    weights: np.ndarray


def edge_quadrature(geometry, n: int, family: str = "legendre") -> EdgeQuadrature:
    """Quadrature for integrals ds along a straight or curved edge.

    Parameters
    ----------
    geometry : (p0, p1) pair of points, or CurveSegment
    n : int
        Point count.
    family : "legendre" or "lobatto"
    """
    if family == "legendre":
        rule = gauss_legendre(n)
    elif family == "lobatto":
        rule = gauss_lobatto(n)
    else:
        raise QuadratureError(f"unknown quadrature family {family!r}")
    if isinstance(geometry, CurveSegment):
        t0, t1 = geometry.t0, geometry.t1
        half = 0.5 * (t1 - t0)
        t = 0.5 * (t0 + t1) + half * rule.nodes
        points = geometry.curve.eval(t)
        d = geometry.curve.eval_derivative(t)
        weights = rule.weights * half * np.hypot(d[:, 0], d[:, 1])
        return EdgeQuadrature(params=t, points=points, weights=weights)
    p0 = np.asarray(geometry[0], dtype=float)
    p1 = np.asarray(geometry[1], dtype=float)
    length = float(np.hypot(*(p1 - p0)))
    if length < 1e-300:
        raise QuadratureError("degenerate straight edge")
    points = p0[None, :] + 0.5 * (rule.nodes[:, None] + 1.0) * (p1 - p0)[None, :]
    weights = rule.weights * 0.5 * length
    return EdgeQuadrature(params=rule.nodes.copy(), points=points, weights=weights)


@dataclass(frozen=True)
class StraightPiece:
    """One straight boundary side, traversed p0 -> p1."""

    p0: np.ndarray
    p1: np.ndarray


@dataclass(frozen=True)
class CurvedPiece:
    """One curved boundary side; ``reversed`` means traversal runs t1 -> t0."""

    segment: CurveSegment
    reversed: bool = False


@dataclass(frozen=True)
class CurvedPolygon:
    """Counterclockwise boundary description of one element.

    ``vertices`` is the chord polygon (one row per corner); ``pieces`` lists
    the boundary sides in traversal order, each straight or curved.
    """

    vertices: np.ndarray
    pieces: tuple

    @classmethod
    def from_vertices(cls, vertices) -> "CurvedPolygon":
        """All-straight polygon from a CCW vertex loop."""
        v = np.asarray(vertices, dtype=float)
        pieces = tuple(StraightPiece(v[i], v[(i + 1) % len(v)]) for i in range(len(v)))
        return cls(vertices=v, pieces=pieces)

    @property
    def has_curved(self) -> bool:
        return any(isinstance(p, CurvedPiece) for p in self.pieces)


def _chord_area(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _signed_area(poly: CurvedPolygon) -> float:
    """Green-theorem signed area of the possibly curved boundary loop.

    The chord polygon alone cannot decide orientation: a strongly curved
    side (think half disk over a single diameter) can carry all the area.
    """
    total = 0.0
    rule = gauss_legendre(12)
    for piece in poly.pieces:
        if isinstance(piece, StraightPiece):
            total += 0.5 * (piece.p0[0] * piece.p1[1] - piece.p1[0] * piece.p0[1])
        else:
            seg = piece.segment
            sign = -1.0 if piece.reversed else 1.0
            half = 0.5 * (seg.t1 - seg.t0)
            t = 0.5 * (seg.t0 + seg.t1) + half * rule.nodes
            g = seg.curve.eval(t)
            d = seg.curve.eval_derivative(t)
            cross = g[:, 0] * d[:, 1] - g[:, 1] * d[:, 0]
            total += sign * 0.5 * half * float(rule.weights @ cross)
    return total


def _check_polygon(poly: CurvedPolygon) -> float:
    area = _signed_area(poly)
    scale = float(np.max(np.abs(poly.vertices))) + 1.0
    if abs(area) < 1e-14 * scale * scale:
        raise QuadratureError("degenerate (zero-area) polygon")
    if area < 0.0:
        raise QuadratureError("polygon must be counterclockwise")
    return area


def _straight_contribution(p0, p1, alpha, rule):
    """Green-rule nodes/weights for one straight side."""
    x0, y0 = p0
    x1, y1 = p1
    if y1 == y0:
        return None
    tj, vj = rule.nodes, rule.weights
    xj = 0.5 * (x0 + x1) + 0.5 * (x1 - x0) * tj
    yj = 0.5 * (y0 + y1) + 0.5 * (y1 - y0) * tj
    xm = 0.5 * (xj[:, None] + alpha) + 0.5 * (xj[:, None] - alpha) * tj[None, :]
    w = 0.25 * (y1 - y0) * (xj[:, None] - alpha) * vj[:, None] * vj[None, :]
    pts = np.stack([xm.ravel(), np.repeat(yj, len(tj))], axis=-1)
    return pts, w.ravel()


def _curved_contribution(piece: CurvedPiece, alpha, rule):
    """Green-rule nodes/weights for one curved side.

    The outer rule lives in parameter space; the traversal direction only
    flips the sign of dy = gamma_2' dt.
    """
    seg = piece.segment
    sign = -1.0 if piece.reversed else 1.0
    half = 0.5 * (seg.t1 - seg.t0)
    tj = 0.5 * (seg.t0 + seg.t1) + half * rule.nodes
    gamma = seg.curve.eval(tj)
    dgamma = seg.curve.eval_derivative(tj)
    xj, yj = gamma[:, 0], gamma[:, 1]
    vj = rule.weights
    xm = 0.5 * (xj[:, None] + alpha) + 0.5 * (xj[:, None] - alpha) * rule.nodes[None, :]
    w = (sign * half * 0.5 * (xj[:, None] - alpha)
         * dgamma[:, 1][:, None] * vj[:, None] * vj[None, :])
    pts = np.stack([xm.ravel(), np.repeat(yj, len(tj))], axis=-1)
    return pts, w.ravel()


def _assemble_rule(poly, n_straight, n_curved) -> QuadratureRule2D:
    _check_polygon(poly)
    alpha = float(np.mean(poly.vertices[:, 0]))
    rule_s = gauss_legendre(n_straight)
    rule_c = gauss_legendre(n_curved) if n_curved else None
    all_pts = []
    all_w = []
    for piece in poly.pieces:
        if isinstance(piece, StraightPiece):
            contrib = _straight_contribution(piece.p0, piece.p1, alpha, rule_s)
        else:
            contrib = _curved_contribution(piece, alpha, rule_c)
        if contrib is not None:
            all_pts.append(contrib[0])
            all_w.append(contrib[1])
    points = np.concatenate(all_pts, axis=0)
    weights = np.concatenate(all_w)
    xs = np.concatenate([points[:, 0], poly.vertices[:, 0]])
    ys = np.concatenate([points[:, 1], poly.vertices[:, 1]])
    rect = (float(xs.min()), float(xs.max()), float(ys.min()), float(ys.max()))
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule2D(points=points, weights=weights, bounding_rect=rect,
                            straight_points=n_straight, curved_points=n_curved)


def polygon_quadrature(poly: CurvedPolygon, M: int) -> QuadratureRule2D:
    """Green-rule quadrature on an all-straight polygon, exact for degree 2M.

    Uses (M+1)-point Gauss-Legendre rules in each direction, at most
    (M+1)^2 nodes per side.
    """
    if M < 0:
        raise QuadratureError(f"polygon_quadrature: M={M} must be nonnegative")
    if poly.has_curved:
        raise QuadratureError("polygon_quadrature: polygon has curved sides, "
                              "use curved_polygon_quadrature")
    return _assemble_rule(poly, M + 1, 0)


def curved_polygon_quadrature(poly: CurvedPolygon, k: int, boost: int = 2) -> QuadratureRule2D:
    """Green-rule quadrature sized for degree-k element computations.

    Straight sides get k points per direction (exact for degree 2k-2, the
    degree of products of gradients of degree-k polynomials); curved sides
    get k+1+boost points per direction, where the extra points compensate
    for the non-polynomial parametrization.  The counts are recorded on the
    returned rule.
    """
    if k < 1:
        raise QuadratureError(f"curved_polygon_quadrature: k={k} must be >= 1")
    if boost < 0:
        raise QuadratureError(f"curved_polygon_quadrature: boost={boost} must be >= 0")
    return _assemble_rule(poly, k, k + 1 + boost)
