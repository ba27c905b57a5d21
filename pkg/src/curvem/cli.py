"""Command-line driver: convergence experiments, mesh checks, quadrature audits.

Exit codes: 0 success, 1 threshold or audit violation, 2 configuration or
file-parse errors, 3 mesh conformity/quality failures, 4 solver failures.

Options can come from a flat ``key = value`` config file (``--config``);
command-line flags override file values and unknown keys are rejected.
Outputs (CSV tables plus a plain-text summary) are deterministic, so a
repeated run reproduces files byte for byte.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .analysis import (fit_rates, run_convergence, run_patch_test, test1_problem,
                       test2_problem)
from .geometry import CurveSegment, GeometryError, circle_curve
from .mesh import (Edge, Element, Mesh, MeshError, Vertex, curved_polygon,
                   straighten_mesh, validate_mesh)
from .mesh_io import MeshFormatError, import_mesh
from .quadrature import (CurvedPolygon, QuadratureError, curved_polygon_quadrature,
                         polygon_quadrature)
from .reference import fan_integrate, polygon_integrate
from .solver import SolverError

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_CONFIG = 2
EXIT_MESH = 3
EXIT_SOLVER = 4

EXPERIMENTS = ("test1-curved", "test1-straight", "test2", "patch", "quadrature-audit")

PATCH_TOL = 1e-9
POLYGON_AUDIT_TOL = 1e-12
DISK_AUDIT_TOL = 1e-10
CURVED_MONOMIAL_TOL = 1e-9
MONOTONICITY_FLOOR = 1e-13


class ConfigError(Exception):
    """Raised for unknown keys or malformed option values."""


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved options of one ``curvem run`` invocation."""

    experiment: str
    k_list: tuple[int, ...]
    n_list: tuple[int, ...]
    mesh_files: tuple[str, ...]
    rho: float
    boost: int
    solver: str
    tol: float
    out_dir: str
    seed: int
    trials: int
    m_list: tuple[int, ...]
    min_rate_h1: float | None
    min_rate_l2: float | None
    max_rate_h1: float | None
    max_rate_l2: float | None


_DEFAULT_NS = {"test1-curved": (4, 8, 16, 32), "test1-straight": (4, 8, 16, 32),
               "test2": (2, 4, 8, 16), "patch": (2,), "quadrature-audit": (2,)}
_DEFAULT_RHO = {"test2": 0.03}
_DEFAULT_SOLVER = {"patch": "direct"}


def _parse_int_list(text: str, what: str) -> tuple[int, ...]:
    try:
        values = tuple(int(tok) for tok in str(text).split(",") if tok.strip())
    except ValueError:
        raise ConfigError(f"bad {what} list {text!r}") from None
    if not values:
        raise ConfigError(f"empty {what} list")
    return values


def _parse_float(text, what: str) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"bad {what} value {text!r}") from None


def _parse_int(text, what: str) -> int:
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ConfigError(f"bad {what} value {text!r}") from None


_FILE_KEYS = {
    "k": lambda v: ("k_list", _parse_int_list(v, "k")),
    "n": lambda v: ("n_list", _parse_int_list(v, "n")),
    "mesh": lambda v: ("mesh_files", tuple(v.split())),
    "rho": lambda v: ("rho", _parse_float(v, "rho")),
    "boost": lambda v: ("boost", _parse_int(v, "boost")),
    "solver": lambda v: ("solver", v),
    "tol": lambda v: ("tol", _parse_float(v, "tol")),
    "out": lambda v: ("out_dir", v),
    "seed": lambda v: ("seed", _parse_int(v, "seed")),
    "trials": lambda v: ("trials", _parse_int(v, "trials")),
    "M": lambda v: ("m_list", _parse_int_list(v, "M")),
    "min_rate_h1": lambda v: ("min_rate_h1", _parse_float(v, "min_rate_h1")),
    "min_rate_l2": lambda v: ("min_rate_l2", _parse_float(v, "min_rate_l2")),
    "max_rate_h1": lambda v: ("max_rate_h1", _parse_float(v, "max_rate_h1")),
    "max_rate_l2": lambda v: ("max_rate_l2", _parse_float(v, "max_rate_l2")),
}


def _read_config_file(path: str) -> dict[str, tuple[str, object]]:
    """Parse ``key = value`` lines into resolved (field, value) pairs."""
    updates = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FILE_KEYS:
            raise ConfigError(f"{path}:{ln}: unknown key {key!r}")
        updates[key] = _FILE_KEYS[key](value)
    return updates


def parse_config(args: argparse.Namespace) -> RunConfig:
    """Resolve defaults, config file and command-line flags into a RunConfig."""
    experiment = args.experiment
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}, "
                          f"choose from {', '.join(EXPERIMENTS)}")
    config = RunConfig(
        experiment=experiment,
        k_list=(1, 2, 3), n_list=_DEFAULT_NS[experiment], mesh_files=(),
        rho=_DEFAULT_RHO.get(experiment, 0.05), boost=2,
        solver=_DEFAULT_SOLVER.get(experiment, "cg"), tol=1e-12,
        out_dir="curvem-out", seed=1234, trials=50, m_list=(1, 2, 3, 4),
        min_rate_h1=None, min_rate_l2=None, max_rate_h1=None, max_rate_l2=None)
    if getattr(args, "config", None):
        updates = _read_config_file(args.config)
        config = replace(config, **dict(updates.values()))
    overrides = {}
    for flag, key in (("k", "k"), ("n", "n"), ("rho", "rho"), ("boost", "boost"),
                      ("solver", "solver"), ("tol", "tol"), ("out", "out"),
                      ("seed", "seed"), ("trials", "trials"), ("M", "M"),
                      ("min_rate_h1", "min_rate_h1"), ("min_rate_l2", "min_rate_l2"),
                      ("max_rate_h1", "max_rate_h1"), ("max_rate_l2", "max_rate_l2")):
        value = getattr(args, flag, None)
        if value is not None:
            field_name, parsed = _FILE_KEYS[key](value)
            overrides[field_name] = parsed
    if getattr(args, "mesh", None):
        overrides["mesh_files"] = tuple(args.mesh)
    config = replace(config, **overrides)
    _validate_config(config)
    return config


def _validate_config(config: RunConfig) -> None:
    if not config.k_list or any(not 1 <= k <= 4 for k in config.k_list):
        raise ConfigError(f"k must lie in 1..4, got {config.k_list}")
    if not config.n_list or any(n < 1 for n in config.n_list):
        raise ConfigError(f"n must be positive, got {config.n_list}")
    if config.solver not in ("cg", "direct"):
        raise ConfigError(f"solver must be 'cg' or 'direct', got {config.solver!r}")
    if not config.tol > 0.0:
        raise ConfigError(f"tol must be positive, got {config.tol}")
    if config.boost < 0:
        raise ConfigError(f"boost must be nonnegative, got {config.boost}")
    if not 0.0 < config.rho <= 0.5:
        raise ConfigError(f"rho must lie in (0, 0.5], got {config.rho}")
    if config.trials < 1:
        raise ConfigError(f"trials must be at least 1, got {config.trials}")
    if any(m < 1 for m in config.m_list):
        raise ConfigError(f"M must be positive, got {config.m_list}")


# ---------------------------------------------------------------------------
# quadrature audit pieces (also exercised by the acceptance tests)


def random_star_polygon(rng: np.random.Generator) -> np.ndarray:
    """Random simple polygon: star-shaped, in the positive quadrant.

    Positive coordinates keep monomial integrals away from cancellation, so
    relative comparisons against the oracle stay meaningful.
    """
    nv = int(rng.integers(5, 11))
    angles = (np.arange(nv) + rng.uniform(0.15, 0.85, nv)) * 2.0 * np.pi / nv
    radii = rng.uniform(0.3, 0.9, nv)
    center = rng.uniform(1.0, 1.5, 2)
    return center[None, :] + radii[:, None] * np.stack(
        [np.cos(angles), np.sin(angles)], axis=-1)


def _monomials_up_to(degree: int):
    return [(a, d - a) for d in range(degree + 1) for a in range(d + 1)]


def audit_polygon_exactness(m_list, trials: int, seed: int):
    """Worst relative deviation from the triangulation oracle per (M, trial)."""
    rng = np.random.default_rng(seed)
    rows = []
    for m_order in m_list:
        for trial in range(trials):
            verts = random_star_polygon(rng)
            rule = polygon_quadrature(CurvedPolygon.from_vertices(verts), m_order)
            worst = 0.0
            for a, b in _monomials_up_to(2 * m_order):
                f = lambda x, y, a=a, b=b: x ** a * y ** b
                value = rule.integrate(f)
                oracle = polygon_integrate(verts, f, n=12)
                worst = max(worst, abs(value - oracle) / max(abs(oracle), 1e-30))
            rows.append((m_order, trial, worst))
    return rows


def quarter_disk_mesh() -> Mesh:
    """Unit disk split into four quarter elements with exactly curved arcs."""
    circle = circle_curve("Gamma", (0.0, 0.0), 1.0)
    ts = [0.0, 0.5 * np.pi, np.pi, 1.5 * np.pi, 2.0 * np.pi]
    vertices = [Vertex(position=np.zeros(2))]
    vertices += [Vertex(position=circle.eval(t), curve_ref=("Gamma", t))
                 for t in ts[:4]]
    edges = [Edge(v0=0, v1=1 + q) for q in range(4)]
    edges += [Edge(v0=1 + q, v1=1 + (q + 1) % 4,
                   segment=CurveSegment(circle, ts[q], ts[q + 1])) for q in range(4)]
    elements = [Element(edge_loop=[(q, 1), (4 + q, 1), ((q + 1) % 4, -1)])
                for q in range(4)]
    return Mesh.build(vertices, edges, elements)


def audit_disk_area(boost: int = 2, k: int = 4) -> float:
    """Absolute gap between pi and the quadrature area of the quarter-disk mesh."""
    mesh = quarter_disk_mesh()
    one = lambda x, y: np.ones(np.shape(x))
    total = sum(curved_polygon_quadrature(curved_polygon(mesh, p), k, boost).integrate(one)
                for p in range(len(mesh.elements)))
    return abs(total - float(np.pi))


def _curved_sample_element():
    """First element of the coarse sinusoidal-boundary mesh (one curved side)."""
    problem = test1_problem()
    mesh = problem.mesh_factory(4)
    return curved_polygon(mesh, 0)


def audit_curved_monomials(boost: int = 2):
    """Relative gap to the fan oracle for monomials up to degree 4."""
    poly = _curved_sample_element()
    rule = curved_polygon_quadrature(poly, 3, boost)
    rows = []
    for a, b in _monomials_up_to(4):
        f = lambda x, y, a=a, b=b: x ** a * y ** b
        oracle = fan_integrate(poly, f, n=32)
        rel = abs(rule.integrate(f) - oracle) / max(abs(oracle), 1e-30)
        rows.append((a, b, rel))
    return rows


def audit_boost_monotonicity(boosts=(0, 2, 4, 6)):
    """Worst oracle deviation per boost for a gentle and a strongly curved element.

    The error must not grow when the boost increases, down to a floor where
    both values sit at rounding level.
    """
    cases = [("test1-element", _curved_sample_element(), 3),
             ("quarter-disk", curved_polygon(quarter_disk_mesh(), 0), 3)]
    rows = []
    for name, poly, k in cases:
        errs = []
        for boost in boosts:
            rule = curved_polygon_quadrature(poly, k, boost)
            worst = 0.0
            for a, b in _monomials_up_to(4):
                f = lambda x, y, a=a, b=b: x ** a * y ** b
                oracle = fan_integrate(poly, f, n=32)
                worst = max(worst, abs(rule.integrate(f) - oracle) / max(abs(oracle), 1e-30))
            errs.append(worst)
        rows.append((name, tuple(boosts), errs))
    return rows


def monotone_within_floor(errs, floor: float = MONOTONICITY_FLOOR) -> bool:
    return all(errs[i + 1] <= errs[i] or errs[i + 1] <= floor
               for i in range(len(errs) - 1))


def _run_quadrature_audit(config: RunConfig) -> int:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_lines = ["check,case,value,threshold,status"]
    summary = [f"quadrature audit (seed {config.seed}, {config.trials} trials)"]
    ok = True

    poly_rows = audit_polygon_exactness(config.m_list, config.trials, config.seed)
    worst = max(rel for _, _, rel in poly_rows)
    for m_order, trial, rel in poly_rows:
        good = rel <= POLYGON_AUDIT_TOL
        ok &= good
        csv_lines.append(f"polygon-exactness,M={m_order} trial={trial},{rel!r},"
                         f"{POLYGON_AUDIT_TOL!r},{'pass' if good else 'FAIL'}")
    summary.append(f"polygon exactness vs triangulation oracle: worst relative "
                   f"deviation {worst:.3e} (tolerance {POLYGON_AUDIT_TOL:.0e})")

    gap = audit_disk_area(config.boost)
    good = gap <= DISK_AUDIT_TOL
    ok &= good
    csv_lines.append(f"disk-area,boost={config.boost},{gap!r},{DISK_AUDIT_TOL!r},"
                     f"{'pass' if good else 'FAIL'}")
    summary.append(f"unit-disk area gap {gap:.3e} (tolerance {DISK_AUDIT_TOL:.0e})")

    mono_rows = audit_curved_monomials(config.boost)
    worst = max(rel for _, _, rel in mono_rows)
    for a, b, rel in mono_rows:
        good = rel <= CURVED_MONOMIAL_TOL
        ok &= good
        csv_lines.append(f"curved-monomials,x^{a}y^{b},{rel!r},"
                         f"{CURVED_MONOMIAL_TOL!r},{'pass' if good else 'FAIL'}")
    summary.append(f"curved-element monomials vs fan oracle: worst relative "
                   f"deviation {worst:.3e} (tolerance {CURVED_MONOMIAL_TOL:.0e})")

    for name, boosts, errs in audit_boost_monotonicity():
        good = monotone_within_floor(errs)
        ok &= good
        for boost, err in zip(boosts, errs):
            csv_lines.append(f"boost-monotonicity,{name} boost={boost},{err!r},"
                             f"{MONOTONICITY_FLOOR!r},{'pass' if good else 'FAIL'}")
        pretty = ", ".join(f"{e:.3e}" for e in errs)
        summary.append(f"boost sweep on {name}: {pretty} "
                       f"({'monotone' if good else 'NOT monotone'})")

    summary.append(f"audit result: {'pass' if ok else 'FAIL'}")
    (out / "quadrature_audit.csv").write_text("\n".join(csv_lines) + "\n",
                                              encoding="utf-8")
    (out / "summary.txt").write_text("\n".join(summary) + "\n", encoding="utf-8")
    print("\n".join(summary))
    return EXIT_OK if ok else EXIT_THRESHOLD


# ---------------------------------------------------------------------------
# experiments


def _load_meshes(config: RunConfig, problem):
    if config.mesh_files:
        meshes = [import_mesh(path) for path in config.mesh_files]
        ns = tuple(range(1, len(meshes) + 1))
    else:
        meshes = [problem.mesh_factory(n) for n in config.n_list]
        ns = config.n_list
    return ns, meshes


def _validate_meshes(meshes, ns, rho: float) -> list[str]:
    problems = []
    for n, mesh in zip(ns, meshes):
        report = validate_mesh(mesh, rho)
        if not report.ok:
            bad = [q.element for q in report.elements if not q.ok]
            problems.append(
                f"mesh n={n}: {len(report.conformity_errors)} conformity errors, "
                f"{len(bad)} elements below rho={rho} "
                f"(worst edge ratio {report.worst_edge_ratio:.4f}, "
                f"worst star ratio {report.worst_star_ratio:.4f})")
    return problems


def _run_convergence_experiment(config: RunConfig) -> int:
    problem = test2_problem() if config.experiment == "test2" else test1_problem()
    straighten = config.experiment == "test1-straight"
    ns, meshes = _load_meshes(config, problem)
    if straighten:
        meshes = [straighten_mesh(m) for m in meshes]
    mesh_problems = _validate_meshes(meshes, ns, config.rho)
    if mesh_problems:
        print("\n".join(mesh_problems), file=sys.stderr)
        return EXIT_MESH

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = [f"experiment {config.experiment}",
               f"meshes: {config.mesh_files or ('generated, n=' + str(list(ns)))}"]
    violations = []
    for k in config.k_list:
        report = run_convergence(problem, k, ns, meshes=meshes, straighten=straighten,
                                 solver_method=config.solver, tol=config.tol,
                                 boost=config.boost)
        (out / f"{config.experiment}_k{k}.csv").write_text(report.to_csv(),
                                                           encoding="utf-8")
        fit = fit_rates(report)
        summary.append(f"k = {k}")
        summary.append("  n        h     n_dof       err_H1       err_L2")
        for row in report.rows:
            summary.append(f"  {row.n:<4d} {row.h:8.5f} {row.n_dof:7d} "
                           f"{row.err_h1:12.5e} {row.err_l2:12.5e}")
        summary.append(f"  last-interval rates: H1 {fit.last_h1:.3f}, "
                       f"L2 {fit.last_l2:.3f}; least-squares: "
                       f"H1 {fit.lsq_h1:.3f}, L2 {fit.lsq_l2:.3f}")
        for bound, value, label in (
                (config.min_rate_h1, fit.last_h1, "min_rate_h1"),
                (config.min_rate_l2, fit.last_l2, "min_rate_l2")):
            if bound is not None and value < bound:
                violations.append(f"k={k}: {label}={bound} violated ({value:.3f})")
        for bound, value, label in (
                (config.max_rate_h1, fit.last_h1, "max_rate_h1"),
                (config.max_rate_l2, fit.last_l2, "max_rate_l2")):
            if bound is not None and value > bound:
                violations.append(f"k={k}: {label}={bound} violated ({value:.3f})")
    if violations:
        summary.append("threshold violations:")
        summary.extend("  " + v for v in violations)
    else:
        summary.append("thresholds: none violated")
    (out / "summary.txt").write_text("\n".join(summary) + "\n", encoding="utf-8")
    print("\n".join(summary))
    return EXIT_THRESHOLD if violations else EXIT_OK


def _run_patch(config: RunConfig) -> int:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n = config.n_list[0]
    csv_lines = ["k,n,max_rel_dof_err,status"]
    summary = []
    ok = True
    for k in config.k_list:
        err = run_patch_test(k, n=n, solver_method=config.solver, boost=config.boost)
        good = err <= PATCH_TOL
        ok &= good
        csv_lines.append(f"{k},{n},{err!r},{'pass' if good else 'FAIL'}")
        summary.append(f"patch test k={k} (n={n}): max relative dof error {err:.3e} "
                       f"-> {'pass' if good else 'FAIL'} (tolerance {PATCH_TOL:.0e})")
    (out / "patch.csv").write_text("\n".join(csv_lines) + "\n", encoding="utf-8")
    (out / "summary.txt").write_text("\n".join(summary) + "\n", encoding="utf-8")
    print("\n".join(summary))
    return EXIT_OK if ok else EXIT_THRESHOLD


def run(config: RunConfig) -> int:
    """Execute one experiment described by a resolved RunConfig."""
    if config.experiment == "patch":
        return _run_patch(config)
    if config.experiment == "quadrature-audit":
        return _run_quadrature_audit(config)
    return _run_convergence_experiment(config)


def _cmd_validate(args) -> int:
    rho = _parse_float(args.rho, "rho")
    if not 0.0 < rho <= 0.5:
        raise ConfigError(f"rho must lie in (0, 0.5], got {rho}")
    mesh = import_mesh(args.meshfile)
    report = validate_mesh(mesh, rho)
    bad = [q for q in report.elements if not q.ok]
    print(f"{args.meshfile}: {len(mesh.elements)} elements, "
          f"worst edge ratio {report.worst_edge_ratio:.4f}, "
          f"worst star ratio {report.worst_star_ratio:.4f} (rho = {rho})")
    for message in report.conformity_errors:
        print(f"conformity: {message}")
    for q in bad[:20]:
        print(f"element {q.element}: edge ratio {q.edge_ratio:.4f}, "
              f"star ratio {q.star_ratio:.4f}")
    print("mesh quality: " + ("pass" if report.ok else "FAIL"))
    return EXIT_OK if report.ok else EXIT_MESH


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curvem",
        description="Virtual element solver on polygonal meshes with curved edges")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment")
    run_p.add_argument("experiment", help=f"one of: {', '.join(EXPERIMENTS)}")
    run_p.add_argument("--config", help="flat key = value option file")
    run_p.add_argument("--k", help="comma-separated polynomial degrees")
    run_p.add_argument("--n", help="comma-separated refinement levels")
    run_p.add_argument("--mesh", nargs="+", help="mesh files instead of generated meshes")
    run_p.add_argument("--rho", help="shape-regularity parameter")
    run_p.add_argument("--boost", help="extra quadrature points on curved sides")
    run_p.add_argument("--solver", help="cg or direct")
    run_p.add_argument("--tol", help="linear solver relative tolerance")
    run_p.add_argument("--out", help="output directory")
    run_p.add_argument("--seed", help="audit random seed")
    run_p.add_argument("--trials", help="audit polygon count")
    run_p.add_argument("--M", help="comma-separated audit rule orders")
    run_p.add_argument("--min-rate-h1", dest="min_rate_h1")
    run_p.add_argument("--min-rate-l2", dest="min_rate_l2")
    run_p.add_argument("--max-rate-h1", dest="max_rate_h1")
    run_p.add_argument("--max-rate-l2", dest="max_rate_l2")

    val_p = sub.add_parser("validate", help="check a mesh file")
    val_p.add_argument("meshfile")
    val_p.add_argument("--rho", required=True, help="shape-regularity parameter")

    audit_p = sub.add_parser("quadrature-audit",
                             help="shortcut for 'run quadrature-audit'")
    for flag in ("--config", "--M", "--trials", "--seed", "--boost", "--out"):
        audit_p.add_argument(flag)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "quadrature-audit":
            args.experiment = "quadrature-audit"
        return run(parse_config(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MeshFormatError as exc:
        print(f"mesh file error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MeshError, GeometryError, QuadratureError) as exc:
        print(f"mesh error: {exc}", file=sys.stderr)
        return EXIT_MESH
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
